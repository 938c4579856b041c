//! End-to-end simulation of the multihop amplify-and-forward uplink with a
//! one-bit front end.
//!
//! `K` single-antenna sources modulate independent messages onto a shared
//! Gray-labeled PSK constellation. Their signals pass through `hops - 1`
//! stages of `L` amplify-and-forward relays (full connectivity between
//! consecutive stages, flat Rayleigh fading on every link) and arrive at a
//! data center with `N_r` antennas. Every antenna output is quantized to
//! one bit per real dimension, so an observation is a sign pattern of
//! length `N = 2 * N_r` (real parts stacked above imaginary parts).
//!
//! Fading coefficients are drawn once per coherence block
//! ([`draw_channel`]) while receiver noise is fresh on every transmission
//! ([`transmit`]); training and payload phases share one realization.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Index of a joint message in the set `M` of all `m^K` possibilities.
///
/// The index is the base-`m` positional code of the message vector with
/// source 0's symbol most significant; see [`class_encode`].
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClassIndex(pub usize);

impl std::fmt::Display for ClassIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One symbol index in `{0, …, m-1}` per source.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct MessageVector(pub Vec<usize>);

impl MessageVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Encodes a message vector as its base-`m` positional code, source 0
/// most significant: `c = Σ_k w_k · m^(K-1-k)`.
///
/// Panics if the index would overflow `usize` or an entry is `≥ m`; both
/// indicate a caller bug.
pub fn class_encode(w: &MessageVector, m: usize) -> ClassIndex {
    let mut c = 0usize;
    for &w_k in &w.0 {
        assert!(w_k < m, "message symbol {w_k} out of range for order {m}");
        c = c
            .checked_mul(m)
            .and_then(|c| c.checked_add(w_k))
            .expect("class index overflows usize");
    }
    ClassIndex(c)
}

/// Inverse of [`class_encode`]: recovers the `K` symbol indices of class
/// `c`. Panics if `c ≥ m^K`.
pub fn class_decode(c: ClassIndex, k: usize, m: usize) -> MessageVector {
    let total = num_classes(k, m);
    assert!(c.0 < total, "class index {c} out of range for m^K = {total}");
    let mut w = vec![0usize; k];
    let mut rest = c.0;
    for slot in w.iter_mut().rev() {
        *slot = rest % m;
        rest /= m;
    }
    MessageVector(w)
}

/// `m^K`, panicking on overflow (a caller bug: such a class set could
/// never be enumerated anyway).
pub fn num_classes(k: usize, m: usize) -> usize {
    let k = u32::try_from(k).expect("source count overflows u32");
    m.checked_pow(k).expect("m^K overflows usize")
}

/// A sign pattern in `{-1, +1}^N` as produced by the one-bit front end.
///
/// Entries are stored packed, one bit per entry (set bit = `+1`), which
/// makes Hamming distances between observations a handful of XOR/popcount
/// instructions. Serialization round-trips through a plain `±1` byte
/// vector.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<i8>", into = "Vec<i8>")]
pub struct BinaryObservation {
    words: Vec<u64>,
    len: usize,
}

impl BinaryObservation {
    /// Builds an observation from explicit `±1` entries.
    pub fn from_pm1(entries: &[i8]) -> Result<Self> {
        let bits = entries
            .iter()
            .map(|&e| match e {
                1 => Ok(true),
                -1 => Ok(false),
                other => Err(Error::InvalidObservation(format!(
                    "entry {other} is not -1 or +1"
                ))),
            })
            .collect::<Result<Vec<bool>>>()?;
        Ok(Self::from_bits(&bits))
    }

    /// Builds an observation from booleans (`true` = `+1`).
    pub fn from_bits(bits: &[bool]) -> Self {
        let mut words = vec![0u64; bits.len().div_ceil(64)];
        for (i, &b) in bits.iter().enumerate() {
            if b {
                words[i / 64] |= 1u64 << (i % 64);
            }
        }
        BinaryObservation { words, len: bits.len() }
    }

    /// Applies the quantizer `sign(u) = +1 iff u ≥ 0` elementwise. Note
    /// `-0.0 ≥ 0.0` holds in IEEE arithmetic, so negative zero maps to
    /// `+1` like the closed interval demands.
    pub fn from_signs<I: IntoIterator<Item = f64>>(values: I) -> Self {
        let bits: Vec<bool> = values.into_iter().map(|u| u >= 0.0).collect();
        Self::from_bits(&bits)
    }

    /// Number of `±1` entries.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Entry `i` as `+1` or `-1`.
    pub fn get(&self, i: usize) -> i8 {
        assert!(i < self.len, "index {i} out of range for length {}", self.len);
        if self.words[i / 64] >> (i % 64) & 1 == 1 {
            1
        } else {
            -1
        }
    }

    /// Number of coordinates where `self` and `other` disagree.
    ///
    /// Squared Euclidean distance between `±1` vectors is exactly four
    /// times this value, so nearest-neighbor decisions can be made on
    /// Hamming distance alone.
    pub fn hamming(&self, other: &Self) -> u32 {
        assert_eq!(self.len, other.len, "observations of unequal length");
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones())
            .sum()
    }

    /// Entries as `±1` bytes.
    pub fn to_pm1(&self) -> Vec<i8> {
        (0..self.len).map(|i| self.get(i)).collect()
    }

    /// Entries as `±1.0` floats (dense form for the Gaussian detectors).
    pub fn to_f64_vec(&self) -> Vec<f64> {
        (0..self.len).map(|i| f64::from(self.get(i))).collect()
    }

    /// Iterator over entries as `+1` / `-1`.
    pub fn iter_pm1(&self) -> impl Iterator<Item = i8> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    pub(crate) fn words(&self) -> &[u64] {
        &self.words
    }
}

impl std::fmt::Debug for BinaryObservation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let pattern: String =
            self.iter_pm1().map(|e| if e == 1 { '+' } else { '-' }).collect();
        write!(f, "BinaryObservation({pattern})")
    }
}

impl TryFrom<Vec<i8>> for BinaryObservation {
    type Error = Error;

    fn try_from(entries: Vec<i8>) -> Result<Self> {
        Self::from_pm1(&entries)
    }
}

impl From<BinaryObservation> for Vec<i8> {
    fn from(obs: BinaryObservation) -> Vec<i8> {
        obs.to_pm1()
    }
}

/// Dimensions and power/noise levels of one network setup.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    /// Source count `K`.
    pub k: usize,
    /// Data-center receive antennas `N_r` (each contributes two one-bit
    /// outputs, so observations have `N = 2 * N_r` entries).
    pub n_r: usize,
    /// Relays per hop `L`.
    pub l: usize,
    /// Hop count; `hops = 2` is one relay stage, `hops = 1` a direct link.
    pub hops: usize,
    /// Constellation order `m` (a power of two; Gray-labeled PSK).
    pub m: usize,
    /// Per-node transmit power `P_t` (sources and relays alike).
    pub p_t: f64,
    /// Signal-to-noise ratio in dB; the noise variance is
    /// `σ_z² = P_t / SNR`. `f64::INFINITY` gives a noiseless network.
    pub snr_db: f64,
}

impl SystemConfig {
    pub fn new(
        k: usize,
        n_r: usize,
        l: usize,
        hops: usize,
        m: usize,
        p_t: f64,
        snr_db: f64,
    ) -> Result<Self> {
        if k == 0 {
            return Err(Error::config("k", "source count must be positive"));
        }
        if n_r < k {
            return Err(Error::config(
                "n_r",
                format!("need at least as many receive antennas as sources (n_r = {n_r} < k = {k})"),
            ));
        }
        if l == 0 {
            return Err(Error::config("l", "relay count must be positive"));
        }
        if hops == 0 {
            return Err(Error::config("hops", "hop count must be positive"));
        }
        if m < 2 || !m.is_power_of_two() || m > 256 {
            return Err(Error::config(
                "m",
                "constellation order must be a power of two in [2, 256] (Gray-labeled PSK)",
            ));
        }
        if !(p_t.is_finite() && p_t > 0.0) {
            return Err(Error::config("p_t", "transmit power must be positive and finite"));
        }
        if snr_db.is_nan() {
            return Err(Error::config("snr_db", "SNR must not be NaN"));
        }
        Ok(SystemConfig { k, n_r, l, hops, m, p_t, snr_db })
    }

    /// Observation length `N = 2 * N_r`.
    pub fn n(&self) -> usize {
        2 * self.n_r
    }

    /// Size of the joint message set, `m^K`.
    pub fn num_classes(&self) -> usize {
        num_classes(self.k, self.m)
    }

    /// Noise standard deviation `σ_z` implied by `P_t` and the SNR.
    pub fn noise_std(&self) -> f64 {
        if self.snr_db == f64::INFINITY {
            0.0
        } else {
            (self.p_t / 10f64.powf(self.snr_db / 10.0)).sqrt()
        }
    }

    /// The Gray-labeled PSK constellation shared by all sources.
    pub fn constellation(&self) -> ConstellationSet {
        ConstellationSet::gray_psk(self.m, self.p_t)
            .expect("constellation order was validated in SystemConfig::new")
    }
}

/// An ordered m-ary symbol set with average power `P_t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstellationSet {
    symbols: Vec<Complex64>,
}

impl ConstellationSet {
    /// Builds a constellation from explicit symbols, checking the average
    /// power constraint `(1/m)·Σ|s_i|² = p_t` to 1e-12 relative tolerance.
    pub fn new(symbols: Vec<Complex64>, p_t: f64) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::config("m", "constellation must not be empty"));
        }
        let avg: f64 =
            symbols.iter().map(|s| s.norm_sqr()).sum::<f64>() / symbols.len() as f64;
        if (avg - p_t).abs() > 1e-12 * p_t.max(1.0) {
            return Err(Error::config(
                "p_t",
                format!("constellation average power {avg} does not match P_t = {p_t}"),
            ));
        }
        Ok(ConstellationSet { symbols })
    }

    /// Gray-labeled PSK of order `m` (a power of two) with average power
    /// `p_t`.
    ///
    /// Phase slot `i` (angle `π/m + 2πi/m`) carries the label
    /// `i ^ (i >> 1)`, the binary-reflected Gray code, so neighboring
    /// symbols differ in exactly one label bit. For `m = 4` this is the
    /// familiar quadrant map `0 → (+1+j)/√2`, `1 → (-1+j)/√2`,
    /// `2 → (+1-j)/√2`, `3 → (-1-j)/√2` (times `√P_t`).
    pub fn gray_psk(m: usize, p_t: f64) -> Result<Self> {
        if m < 2 || !m.is_power_of_two() || m > 256 {
            return Err(Error::config(
                "m",
                "constellation order must be a power of two in [2, 256]",
            ));
        }
        if !(p_t.is_finite() && p_t > 0.0) {
            return Err(Error::config("p_t", "transmit power must be positive and finite"));
        }
        let radius = p_t.sqrt();
        let mut symbols = vec![Complex64::default(); m];
        for slot in 0..m {
            let label = slot ^ (slot >> 1);
            let angle = std::f64::consts::PI * (1.0 + 2.0 * slot as f64) / m as f64;
            symbols[label] = Complex64::from_polar(radius, angle);
        }
        Ok(ConstellationSet { symbols })
    }

    /// QPSK with average power `p_t`.
    pub fn qpsk(p_t: f64) -> Result<Self> {
        Self::gray_psk(4, p_t)
    }

    /// Constellation order `m`.
    pub fn order(&self) -> usize {
        self.symbols.len()
    }

    pub fn symbols(&self) -> &[Complex64] {
        &self.symbols
    }
}

/// Maps a symbol index to its constellation point.
pub fn modulate(w_k: usize, constellation: &ConstellationSet) -> Result<Complex64> {
    constellation.symbols.get(w_k).copied().ok_or_else(|| {
        Error::InvalidMessage(format!(
            "symbol index {w_k} out of range for order {}",
            constellation.order()
        ))
    })
}

/// A dense complex matrix in row-major order; just enough linear algebra
/// for hop propagation.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length mismatch");
        ComplexMatrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.cols + c]
    }

    /// Row `r` as a slice.
    pub fn row(&self, r: usize) -> &[Complex64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// `self · x`.
    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.cols, "vector length mismatch");
        (0..self.rows)
            .map(|r| {
                self.row(r)
                    .iter()
                    .zip(x)
                    .map(|(h, xi)| h * xi)
                    .sum()
            })
            .collect()
    }
}

/// One coherence block's worth of fading: every hop matrix plus the AF
/// gains the relays derive from it.
#[derive(Clone, Debug)]
pub struct ChannelRealization {
    /// Hop matrices in propagation order: `L×K`, then `L×L` for each
    /// intermediate stage, then `N_r×L` (or a single `N_r×K` matrix when
    /// `hops = 1`).
    pub hop_matrices: Vec<ComplexMatrix>,
    /// Per-stage, per-relay amplification gains (`hops - 1` stages).
    pub af_gains: Vec<Vec<f64>>,
    /// Noise standard deviation `σ_z` shared by every receiver.
    pub noise_std: f64,
}

impl ChannelRealization {
    /// Validates the dimension chain and gain positivity; useful when a
    /// realization is constructed by hand rather than drawn.
    pub fn new(
        hop_matrices: Vec<ComplexMatrix>,
        af_gains: Vec<Vec<f64>>,
        noise_std: f64,
    ) -> Result<Self> {
        if hop_matrices.is_empty() {
            return Err(Error::config("hops", "at least one hop matrix required"));
        }
        for (a, b) in hop_matrices.iter().zip(hop_matrices.iter().skip(1)) {
            if b.cols() != a.rows() {
                return Err(Error::config(
                    "hops",
                    format!("hop output dimension {} feeds hop input dimension {}", a.rows(), b.cols()),
                ));
            }
        }
        if af_gains.len() + 1 != hop_matrices.len() {
            return Err(Error::config(
                "hops",
                "need exactly one gain stage per relay stage",
            ));
        }
        for (stage, gains) in af_gains.iter().enumerate() {
            if gains.len() != hop_matrices[stage].rows() {
                return Err(Error::config("l", "one gain per relay required"));
            }
            if !gains.iter().all(|&g| g > 0.0) {
                return Err(Error::config("l", "AF gains must be strictly positive"));
            }
        }
        if noise_std.is_nan() || noise_std < 0.0 {
            return Err(Error::config("snr_db", "noise standard deviation must be ≥ 0"));
        }
        Ok(ChannelRealization { hop_matrices, af_gains, noise_std })
    }

    /// Data-center antenna count implied by the last hop matrix.
    pub fn n_r(&self) -> usize {
        self.hop_matrices.last().expect("validated non-empty").rows()
    }

    /// Source count implied by the first hop matrix.
    pub fn sources(&self) -> usize {
        self.hop_matrices[0].cols()
    }
}

/// Draws one realization of every fading link for `config`, i.i.d.
/// circularly symmetric complex Gaussian with unit variance
/// (Rayleigh-faded magnitudes), and derives the relays' AF gains.
///
/// Each relay normalizes by the realized expected receive power: with
/// incoming coefficients `h_1..h_K` (each feeding node transmitting power
/// `P_t`) its gain is `β = sqrt(P_t / (P_t·Σ|h_i|² + σ_z²))`, which holds
/// the relay at its power constraint in expectation over signals and
/// noise.
///
/// The draw order — hop by hop, row-major, real part before imaginary —
/// is part of the reproducibility contract: a fixed seed yields an
/// identical realization on every call and platform.
pub fn draw_channel<R: Rng + ?Sized>(config: &SystemConfig, rng: &mut R) -> ChannelRealization {
    let sigma = config.noise_std();
    let mut shapes: Vec<(usize, usize)> = Vec::with_capacity(config.hops);
    if config.hops == 1 {
        shapes.push((config.n_r, config.k));
    } else {
        shapes.push((config.l, config.k));
        for _ in 0..config.hops.saturating_sub(2) {
            shapes.push((config.l, config.l));
        }
        shapes.push((config.n_r, config.l));
    }

    let per_dim = std::f64::consts::FRAC_1_SQRT_2;
    let hop_matrices: Vec<ComplexMatrix> = shapes
        .iter()
        .map(|&(rows, cols)| {
            let data: Vec<Complex64> = (0..rows * cols)
                .map(|_| {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    Complex64::new(per_dim * re, per_dim * im)
                })
                .collect();
            ComplexMatrix::new(rows, cols, data)
        })
        .collect();

    // Every relay stage normalizes against its incoming matrix; the last
    // matrix feeds the data center, which quantizes instead of amplifying.
    let af_gains: Vec<Vec<f64>> = hop_matrices[..config.hops - 1]
        .iter()
        .map(|h| {
            (0..h.rows())
                .map(|r| {
                    let power_in: f64 =
                        h.row(r).iter().map(|c| c.norm_sqr()).sum::<f64>() * config.p_t
                            + sigma * sigma;
                    (config.p_t / power_in).sqrt()
                })
                .collect()
        })
        .collect();

    ChannelRealization { hop_matrices, af_gains, noise_std: sigma }
}

/// Sends the joint message `w` once through `channel` and returns the
/// data center's sign pattern `r = sign(Φ(x̃) + z̃)`.
///
/// Every receiver (relay antennas and data-center antennas alike) adds a
/// fresh complex Gaussian noise sample of variance `σ_z²`; relays scale
/// their noisy receive signal by their AF gain. The final complex
/// `N_r`-vector is stacked `[Re; Im]` into `2·N_r` reals before the
/// elementwise quantizer `sign(u) = +1 iff u ≥ 0`.
///
/// Noise is drawn (stage by stage, antenna-major, real part first) even
/// when `σ_z = 0` so that configurations differing only in scale consume
/// the random stream identically.
///
/// Panics if `w` and `channel`/`constellation` are dimensionally
/// inconsistent — that is a caller bug, not an input error.
pub fn transmit<R: Rng + ?Sized>(
    channel: &ChannelRealization,
    constellation: &ConstellationSet,
    w: &MessageVector,
    rng: &mut R,
) -> BinaryObservation {
    assert_eq!(
        w.len(),
        channel.sources(),
        "message length does not match the channel's source count"
    );
    let mut signal: Vec<Complex64> = w
        .0
        .iter()
        .map(|&w_k| {
            modulate(w_k, constellation).expect("message symbol out of constellation range")
        })
        .collect();

    let per_dim = channel.noise_std * std::f64::consts::FRAC_1_SQRT_2;
    let add_noise = |y: &mut [Complex64], rng: &mut R| {
        for v in y.iter_mut() {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *v += Complex64::new(per_dim * re, per_dim * im);
        }
    };

    for (stage, h) in channel.hop_matrices.iter().enumerate() {
        let mut received = h.mul_vec(&signal);
        add_noise(&mut received, rng);
        if let Some(gains) = channel.af_gains.get(stage) {
            for (v, &beta) in received.iter_mut().zip(gains) {
                *v *= beta;
            }
        }
        signal = received;
    }

    let n_r = channel.n_r();
    BinaryObservation::from_signs(
        signal
            .iter()
            .map(|v| v.re)
            .chain(signal.iter().map(|v| v.im))
            .take(2 * n_r),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn qpsk_matches_the_quadrant_map() {
        let set = ConstellationSet::qpsk(1.0).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let expect = [
            Complex64::new(s, s),
            Complex64::new(-s, s),
            Complex64::new(s, -s),
            Complex64::new(-s, -s),
        ];
        for (label, want) in expect.iter().enumerate() {
            let got = modulate(label, &set).unwrap();
            assert!(
                (got - want).norm() < 1e-12,
                "label {label}: got {got}, want {want}"
            );
            assert!((got.norm_sqr() - 1.0).abs() < 1e-12, "unit power per symbol");
        }
        let avg: f64 =
            set.symbols().iter().map(|s| s.norm_sqr()).sum::<f64>() / set.order() as f64;
        assert!((avg - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gray_psk_neighbors_differ_in_one_bit() {
        for m in [2usize, 4, 8, 16, 64] {
            let set = ConstellationSet::gray_psk(m, 2.5).unwrap();
            // Recover each label's phase slot, then check the labels of
            // adjacent slots differ in exactly one bit.
            let mut slot_of = vec![0usize; m];
            for slot in 0..m {
                slot_of[slot ^ (slot >> 1)] = slot;
            }
            let mut label_at = vec![0usize; m];
            for (label, &slot) in slot_of.iter().enumerate() {
                label_at[slot] = label;
            }
            for slot in 0..m {
                let a = label_at[slot];
                let b = label_at[(slot + 1) % m];
                assert_eq!((a ^ b).count_ones(), 1, "m = {m}, slot {slot}");
            }
            let avg: f64 =
                set.symbols().iter().map(|s| s.norm_sqr()).sum::<f64>() / m as f64;
            assert!((avg - 2.5).abs() < 1e-12 * 2.5);
        }
    }

    #[test]
    fn modulate_rejects_out_of_range_symbols() {
        let set = ConstellationSet::qpsk(1.0).unwrap();
        assert!(matches!(modulate(4, &set), Err(Error::InvalidMessage(_))));
    }

    #[test]
    fn class_codes_match_positional_arithmetic() {
        assert_eq!(class_encode(&MessageVector(vec![0, 0]), 4), ClassIndex(0));
        assert_eq!(class_encode(&MessageVector(vec![1, 2]), 4), ClassIndex(6));
        assert_eq!(class_decode(ClassIndex(15), 2, 4), MessageVector(vec![3, 3]));
    }

    #[test]
    fn sign_of_zero_is_positive() {
        let obs = BinaryObservation::from_signs([0.0, -0.0, -1e-300, 1e-300]);
        assert_eq!(obs.to_pm1(), vec![1, 1, -1, 1]);
    }

    #[test]
    fn packed_accessors_round_trip() {
        let entries: Vec<i8> =
            (0..131).map(|i| if (i * 7) % 3 == 0 { 1 } else { -1 }).collect();
        let obs = BinaryObservation::from_pm1(&entries).unwrap();
        assert_eq!(obs.len(), 131);
        assert_eq!(obs.to_pm1(), entries);
        assert_eq!(
            obs.to_f64_vec(),
            entries.iter().map(|&e| f64::from(e)).collect::<Vec<_>>()
        );
        assert!(BinaryObservation::from_pm1(&[1, 0, -1]).is_err());
    }

    #[test]
    fn hamming_counts_disagreements() {
        let a = BinaryObservation::from_pm1(&[1, 1, -1, -1, 1]).unwrap();
        let b = BinaryObservation::from_pm1(&[1, -1, -1, 1, 1]).unwrap();
        assert_eq!(a.hamming(&b), 2);
        assert_eq!(a.hamming(&a), 0);
    }

    #[test]
    fn noiseless_single_link_gives_all_plus() {
        // K = 1, L = 1, N_r = 1, unit coefficients, unit gain, no noise:
        // the QPSK symbol (1+j)/√2 arrives untouched, so both real
        // dimensions are positive.
        let one = Complex64::new(1.0, 0.0);
        let channel = ChannelRealization::new(
            vec![
                ComplexMatrix::new(1, 1, vec![one]),
                ComplexMatrix::new(1, 1, vec![one]),
            ],
            vec![vec![1.0]],
            0.0,
        )
        .unwrap();
        let set = ConstellationSet::qpsk(1.0).unwrap();
        let obs = transmit(&channel, &set, &MessageVector(vec![0]), &mut rng(0));
        assert_eq!(obs.to_pm1(), vec![1, 1]);
    }

    #[test]
    fn transmit_output_is_always_pm1_of_length_2nr() {
        let config = SystemConfig::new(2, 3, 2, 2, 4, 1.0, 5.0).unwrap();
        let mut r = rng(7);
        let channel = draw_channel(&config, &mut r);
        let set = config.constellation();
        for trial in 0..1000 {
            let w = MessageVector(vec![trial % 4, (trial / 4) % 4]);
            let obs = transmit(&channel, &set, &w, &mut r);
            assert_eq!(obs.len(), 2 * config.n_r);
            assert!(obs.to_pm1().iter().all(|&e| e == 1 || e == -1));
        }
    }

    #[test]
    fn draw_channel_is_seed_deterministic_and_shaped() {
        let config = SystemConfig::new(1, 4, 3, 3, 4, 1.0, 10.0).unwrap();
        let a = draw_channel(&config, &mut rng(42));
        let b = draw_channel(&config, &mut rng(42));
        let shapes: Vec<(usize, usize)> =
            a.hop_matrices.iter().map(|h| (h.rows(), h.cols())).collect();
        assert_eq!(shapes, vec![(3, 1), (3, 3), (4, 3)]);
        assert_eq!(a.hop_matrices, b.hop_matrices);
        assert_eq!(a.af_gains, b.af_gains);
        assert_eq!(a.af_gains.len(), 2);
        assert!(a.af_gains.iter().flatten().all(|&g| g > 0.0));
    }

    #[test]
    fn fading_entries_have_unit_empirical_variance() {
        // 10^5 entries: sample variance should land within 2% of 1.
        let config = SystemConfig::new(10, 100, 100, 2, 4, 1.0, 0.0).unwrap();
        let mut r = rng(3);
        let mut sum = Complex64::default();
        let mut sq = 0.0;
        let mut count = 0usize;
        while count < 100_000 {
            let ch = draw_channel(&config, &mut r);
            for h in &ch.hop_matrices {
                for row in 0..h.rows() {
                    for c in h.row(row) {
                        sum += c;
                        sq += c.norm_sqr();
                        count += 1;
                    }
                }
            }
        }
        let mean = sum / count as f64;
        let var = sq / count as f64 - mean.norm_sqr();
        assert!(mean.norm() < 0.02, "mean {mean} too far from 0");
        assert!((var - 1.0).abs() < 0.02, "variance {var} outside 2% of 1.0");
    }

    #[test]
    fn noiseless_transmit_is_deterministic() {
        let config = SystemConfig::new(2, 4, 3, 2, 4, 1.0, f64::INFINITY).unwrap();
        assert_eq!(config.noise_std(), 0.0);
        let channel = draw_channel(&config, &mut rng(5));
        let set = config.constellation();
        let w = MessageVector(vec![3, 1]);
        let a = transmit(&channel, &set, &w, &mut rng(100));
        let b = transmit(&channel, &set, &w, &mut rng(999));
        assert_eq!(a, b, "zero-noise output must not depend on the rng");
    }

    #[test]
    fn common_power_noise_scaling_leaves_observations_unchanged() {
        // Multiplying P_t and σ_z² by one factor scales every signal by
        // √factor without moving any sign, so seed-matched outputs agree.
        let base = SystemConfig::new(2, 4, 3, 2, 4, 1.0, 6.0).unwrap();
        let scaled = SystemConfig::new(2, 4, 3, 2, 4, 16.0, 6.0).unwrap();
        assert!((scaled.noise_std().powi(2) / base.noise_std().powi(2) - 16.0).abs() < 1e-9);
        let ch_base = draw_channel(&base, &mut rng(11));
        let ch_scaled = draw_channel(&scaled, &mut rng(11));
        for (a, b) in ch_base.af_gains.iter().flatten().zip(ch_scaled.af_gains.iter().flatten())
        {
            assert!((a / b - 1.0).abs() < 1e-12, "gains must be scale-invariant");
        }
        let set_base = base.constellation();
        let set_scaled = scaled.constellation();
        for seed in 0..32 {
            let w = MessageVector(vec![seed as usize % 4, (seed as usize / 4) % 4]);
            let a = transmit(&ch_base, &set_base, &w, &mut rng(1000 + seed));
            let b = transmit(&ch_scaled, &set_scaled, &w, &mut rng(1000 + seed));
            assert_eq!(a, b, "seed {seed}");
        }
    }

    #[test]
    fn config_validation_names_the_offending_field() {
        let err = SystemConfig::new(4, 2, 1, 2, 4, 1.0, 0.0).unwrap_err();
        assert!(err.to_string().contains("n_r"), "{err}");
        let err = SystemConfig::new(1, 1, 1, 2, 3, 1.0, 0.0).unwrap_err();
        assert!(err.to_string().contains('m'), "{err}");
        let err = SystemConfig::new(1, 1, 1, 2, 4, 0.0, 0.0).unwrap_err();
        assert!(err.to_string().contains("p_t"), "{err}");
    }

    proptest! {
        #[test]
        fn encode_decode_round_trips(k in 1usize..6, m_exp in 1u32..4, c in 0usize..4096) {
            let m = 2usize.pow(m_exp);
            let total = num_classes(k, m);
            let c = c % total;
            let w = class_decode(ClassIndex(c), k, m);
            prop_assert_eq!(w.len(), k);
            prop_assert!(w.0.iter().all(|&x| x < m));
            prop_assert_eq!(class_encode(&w, m), ClassIndex(c));
        }

        #[test]
        fn pm1_round_trips_through_packing(entries in prop::collection::vec(prop::bool::ANY, 0..200)) {
            let pm1: Vec<i8> = entries.iter().map(|&b| if b { 1 } else { -1 }).collect();
            let obs = BinaryObservation::from_pm1(&pm1).unwrap();
            prop_assert_eq!(obs.len(), pm1.len());
            prop_assert_eq!(obs.to_pm1(), pm1);
        }
    }
}
