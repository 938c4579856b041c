//! Supervised detectors over one-bit observations.
//!
//! All detectors share the same shape: fit per-class parameters from a
//! [`LabelledDataset`], then classify fresh observations by minimizing a
//! per-class distance or negative log-likelihood. Ties always go to the
//! lowest class index so decisions are deterministic.
//!
//! * [`detect_mcd`] — nearest centroid in squared Euclidean distance.
//! * [`detect_mahalanobis`] — quadratic distance under a per-class
//!   shrunk-covariance Gaussian model.
//! * [`detect_emld`] — k-nearest-neighbor majority vote over the raw
//!   training points ([`detect_mmd`] is the 1-NN special case, kept as an
//!   independent implementation so the two can cross-check each other).
//! * [`detect_bernoulli`] — per-coordinate Bernoulli flip model: class
//!   signature `μ̂_c = sign(Σ_t r_t)` plus flip probabilities `ε̂_{c,i}`,
//!   scored by the disagreement-weighted quadratic form
//!   `(r−μ̂_c)ᵀ · diag(−log ε̂_c) · (r−μ̂_c)`.

use serde::{Deserialize, Serialize};

use crate::dataset::LabelledDataset;
use crate::netsim::{BinaryObservation, ClassIndex};
use crate::{Error, Result};

/// Per-class sample means; entries lie in `[-1, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CentroidParams {
    /// `means[c][i]` = average of training entry `i` for class `c`.
    pub means: Vec<Vec<f64>>,
}

impl CentroidParams {
    pub fn num_classes(&self) -> usize {
        self.means.len()
    }

    pub fn n(&self) -> usize {
        self.means.first().map(Vec::len).unwrap_or(0)
    }
}

/// A dense real square matrix (row-major); just enough linear algebra
/// for covariance shrinkage and quadratic-form detection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        SquareMatrix { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let n = rows.len();
        assert!(rows.iter().all(|r| r.len() == n), "rows of unequal length");
        SquareMatrix { n, data: rows.into_iter().flatten().collect() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.n + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.n + c] = v;
    }

    fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.n..(r + 1) * self.n]
    }

    /// `self · other`.
    pub fn mul(&self, other: &SquareMatrix) -> SquareMatrix {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = Self::zeros(n);
        for r in 0..n {
            for k in 0..n {
                let a = self.get(r, k);
                for c in 0..n {
                    out.data[r * n + c] += a * other.get(k, c);
                }
            }
        }
        out
    }

    /// `dᵀ · self · d`.
    pub fn quadratic_form(&self, d: &[f64]) -> f64 {
        assert_eq!(d.len(), self.n);
        let mut acc = 0.0;
        for (r, &dr) in d.iter().enumerate() {
            let row = self.row(r);
            let mut dot = 0.0;
            for (a, b) in row.iter().zip(d) {
                dot += a * b;
            }
            acc += dr * dot;
        }
        acc
    }

    /// Lower-triangular Cholesky factor, or `None` if the matrix is not
    /// numerically positive definite.
    fn cholesky(&self) -> Option<SquareMatrix> {
        let n = self.n;
        let mut l = Self::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let mut sum = self.get(i, j);
                for k in 0..j {
                    sum -= l.get(i, k) * l.get(j, k);
                }
                if i == j {
                    if !(sum.is_finite() && sum > 0.0) {
                        return None;
                    }
                    l.set(i, i, sum.sqrt());
                } else {
                    l.set(i, j, sum / l.get(j, j));
                }
            }
        }
        Some(l)
    }

    /// Inverse of a symmetric positive-definite matrix via its Cholesky
    /// factor; `None` if the factorization fails.
    pub fn spd_inverse(&self) -> Option<SquareMatrix> {
        let n = self.n;
        let l = self.cholesky()?;
        let mut inv = Self::zeros(n);
        let mut y = vec![0.0; n];
        for col in 0..n {
            // Solve L·y = e_col, then Lᵀ·x = y; x is column `col`.
            for i in 0..n {
                let mut sum = if i == col { 1.0 } else { 0.0 };
                for (k, &y_k) in y.iter().enumerate().take(i) {
                    sum -= l.get(i, k) * y_k;
                }
                y[i] = sum / l.get(i, i);
            }
            for i in (0..n).rev() {
                let mut sum = y[i];
                for k in i + 1..n {
                    sum -= l.get(k, i) * inv.get(k, col);
                }
                inv.set(i, col, sum / l.get(i, i));
            }
        }
        Some(inv)
    }
}

/// Per-class Gaussian model: sample means plus shrunk covariances and
/// their inverses ("precisions").
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianParams {
    pub means: Vec<Vec<f64>>,
    /// Shrunk covariance per class (symmetric positive definite).
    pub covariances: Vec<SquareMatrix>,
    /// Inverse of the shrunk covariance per class.
    pub precisions: Vec<SquareMatrix>,
}

impl GaussianParams {
    pub fn num_classes(&self) -> usize {
        self.means.len()
    }
}

/// Per-class Bernoulli flip model: a `±1` signature per class plus the
/// probability that each coordinate flips away from it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BernoulliParams {
    /// Majority-vote signatures `μ̂_c ∈ {−1,+1}^N`.
    pub signatures: Vec<BinaryObservation>,
    /// Flip probabilities `ε̂_{c,i}`, floored away from zero.
    pub flip_probs: Vec<Vec<f64>>,
    /// Disagreement weights `−log ε̂_{c,i}` (natural log), strictly
    /// positive and consistent with `flip_probs`.
    pub weights: Vec<Vec<f64>>,
    /// Per-class constant `Σ_i −log(1−ε̂_{c,i})` of the exact negative
    /// log-likelihood.
    agree_base: Vec<f64>,
    /// Per-coordinate increment `log((1−ε̂)/ε̂)` a disagreement adds to
    /// the exact negative log-likelihood.
    exact_deltas: Vec<Vec<f64>>,
}

impl BernoulliParams {
    /// Builds parameters from explicit signatures and flip probabilities
    /// (each in `(0, 0.5]`); weights and likelihood caches are derived.
    pub fn from_probabilities(
        signatures: Vec<BinaryObservation>,
        flip_probs: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if signatures.len() != flip_probs.len() {
            return Err(Error::config(
                "flip_probs",
                "need exactly one flip-probability vector per signature",
            ));
        }
        for (sig, probs) in signatures.iter().zip(&flip_probs) {
            if sig.len() != probs.len() {
                return Err(Error::config(
                    "flip_probs",
                    "flip-probability length does not match signature length",
                ));
            }
            if probs.iter().any(|&e| !(e > 0.0 && e <= 0.5)) {
                return Err(Error::config(
                    "flip_probs",
                    "flip probabilities must lie in (0, 0.5]",
                ));
            }
        }
        let weights: Vec<Vec<f64>> = flip_probs
            .iter()
            .map(|probs| probs.iter().map(|&e| -e.ln()).collect())
            .collect();
        let agree_base: Vec<f64> = flip_probs
            .iter()
            .map(|probs| probs.iter().map(|&e| -(1.0 - e).ln()).sum())
            .collect();
        let exact_deltas: Vec<Vec<f64>> = flip_probs
            .iter()
            .map(|probs| probs.iter().map(|&e| ((1.0 - e) / e).ln()).collect())
            .collect();
        Ok(BernoulliParams { signatures, flip_probs, weights, agree_base, exact_deltas })
    }

    pub fn num_classes(&self) -> usize {
        self.signatures.len()
    }

    pub fn n(&self) -> usize {
        self.signatures.first().map(BinaryObservation::len).unwrap_or(0)
    }
}

/// How [`detect_bernoulli_with`] turns disagreements into a score.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum BernoulliScoring {
    /// The disagreement-weighted quadratic form
    /// `(r−μ̂_c)ᵀ·diag(−log ε̂_c)·(r−μ̂_c) = 4·Σ_{r_i≠μ̂_i} −log ε̂_{c,i}`.
    /// This drops the per-class `Σ_i log(1−ε̂_{c,i})` constant of the
    /// full likelihood, which matters only when flip probabilities are
    /// large and uneven across classes.
    #[default]
    WeightedDisagreement,
    /// The exact negative log-likelihood of the flip model, including the
    /// per-class agreement terms the quadratic form drops.
    ExactLikelihood,
}

/// Counts, per coordinate, how many pilots have a `+1` entry.
fn plus_counts(pilots: &[BinaryObservation], n: usize) -> Vec<u32> {
    let mut counts = vec![0u32; n];
    for obs in pilots {
        debug_assert_eq!(obs.len(), n);
        for (i, c) in counts.iter_mut().enumerate() {
            *c += u32::from(obs.get(i) == 1);
        }
    }
    counts
}

/// Fits per-class sample means.
pub fn fit_centroid(data: &LabelledDataset) -> CentroidParams {
    let n = data.n();
    let t = data.pilots_per_class() as f64;
    let means = data
        .iter_classes()
        .map(|(_, pilots)| {
            plus_counts(pilots, n)
                .into_iter()
                .map(|plus| (2.0 * f64::from(plus) - t) / t)
                .collect()
        })
        .collect();
    CentroidParams { means }
}

/// Fits per-class Gaussian parameters with covariance shrinkage.
///
/// The raw covariance is the biased sample estimate
/// `Σ̂_c = (1/T)·Σ_t (r_t−μ̂_c)(r_t−μ̂_c)ᵀ`; the stored covariance is the
/// convex combination `(1−λ)·Σ̂_c + λ·(trace(Σ̂_c)/N)·I`, whose identity
/// target keeps the matrix invertible when `T < N` leaves the raw
/// estimate rank-deficient. When a class has zero empirical variance
/// (noiseless pilots), the trace-scaled target would vanish too, so the
/// target scale falls back to 1 — the shrunk matrix becomes `λ·I` and
/// detection degrades gracefully to centroid distance.
///
/// Fails with [`Error::SingularCovariance`] if a shrunk matrix cannot be
/// inverted, which only happens at `λ = 0` with degenerate data.
///
/// Panics if `lambda` is outside `[0, 1]`.
pub fn fit_gaussian(data: &LabelledDataset, lambda: f64) -> Result<GaussianParams> {
    assert!(
        (0.0..=1.0).contains(&lambda),
        "shrinkage weight {lambda} outside [0, 1]"
    );
    let n = data.n();
    let t = data.pilots_per_class();
    let centroids = fit_centroid(data);

    let mut covariances = Vec::with_capacity(data.num_classes());
    let mut precisions = Vec::with_capacity(data.num_classes());
    for (c, pilots) in data.iter_classes() {
        let mean = &centroids.means[c.0];
        let mut raw = SquareMatrix::zeros(n);
        let mut dev = vec![0.0; n];
        for obs in pilots {
            for (i, d) in dev.iter_mut().enumerate() {
                *d = f64::from(obs.get(i)) - mean[i];
            }
            for (i, &di) in dev.iter().enumerate() {
                let row = &mut raw.data[i * n..(i + 1) * n];
                for (slot, &dj) in row.iter_mut().zip(&dev) {
                    *slot += di * dj;
                }
            }
        }
        for v in raw.data.iter_mut() {
            *v /= t as f64;
        }

        let trace: f64 = (0..n).map(|i| raw.get(i, i)).sum();
        let target_scale = if trace > 0.0 { trace / n as f64 } else { 1.0 };
        let mut shrunk = raw;
        for v in shrunk.data.iter_mut() {
            *v *= 1.0 - lambda;
        }
        for i in 0..n {
            let v = shrunk.get(i, i) + lambda * target_scale;
            shrunk.set(i, i, v);
        }

        let precision = shrunk
            .spd_inverse()
            .ok_or(Error::SingularCovariance { class: c.0 })?;
        covariances.push(shrunk);
        precisions.push(precision);
    }

    Ok(GaussianParams { means: centroids.means, covariances, precisions })
}

/// Fits the per-coordinate Bernoulli flip model.
///
/// Signatures take the majority value of each coordinate (`+1` on ties);
/// the raw flip probability is the fraction of pilots disagreeing with
/// the signature, then floored at `epsilon_floor` so the weights
/// `−log ε̂` stay finite.
///
/// Panics unless `epsilon_floor ∈ (0, 0.5)`.
pub fn fit_bernoulli(data: &LabelledDataset, epsilon_floor: f64) -> BernoulliParams {
    assert!(
        epsilon_floor > 0.0 && epsilon_floor < 0.5,
        "epsilon floor {epsilon_floor} outside (0, 0.5)"
    );
    let n = data.n();
    let t = data.pilots_per_class() as u32;

    let mut signatures = Vec::with_capacity(data.num_classes());
    let mut flip_probs = Vec::with_capacity(data.num_classes());
    for (_, pilots) in data.iter_classes() {
        let counts = plus_counts(pilots, n);
        let bits: Vec<bool> = counts.iter().map(|&plus| 2 * plus >= t).collect();
        let probs: Vec<f64> = counts
            .iter()
            .zip(&bits)
            .map(|(&plus, &sig_plus)| {
                let disagree = if sig_plus { t - plus } else { plus };
                (f64::from(disagree) / f64::from(t)).max(epsilon_floor)
            })
            .collect();
        signatures.push(BinaryObservation::from_bits(&bits));
        flip_probs.push(probs);
    }

    BernoulliParams::from_probabilities(signatures, flip_probs)
        .expect("fitted probabilities lie in (0, 0.5] by construction")
}

/// Nearest centroid in squared Euclidean distance; ties to the lowest
/// class index.
pub fn detect_mcd(r: &BinaryObservation, params: &CentroidParams) -> ClassIndex {
    let r_dense = r.to_f64_vec();
    let mut best = (f64::INFINITY, 0);
    for (c, mean) in params.means.iter().enumerate() {
        debug_assert_eq!(mean.len(), r_dense.len());
        let mut dist = 0.0;
        for (ri, mi) in r_dense.iter().zip(mean) {
            let d = ri - mi;
            dist += d * d;
        }
        if dist < best.0 {
            best = (dist, c);
        }
    }
    ClassIndex(best.1)
}

/// Minimum quadratic distance `(r−μ̂_c)ᵀ·P_c·(r−μ̂_c)` over classes, with
/// `P_c` the class precision; ties to the lowest class index.
pub fn detect_mahalanobis(r: &BinaryObservation, params: &GaussianParams) -> ClassIndex {
    let r_dense = r.to_f64_vec();
    let mut dev = vec![0.0; r_dense.len()];
    let mut best = (f64::INFINITY, 0);
    for (c, (mean, precision)) in params.means.iter().zip(&params.precisions).enumerate() {
        for ((d, ri), mi) in dev.iter_mut().zip(&r_dense).zip(mean) {
            *d = ri - mi;
        }
        let dist = precision.quadratic_form(&dev);
        if dist < best.0 {
            best = (dist, c);
        }
    }
    ClassIndex(best.1)
}

/// k-nearest-neighbor majority vote over all training observations.
///
/// Neighbors are ranked by Hamming distance (squared Euclidean distance
/// between `±1` vectors is four times the Hamming distance, so the
/// ranking is identical), with distance ties resolved in (class, pilot)
/// order; vote ties go to the lowest class index.
pub fn detect_emld(r: &BinaryObservation, data: &LabelledDataset, k: usize) -> ClassIndex {
    assert!(
        k >= 1 && k <= data.len(),
        "neighbor count {k} outside 1..={}",
        data.len()
    );
    // Max-heap of the k best (distance, class, pilot) triples seen so
    // far; lexicographic tuple order implements the tie-break rule.
    let mut heap: std::collections::BinaryHeap<(u32, usize, usize)> =
        std::collections::BinaryHeap::with_capacity(k + 1);
    for (c, pilots) in data.iter_classes() {
        for (t, obs) in pilots.iter().enumerate() {
            let entry = (r.hamming(obs), c.0, t);
            if heap.len() < k {
                heap.push(entry);
            } else if entry < *heap.peek().expect("heap holds k entries") {
                heap.pop();
                heap.push(entry);
            }
        }
    }

    let mut votes = vec![0u32; data.num_classes()];
    for (_, c, _) in heap {
        votes[c] += 1;
    }
    let mut best = (0u32, 0usize);
    for (c, &v) in votes.iter().enumerate() {
        if v > best.0 {
            best = (v, c);
        }
    }
    ClassIndex(best.1)
}

/// Minimum-distance detection against the raw training observations
/// (1-nearest-neighbor).
///
/// Behaviorally this is [`detect_emld`] with `k = 1`, but it is kept as
/// an independent linear scan so the two implementations can be checked
/// against each other.
pub fn detect_mmd(r: &BinaryObservation, data: &LabelledDataset) -> ClassIndex {
    let mut best: Option<(u32, usize, usize)> = None;
    for (c, pilots) in data.iter_classes() {
        for (t, obs) in pilots.iter().enumerate() {
            let entry = (r.hamming(obs), c.0, t);
            if best.is_none_or(|b| entry < b) {
                best = Some(entry);
            }
        }
    }
    ClassIndex(best.expect("dataset is never empty").1)
}

/// Score of observation `r` under class `c`'s Bernoulli parameters;
/// lower is better.
///
/// With [`BernoulliScoring::WeightedDisagreement`] this is
/// `4·Σ_{i: r_i ≠ μ̂_{c,i}} −log ε̂_{c,i}`, i.e. the quadratic form
/// `(r−μ̂_c)ᵀ·diag(−log ε̂_c)·(r−μ̂_c)`.
pub fn bernoulli_score(
    r: &BinaryObservation,
    params: &BernoulliParams,
    c: ClassIndex,
    scoring: BernoulliScoring,
) -> f64 {
    let sig = &params.signatures[c.0];
    debug_assert_eq!(r.len(), sig.len());
    let (per_disagreement, base) = match scoring {
        BernoulliScoring::WeightedDisagreement => (&params.weights[c.0], 0.0),
        BernoulliScoring::ExactLikelihood => {
            (&params.exact_deltas[c.0], params.agree_base[c.0])
        }
    };
    let mut acc = 0.0;
    for (word_idx, (rw, sw)) in r.words().iter().zip(sig.words()).enumerate() {
        let mut diff = rw ^ sw;
        while diff != 0 {
            let bit = diff.trailing_zeros() as usize;
            acc += per_disagreement[word_idx * 64 + bit];
            diff &= diff - 1;
        }
    }
    match scoring {
        BernoulliScoring::WeightedDisagreement => 4.0 * acc,
        BernoulliScoring::ExactLikelihood => base + acc,
    }
}

/// Bernoulli-model detection over all classes with the default
/// quadratic-form scoring; ties to the lowest class index.
pub fn detect_bernoulli(r: &BinaryObservation, params: &BernoulliParams) -> ClassIndex {
    detect_bernoulli_with(r, params, BernoulliScoring::WeightedDisagreement)
}

/// [`detect_bernoulli`] with an explicit scoring mode.
pub fn detect_bernoulli_with(
    r: &BinaryObservation,
    params: &BernoulliParams,
    scoring: BernoulliScoring,
) -> ClassIndex {
    let mut best = (f64::INFINITY, 0);
    for c in 0..params.num_classes() {
        let score = bernoulli_score(r, params, ClassIndex(c), scoring);
        if score < best.0 {
            best = (score, c);
        }
    }
    ClassIndex(best.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn obs(entries: &[i8]) -> BinaryObservation {
        BinaryObservation::from_pm1(entries).unwrap()
    }

    /// Two classes over N=2: class 0 holds the worked two-point example,
    /// class 1 is a constant filler.
    fn two_point_dataset() -> LabelledDataset {
        LabelledDataset::from_observations(
            1,
            2,
            1,
            vec![
                vec![obs(&[1, 1]), obs(&[1, -1])],
                vec![obs(&[-1, -1]), obs(&[-1, -1])],
            ],
        )
        .unwrap()
    }

    fn random_dataset(
        seed: u64,
        k: usize,
        m: usize,
        n_r: usize,
        t: usize,
    ) -> LabelledDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let classes = crate::netsim::num_classes(k, m);
        let observations = (0..classes)
            .map(|_| {
                (0..t)
                    .map(|_| {
                        let bits: Vec<bool> = (0..2 * n_r).map(|_| rng.random()).collect();
                        BinaryObservation::from_bits(&bits)
                    })
                    .collect()
            })
            .collect();
        LabelledDataset::from_observations(k, m, n_r, observations).unwrap()
    }

    #[test]
    fn centroid_of_two_points_averages_them() {
        let params = fit_centroid(&two_point_dataset());
        assert_eq!(params.means[0], vec![1.0, 0.0]);
        assert_eq!(params.means[1], vec![-1.0, -1.0]);
    }

    #[test]
    fn centroid_entries_are_fifteenths_for_t_15() {
        let data = random_dataset(1, 1, 4, 3, 15);
        let params = fit_centroid(&data);
        for mean in &params.means {
            for &v in mean {
                assert!((-1.0..=1.0).contains(&v));
                let scaled = v * 15.0;
                assert!(
                    (scaled - scaled.round()).abs() < 1e-12,
                    "{v} is not a multiple of 1/15"
                );
            }
        }
    }

    #[test]
    fn gaussian_fit_matches_hand_shrinkage_arithmetic() {
        let data = two_point_dataset();
        let params = fit_gaussian(&data, 0.1).unwrap();
        // Class 0: raw covariance [[0,0],[0,1]]; shrinking with λ=0.1
        // against the trace/N = 0.5 scaled identity gives
        // [[0.05, 0], [0, 0.95]].
        let cov = &params.covariances[0];
        let expect = [[0.05, 0.0], [0.0, 0.95]];
        for (r, row) in expect.iter().enumerate() {
            for (c, want) in row.iter().enumerate() {
                assert!(
                    (cov.get(r, c) - want).abs() < 1e-12,
                    "cov[{r}][{c}] = {}",
                    cov.get(r, c)
                );
            }
        }
    }

    #[test]
    fn full_shrinkage_gives_scaled_identity() {
        let data = random_dataset(2, 1, 4, 2, 6);
        let params = fit_gaussian(&data, 1.0).unwrap();
        for cov in &params.covariances {
            let scale = cov.get(0, 0);
            assert!(scale > 0.0);
            for r in 0..cov.n() {
                for c in 0..cov.n() {
                    let want = if r == c { scale } else { 0.0 };
                    assert!((cov.get(r, c) - want).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn precision_times_covariance_is_identity() {
        let data = random_dataset(3, 1, 8, 4, 6);
        let params = fit_gaussian(&data, 0.1).unwrap();
        for (cov, prec) in params.covariances.iter().zip(&params.precisions) {
            let prod = prec.mul(cov);
            for r in 0..prod.n() {
                for c in 0..prod.n() {
                    let want = if r == c { 1.0 } else { 0.0 };
                    assert!(
                        (prod.get(r, c) - want).abs() < 1e-8,
                        "P·Σ deviates at [{r}][{c}]: {}",
                        prod.get(r, c)
                    );
                }
            }
        }
    }

    #[test]
    fn zero_shrinkage_with_degenerate_data_reports_the_class() {
        // T < N leaves the raw covariance rank-deficient, so λ=0 must
        // fail with a singularity error rather than produce garbage.
        let data = random_dataset(4, 1, 2, 4, 2);
        match fit_gaussian(&data, 0.0) {
            Err(Error::SingularCovariance { .. }) => {}
            other => panic!("expected singularity error, got {other:?}"),
        }
    }

    #[test]
    fn noiseless_pilots_fall_back_to_identity_shrinkage_target() {
        // All-identical pilots per class: zero trace would zero out the
        // shrinkage target; the fallback keeps the matrix invertible.
        let data = LabelledDataset::from_observations(
            1,
            2,
            1,
            vec![
                vec![obs(&[1, 1]), obs(&[1, 1])],
                vec![obs(&[-1, 1]), obs(&[-1, 1])],
            ],
        )
        .unwrap();
        let params = fit_gaussian(&data, 0.1).unwrap();
        for cov in &params.covariances {
            for r in 0..2 {
                for c in 0..2 {
                    let want = if r == c { 0.1 } else { 0.0 };
                    assert!((cov.get(r, c) - want).abs() < 1e-12);
                }
            }
        }
        assert!(matches!(
            fit_gaussian(&data, 0.0),
            Err(Error::SingularCovariance { class: 0 })
        ));
    }

    #[test]
    fn mcd_picks_exact_match_and_breaks_ties_low() {
        let params = CentroidParams {
            means: vec![vec![1.0, 1.0], vec![-1.0, -1.0]],
        };
        assert_eq!(detect_mcd(&obs(&[1, 1]), &params), ClassIndex(0));
        assert_eq!(detect_mcd(&obs(&[-1, -1]), &params), ClassIndex(1));

        let tied = CentroidParams {
            means: vec![vec![0.0, 0.0], vec![0.0, 0.0]],
        };
        assert_eq!(detect_mcd(&obs(&[1, -1]), &tied), ClassIndex(0));
    }

    #[test]
    fn mcd_agrees_with_a_naive_scan_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let means: Vec<Vec<f64>> = (0..8)
                .map(|_| (0..6).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            let params = CentroidParams { means: means.clone() };
            let bits: Vec<bool> = (0..6).map(|_| rng.random()).collect();
            let r = BinaryObservation::from_bits(&bits);
            let r_dense = r.to_f64_vec();

            let mut best = 0;
            let mut best_dist = f64::INFINITY;
            for (c, mean) in means.iter().enumerate() {
                let dist: f64 =
                    mean.iter().zip(&r_dense).map(|(m, r)| (r - m) * (r - m)).sum();
                if dist < best_dist {
                    best_dist = dist;
                    best = c;
                }
            }
            assert_eq!(detect_mcd(&r, &params), ClassIndex(best));
        }
    }

    #[test]
    fn identity_precision_mahalanobis_reduces_to_mcd() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let n = 8;
        let means: Vec<Vec<f64>> = (0..16)
            .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let centroid = CentroidParams { means: means.clone() };
        let gaussian = GaussianParams {
            means,
            covariances: vec![SquareMatrix::identity(n); 16],
            precisions: vec![SquareMatrix::identity(n); 16],
        };
        for _ in 0..200 {
            let bits: Vec<bool> = (0..n).map(|_| rng.random()).collect();
            let r = BinaryObservation::from_bits(&bits);
            assert_eq!(detect_mahalanobis(&r, &gaussian), detect_mcd(&r, &centroid));
        }
    }

    #[test]
    fn mahalanobis_matches_hand_evaluation_with_diagonal_precisions() {
        // Three classes on N=2 with distinct diagonal precisions.
        let means = vec![vec![1.0, 1.0], vec![-1.0, 1.0], vec![1.0, -1.0]];
        let diag = |a: f64, b: f64| {
            let mut m = SquareMatrix::zeros(2);
            m.set(0, 0, a);
            m.set(1, 1, b);
            m
        };
        let precisions = vec![diag(1.0, 1.0), diag(4.0, 0.25), diag(0.25, 4.0)];
        let covariances = vec![diag(1.0, 1.0), diag(0.25, 4.0), diag(4.0, 0.25)];
        let params = GaussianParams { means, covariances, precisions };

        // r = (-1, +1): class 0 scores 4, class 1 scores 0, class 2
        // scores 1 + 16.
        assert_eq!(detect_mahalanobis(&obs(&[-1, 1]), &params), ClassIndex(1));
        // r = (+1, -1): class 0 scores 4, class 1 scores 16 + 1 = 17,
        // class 2 scores 0.
        assert_eq!(detect_mahalanobis(&obs(&[1, -1]), &params), ClassIndex(2));
        // r = (+1, +1): exact match on class 0.
        assert_eq!(detect_mahalanobis(&obs(&[1, 1]), &params), ClassIndex(0));
    }

    #[test]
    fn zero_distance_wins_when_r_equals_a_centroid() {
        // Constant pilots per class make every fitted mean an exact ±1
        // pattern, so querying that pattern must return its class.
        let constant = LabelledDataset::from_observations(
            1,
            4,
            1,
            vec![
                vec![obs(&[1, 1]); 3],
                vec![obs(&[1, -1]); 3],
                vec![obs(&[-1, 1]); 3],
                vec![obs(&[-1, -1]); 3],
            ],
        )
        .unwrap();
        let params_c = fit_gaussian(&constant, 0.3).unwrap();
        for (c, pattern) in [[1, 1], [1, -1], [-1, 1], [-1, -1]].iter().enumerate() {
            let r = obs(&[pattern[0] as i8, pattern[1] as i8]);
            assert_eq!(detect_mahalanobis(&r, &params_c), ClassIndex(c));
        }
    }

    #[test]
    fn emld_majority_vote_follows_the_nearest_three() {
        // Class 0 contributes two near neighbors, class 1 one exact
        // match; with k=3 the vote is {0, 0, 1} → class 0.
        let data = LabelledDataset::from_observations(
            1,
            2,
            2,
            vec![
                vec![obs(&[1, 1, 1, -1]), obs(&[1, 1, -1, 1])],
                vec![obs(&[1, 1, 1, 1]), obs(&[-1, -1, -1, -1])],
            ],
        )
        .unwrap();
        let r = obs(&[1, 1, 1, 1]);
        assert_eq!(detect_emld(&r, &data, 3), ClassIndex(0));
        // k=1 finds the exact match instead.
        assert_eq!(detect_emld(&r, &data, 1), ClassIndex(1));
    }

    #[test]
    fn emld_with_k_1_matches_mmd_everywhere() {
        let data = random_dataset(8, 2, 4, 4, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(80);
        for _ in 0..500 {
            let bits: Vec<bool> = (0..8).map(|_| rng.random()).collect();
            let r = BinaryObservation::from_bits(&bits);
            assert_eq!(detect_emld(&r, &data, 1), detect_mmd(&r, &data));
        }
    }

    #[test]
    fn unique_exact_training_match_wins_at_k_1() {
        let data = random_dataset(9, 2, 2, 3, 4);
        let target = data.class_observations(ClassIndex(2))[1].clone();
        // Only meaningful when that observation is unique in the set.
        let occurrences: usize = data
            .iter_classes()
            .flat_map(|(_, pilots)| pilots.iter())
            .filter(|o| **o == target)
            .count();
        if occurrences == 1 {
            assert_eq!(detect_emld(&target, &data, 1), ClassIndex(2));
            assert_eq!(detect_mmd(&target, &data), ClassIndex(2));
        }
    }

    #[test]
    fn bernoulli_fit_counts_disagreements() {
        // Coordinate 0 samples: (+1,+1,-1,+1,-1) → signature +1, ε = 2/5.
        // Coordinate 1 samples: (+1,+1,+1,+1,+1) → raw 0, floored.
        let data = LabelledDataset::from_observations(
            1,
            2,
            1,
            vec![
                vec![
                    obs(&[1, 1]),
                    obs(&[1, 1]),
                    obs(&[-1, 1]),
                    obs(&[1, 1]),
                    obs(&[-1, 1]),
                ],
                vec![obs(&[-1, -1]); 5],
            ],
        )
        .unwrap();
        let params = fit_bernoulli(&data, 1e-3);
        assert_eq!(params.signatures[0].to_pm1(), vec![1, 1]);
        assert!((params.flip_probs[0][0] - 0.4).abs() < 1e-12);
        assert_eq!(params.flip_probs[0][1], 1e-3);
        assert!((params.weights[0][1] + (1e-3f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn bernoulli_tie_gives_positive_signature_and_half_probability() {
        let data = LabelledDataset::from_observations(
            1,
            2,
            1,
            vec![
                vec![obs(&[1, 1]), obs(&[-1, 1])],
                vec![obs(&[-1, -1]), obs(&[-1, -1])],
            ],
        )
        .unwrap();
        let params = fit_bernoulli(&data, 1e-3);
        assert_eq!(params.signatures[0].get(0), 1, "tie must resolve to +1");
        assert!((params.flip_probs[0][0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn bernoulli_weights_stay_within_the_expected_band() {
        let data = random_dataset(10, 2, 4, 8, 15);
        let params = fit_bernoulli(&data, 1e-3);
        let ln2 = std::f64::consts::LN_2;
        let max_w = -(1e-3f64).ln();
        for (sig, (probs, weights)) in params
            .signatures
            .iter()
            .zip(params.flip_probs.iter().zip(&params.weights))
        {
            assert_eq!(sig.len(), 16);
            for (&e, &w) in probs.iter().zip(weights) {
                assert!((1e-3..=0.5).contains(&e), "ε = {e}");
                assert!(
                    (ln2 - 1e-12..=max_w + 1e-12).contains(&w),
                    "weight {w} outside [ln 2, -ln floor]"
                );
                assert!((w + e.ln()).abs() < 1e-12, "weight inconsistent with ε");
            }
        }
    }

    #[test]
    fn bernoulli_signature_agrees_with_majority() {
        let data = random_dataset(11, 1, 8, 4, 7);
        let params = fit_bernoulli(&data, 1e-3);
        for (c, pilots) in data.iter_classes() {
            let sig = &params.signatures[c.0];
            for i in 0..data.n() {
                let agree =
                    pilots.iter().filter(|o| o.get(i) == sig.get(i)).count();
                assert!(2 * agree >= pilots.len(), "minority signature at {i}");
            }
        }
    }

    #[test]
    fn bernoulli_scores_match_hand_arithmetic() {
        // Class 0: μ=(+1,+1), ε=(0.1,0.1); class 1: μ=(−1,+1),
        // ε=(0.4,0.4).
        let params = BernoulliParams::from_probabilities(
            vec![obs(&[1, 1]), obs(&[-1, 1])],
            vec![vec![0.1, 0.1], vec![0.4, 0.4]],
        )
        .unwrap();
        let score = |r: &BinaryObservation, c: usize| {
            bernoulli_score(r, &params, ClassIndex(c), BernoulliScoring::WeightedDisagreement)
        };

        // r = (+1,+1): class 0 scores 0, class 1 pays one disagreement
        // 4·(−ln 0.4) ≈ 3.665.
        let r = obs(&[1, 1]);
        assert_eq!(score(&r, 0), 0.0);
        assert!((score(&r, 1) - 3.665).abs() < 1e-3, "{}", score(&r, 1));
        assert_eq!(detect_bernoulli(&r, &params), ClassIndex(0));

        // r = (−1,−1): class 0 pays two disagreements 8·(−ln 0.1) ≈
        // 18.42, class 1 one disagreement ≈ 3.665.
        let r = obs(&[-1, -1]);
        assert!((score(&r, 0) - 18.42).abs() < 1e-2, "{}", score(&r, 0));
        assert!((score(&r, 1) - 3.665).abs() < 1e-3);
        assert_eq!(detect_bernoulli(&r, &params), ClassIndex(1));
    }

    #[test]
    fn bernoulli_ties_resolve_to_the_lower_class() {
        let params = BernoulliParams::from_probabilities(
            vec![obs(&[1, -1]), obs(&[1, -1])],
            vec![vec![0.2, 0.2], vec![0.2, 0.2]],
        )
        .unwrap();
        for candidate in [[1i8, 1], [-1, -1], [1, -1], [-1, 1]] {
            let r = obs(&candidate);
            assert_eq!(detect_bernoulli(&r, &params), ClassIndex(0));
        }
    }

    #[test]
    fn uniform_flip_probabilities_reduce_to_hamming_detection() {
        let data = random_dataset(12, 2, 4, 6, 5);
        let uniform: Vec<Vec<f64>> = (0..data.num_classes())
            .map(|_| vec![0.23; data.n()])
            .collect();
        let fitted = fit_bernoulli(&data, 1e-3);
        let params =
            BernoulliParams::from_probabilities(fitted.signatures.clone(), uniform).unwrap();

        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..300 {
            let bits: Vec<bool> = (0..data.n()).map(|_| rng.random()).collect();
            let r = BinaryObservation::from_bits(&bits);
            let by_score = detect_bernoulli(&r, &params);
            // Independent minimum-Hamming scan with the same tie-break.
            let mut best = (u32::MAX, 0);
            for (c, sig) in params.signatures.iter().enumerate() {
                let d = r.hamming(sig);
                if d < best.0 {
                    best = (d, c);
                }
            }
            assert_eq!(by_score, ClassIndex(best.1));
        }
    }

    #[test]
    fn exact_likelihood_scoring_orders_by_true_probability() {
        let params = BernoulliParams::from_probabilities(
            vec![obs(&[1, 1, 1, 1]), obs(&[-1, 1, -1, 1])],
            vec![vec![0.45, 0.4, 0.35, 0.3], vec![0.05, 0.1, 0.2, 0.25]],
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..100 {
            let bits: Vec<bool> = (0..4).map(|_| rng.random()).collect();
            let r = BinaryObservation::from_bits(&bits);
            for c in 0..2 {
                // Recompute the negative log-likelihood coordinate by
                // coordinate and compare.
                let mut want = 0.0;
                for i in 0..4 {
                    let e = params.flip_probs[c][i];
                    if r.get(i) == params.signatures[c].get(i) {
                        want -= (1.0 - e).ln();
                    } else {
                        want -= e.ln();
                    }
                }
                let got = bernoulli_score(
                    &r,
                    &params,
                    ClassIndex(c),
                    BernoulliScoring::ExactLikelihood,
                );
                assert!((got - want).abs() < 1e-12, "class {c}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn fitted_parameters_maximize_the_grid_likelihood() {
        // The training likelihood factorizes over coordinates, so the
        // maximum over the product grid {±1}^N × {0,0.01,…,0.5}^N is the
        // product of per-coordinate maxima; a coarse full-grid scan below
        // guards that decomposition.
        let t = 5u32;
        let n = 4usize;
        let grid: Vec<f64> = (0..=50).map(|i| f64::from(i) * 0.01).collect();
        let loglik = |disagree: u32, e: f64| -> f64 {
            let agree = t - disagree;
            let mut ll = 0.0;
            if disagree > 0 {
                ll += f64::from(disagree) * e.ln();
            }
            if agree > 0 {
                ll += f64::from(agree) * (1.0 - e).ln();
            }
            ll
        };

        let mut rng = ChaCha8Rng::seed_from_u64(15);
        for instance in 0..20 {
            let pilots: Vec<BinaryObservation> = (0..t)
                .map(|_| {
                    let bits: Vec<bool> = (0..n).map(|_| rng.random()).collect();
                    BinaryObservation::from_bits(&bits)
                })
                .collect();
            let data = LabelledDataset::from_observations(
                1,
                2,
                n / 2,
                vec![pilots.clone(), pilots.clone()],
            )
            .unwrap();
            let params = fit_bernoulli(&data, 1e-12);

            let mut fitted_ll = 0.0;
            let mut grid_ll = 0.0;
            for i in 0..n {
                let disagree = pilots
                    .iter()
                    .filter(|o| o.get(i) != params.signatures[0].get(i))
                    .count() as u32;
                fitted_ll += loglik(disagree, params.flip_probs[0][i]);

                let plus = pilots.iter().filter(|o| o.get(i) == 1).count() as u32;
                let mut best = f64::NEG_INFINITY;
                for sig_plus in [true, false] {
                    let d = if sig_plus { t - plus } else { plus };
                    for &e in &grid {
                        let ll = loglik(d, e);
                        if ll > best {
                            best = ll;
                        }
                    }
                }
                grid_ll += best;
            }
            assert!(
                fitted_ll >= grid_ll - 1e-9,
                "instance {instance}: fitted {fitted_ll} below grid max {grid_ll}"
            );
        }
    }
}
