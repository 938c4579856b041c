//! The training phase: `T` labelled pilot observations per joint message
//! class, collected over one fixed channel realization, plus a compact
//! binary dump format for saving datasets to disk.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::Rng;

use crate::netsim::{
    class_decode, transmit, BinaryObservation, ChannelRealization, ClassIndex, SystemConfig,
};
use crate::{Error, Result};

/// `T` binary observations for each of the `m^K` classes, all generated
/// over the same channel realization.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelledDataset {
    k: usize,
    m: usize,
    n_r: usize,
    t: usize,
    /// `observations[c][t]`, class-major.
    observations: Vec<Vec<BinaryObservation>>,
}

impl LabelledDataset {
    /// Assembles a dataset from explicit observations: `observations[c]`
    /// holds class `c`'s pilots. Validates the shape invariants — exactly
    /// `m^K` classes, the same pilot count everywhere, every observation
    /// of length `2 * n_r`.
    pub fn from_observations(
        k: usize,
        m: usize,
        n_r: usize,
        observations: Vec<Vec<BinaryObservation>>,
    ) -> Result<Self> {
        let expected = crate::netsim::num_classes(k, m);
        if observations.len() != expected {
            return Err(Error::config(
                "observations",
                format!("expected m^K = {expected} classes, got {}", observations.len()),
            ));
        }
        let t = observations.first().map(Vec::len).unwrap_or(0);
        if t == 0 {
            return Err(Error::config("t", "need at least one pilot per class"));
        }
        for (c, class) in observations.iter().enumerate() {
            if class.len() != t {
                return Err(Error::config(
                    "observations",
                    format!("class {c} has {} pilots, class 0 has {t}", class.len()),
                ));
            }
            if class.iter().any(|obs| obs.len() != 2 * n_r) {
                return Err(Error::config(
                    "observations",
                    format!("class {c} holds an observation of length != 2·n_r"),
                ));
            }
        }
        Ok(LabelledDataset { k, m, n_r, t, observations })
    }

    /// Pilots per class.
    pub fn pilots_per_class(&self) -> usize {
        self.t
    }

    /// Number of classes `m^K`.
    pub fn num_classes(&self) -> usize {
        self.observations.len()
    }

    /// Observation length `N = 2 * N_r`.
    pub fn n(&self) -> usize {
        2 * self.n_r
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n_r(&self) -> usize {
        self.n_r
    }

    /// Total observation count `T · m^K`.
    pub fn len(&self) -> usize {
        self.t * self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The `T` pilots recorded for class `c`.
    pub fn class_observations(&self, c: ClassIndex) -> &[BinaryObservation] {
        &self.observations[c.0]
    }

    /// Iterator over `(class, pilots)` in class order.
    pub fn iter_classes(
        &self,
    ) -> impl Iterator<Item = (ClassIndex, &[BinaryObservation])> + '_ {
        self.observations
            .iter()
            .enumerate()
            .map(|(c, obs)| (ClassIndex(c), obs.as_slice()))
    }
}

/// Runs the training phase: for every class `c` in ascending order,
/// decodes its message vector and transmits it `T` times with fresh
/// noise over the fixed `channel`.
///
/// The class-major, pilot-minor generation order is fixed so a given
/// (channel, seed) pair always yields the identical dataset.
///
/// Panics if `t == 0` or if `channel` and `config` disagree on
/// dimensions; both are caller bugs.
pub fn collect_training<R: Rng + ?Sized>(
    channel: &ChannelRealization,
    config: &SystemConfig,
    t: usize,
    rng: &mut R,
) -> LabelledDataset {
    assert!(t >= 1, "need at least one pilot per class");
    assert_eq!(channel.sources(), config.k, "channel/config source count mismatch");
    assert_eq!(channel.n_r(), config.n_r, "channel/config antenna count mismatch");

    let constellation = config.constellation();
    let num_classes = config.num_classes();
    let observations: Vec<Vec<BinaryObservation>> = (0..num_classes)
        .map(|c| {
            let w = class_decode(ClassIndex(c), config.k, config.m);
            (0..t).map(|_| transmit(channel, &constellation, &w, rng)).collect()
        })
        .collect();

    LabelledDataset { k: config.k, m: config.m, n_r: config.n_r, t, observations }
}

/// Magic bytes and version of the dump format below.
const DUMP_MAGIC: &[u8; 4] = b"OBSL";
const DUMP_VERSION: u32 = 1;

impl LabelledDataset {
    /// Writes the dataset to `writer` in a compact binary layout:
    ///
    /// ```text
    /// bytes 0..4    magic "OBSL"
    /// bytes 4..8    format version (u32 LE) = 1
    /// then u32 LE   K, m, N_r, T
    /// then u64 LE   seed (recorded for provenance; not used on load)
    /// then          ceil(m^K · T · N / 8) payload bytes
    /// ```
    ///
    /// Payload bits run class-major, pilot-minor, coordinate innermost,
    /// LSB-first within each byte; a set bit encodes `+1`. The round trip
    /// through [`LabelledDataset::load`] is bit-exact.
    pub fn dump<W: Write>(&self, seed: u64, writer: &mut W) -> std::io::Result<()> {
        writer.write_all(DUMP_MAGIC)?;
        writer.write_all(&DUMP_VERSION.to_le_bytes())?;
        for dim in [self.k, self.m, self.n_r, self.t] {
            let dim = u32::try_from(dim).expect("dataset dimension overflows u32");
            writer.write_all(&dim.to_le_bytes())?;
        }
        writer.write_all(&seed.to_le_bytes())?;

        let mut byte = 0u8;
        let mut filled = 0u8;
        for class in &self.observations {
            for obs in class {
                for entry in obs.iter_pm1() {
                    if entry == 1 {
                        byte |= 1 << filled;
                    }
                    filled += 1;
                    if filled == 8 {
                        writer.write_all(&[byte])?;
                        byte = 0;
                        filled = 0;
                    }
                }
            }
        }
        if filled > 0 {
            writer.write_all(&[byte])?;
        }
        writer.flush()
    }

    /// Reads a dump produced by [`LabelledDataset::dump`], returning the
    /// dataset and the recorded seed.
    pub fn load<R: Read>(reader: &mut R) -> Result<(Self, u64)> {
        let bad = |msg: &str| Error::MalformedDump(msg.to_string());
        let io_err = |e: std::io::Error| Error::MalformedDump(format!("truncated dump: {e}"));

        let mut magic = [0u8; 4];
        reader.read_exact(&mut magic).map_err(io_err)?;
        if &magic != DUMP_MAGIC {
            return Err(bad("missing OBSL magic"));
        }
        let mut u32_buf = [0u8; 4];
        reader.read_exact(&mut u32_buf).map_err(io_err)?;
        let version = u32::from_le_bytes(u32_buf);
        if version != DUMP_VERSION {
            return Err(Error::MalformedDump(format!("unsupported version {version}")));
        }
        let mut dims = [0usize; 4];
        for d in dims.iter_mut() {
            reader.read_exact(&mut u32_buf).map_err(io_err)?;
            *d = u32::from_le_bytes(u32_buf) as usize;
        }
        let [k, m, n_r, t] = dims;
        if k == 0 || m == 0 || n_r == 0 || t == 0 {
            return Err(bad("zero dimension in header"));
        }
        let mut u64_buf = [0u8; 8];
        reader.read_exact(&mut u64_buf).map_err(io_err)?;
        let seed = u64::from_le_bytes(u64_buf);

        let num_classes = m
            .checked_pow(u32::try_from(k).map_err(|_| bad("K overflows u32"))?)
            .ok_or_else(|| bad("m^K overflows"))?;
        let n = 2 * n_r;
        let total_bits = num_classes
            .checked_mul(t)
            .and_then(|v| v.checked_mul(n))
            .ok_or_else(|| bad("payload size overflows"))?;
        let mut payload = vec![0u8; total_bits.div_ceil(8)];
        reader.read_exact(&mut payload).map_err(io_err)?;
        let mut trailer = [0u8; 1];
        if reader.read(&mut trailer).map_err(io_err)? != 0 {
            return Err(bad("trailing bytes after payload"));
        }

        let mut bit_index = 0usize;
        let mut next_bit = || {
            let b = payload[bit_index / 8] >> (bit_index % 8) & 1 == 1;
            bit_index += 1;
            b
        };
        let observations: Vec<Vec<BinaryObservation>> = (0..num_classes)
            .map(|_| {
                (0..t)
                    .map(|_| {
                        let bits: Vec<bool> = (0..n).map(|_| next_bit()).collect();
                        BinaryObservation::from_bits(&bits)
                    })
                    .collect()
            })
            .collect();

        let dataset = Self::from_observations(k, m, n_r, observations)?;
        Ok((dataset, seed))
    }

    /// [`LabelledDataset::dump`] to a file path.
    pub fn dump_to_path<P: AsRef<Path>>(&self, seed: u64, path: P) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut writer = BufWriter::new(file);
        self.dump(seed, &mut writer).map_err(|e| Error::io(path, e))
    }

    /// [`LabelledDataset::load`] from a file path.
    pub fn load_from_path<P: AsRef<Path>>(path: P) -> Result<(Self, u64)> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::load(&mut BufReader::new(file))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netsim::draw_channel;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small_dataset(seed: u64, snr_db: f64) -> (LabelledDataset, SystemConfig) {
        let config = SystemConfig::new(2, 3, 2, 2, 4, 1.0, snr_db).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let channel = draw_channel(&config, &mut rng);
        let dataset = collect_training(&channel, &config, 5, &mut rng);
        (dataset, config)
    }

    #[test]
    fn training_set_has_t_pilots_for_every_class() {
        let (dataset, config) = small_dataset(1, 8.0);
        assert_eq!(dataset.num_classes(), 16);
        assert_eq!(dataset.pilots_per_class(), 5);
        assert_eq!(dataset.len(), 80);
        for (_, pilots) in dataset.iter_classes() {
            assert_eq!(pilots.len(), 5);
            for obs in pilots {
                assert_eq!(obs.len(), config.n());
            }
        }
    }

    #[test]
    fn single_source_counting_matches_m_to_the_k() {
        let config = SystemConfig::new(1, 2, 1, 2, 4, 1.0, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let channel = draw_channel(&config, &mut rng);
        let dataset = collect_training(&channel, &config, 15, &mut rng);
        assert_eq!(dataset.num_classes(), 4);
        assert_eq!(dataset.len(), 60);
    }

    #[test]
    fn noiseless_pilots_within_a_class_are_identical() {
        let (dataset, _) = small_dataset(2, f64::INFINITY);
        for (c, pilots) in dataset.iter_classes() {
            for obs in pilots {
                assert_eq!(obs, &pilots[0], "class {c}");
            }
        }
    }

    #[test]
    fn collection_is_seed_deterministic() {
        let (a, _) = small_dataset(77, 4.0);
        let (b, _) = small_dataset(77, 4.0);
        assert_eq!(a, b);
    }

    #[test]
    fn dump_load_round_trips_bit_exactly() {
        let (dataset, _) = small_dataset(5, 3.0);
        let mut buf = Vec::new();
        dataset.dump(0xDEAD_BEEF, &mut buf).unwrap();
        let (back, seed) = LabelledDataset::load(&mut buf.as_slice()).unwrap();
        assert_eq!(seed, 0xDEAD_BEEF);
        assert_eq!(back, dataset);
    }

    #[test]
    fn load_rejects_corrupt_dumps() {
        let (dataset, _) = small_dataset(6, 3.0);
        let mut buf = Vec::new();
        dataset.dump(1, &mut buf).unwrap();

        let mut wrong_magic = buf.clone();
        wrong_magic[0] = b'X';
        assert!(LabelledDataset::load(&mut wrong_magic.as_slice()).is_err());

        let truncated = &buf[..buf.len() - 2];
        assert!(LabelledDataset::load(&mut &truncated[..]).is_err());

        let mut trailing = buf.clone();
        trailing.push(0);
        assert!(LabelledDataset::load(&mut trailing.as_slice()).is_err());
    }

    #[test]
    fn dump_round_trips_through_a_file() {
        let (dataset, _) = small_dataset(8, 2.0);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("train.obsl");
        dataset.dump_to_path(42, &path).unwrap();
        let (back, seed) = LabelledDataset::load_from_path(&path).unwrap();
        assert_eq!(seed, 42);
        assert_eq!(back, dataset);
    }
}
