//! Monte-Carlo BER benchmarking: SNR sweeps over many channel
//! realizations, detector comparison, reduced-search budget sweeps, CSV
//! output, and the flat `key = value` config format the `slbench` binary
//! consumes.
//!
//! Reproducibility contract: every `(SNR point, realization)` pair owns a
//! dedicated counter-mode random stream derived from the experiment seed,
//! so results are a pure function of the config — independent of worker
//! count and bit-identical across reruns. Wall-time measurement is off by
//! default for the same reason; `measure_time = true` fills the
//! `detect_us` column at the cost of run-to-run CSV variation in that
//! column only.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{collect_training, LabelledDataset};
use crate::detectors::{
    detect_bernoulli, detect_emld, detect_mahalanobis, detect_mcd, detect_mmd,
    fit_bernoulli, fit_centroid, fit_gaussian, BernoulliParams, CentroidParams,
    GaussianParams,
};
use crate::forest::{build_forest, detect_lsl_with_stats, ClusterForest};
use crate::netsim::{class_decode, draw_channel, transmit, ClassIndex, SystemConfig};
use crate::{Error, Result};

/// The detectors the benchmark can run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DetectorKind {
    Mcd,
    Mahalanobis,
    Emld,
    Mmd,
    Bernoulli,
    Lsl,
}

impl DetectorKind {
    pub const ALL: [DetectorKind; 6] = [
        DetectorKind::Mcd,
        DetectorKind::Mahalanobis,
        DetectorKind::Emld,
        DetectorKind::Mmd,
        DetectorKind::Bernoulli,
        DetectorKind::Lsl,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DetectorKind::Mcd => "mcd",
            DetectorKind::Mahalanobis => "mahalanobis",
            DetectorKind::Emld => "emld",
            DetectorKind::Mmd => "mmd",
            DetectorKind::Bernoulli => "bernoulli",
            DetectorKind::Lsl => "lsl",
        }
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DetectorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DetectorKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                Error::config(
                    "detectors",
                    format!("unknown detector '{s}' (expected mcd, mahalanobis, emld, mmd, bernoulli or lsl)"),
                )
            })
    }
}

/// Parses a comma-separated detector list, rejecting duplicates.
pub fn parse_detector_list(s: &str) -> Result<Vec<DetectorKind>> {
    let mut detectors = Vec::new();
    for item in s.split(',') {
        let kind: DetectorKind = item.trim().parse()?;
        if detectors.contains(&kind) {
            return Err(Error::config("detectors", format!("duplicate detector '{kind}'")));
        }
        detectors.push(kind);
    }
    Ok(detectors)
}

/// Reduced-search parameters: branching factor `J`, tree count `W`, and
/// candidate budget `L_max`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LslConfig {
    pub branching: usize,
    pub trees: usize,
    pub budget: usize,
}

/// Everything one benchmark run depends on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub k: usize,
    pub n_r: usize,
    pub l: usize,
    pub hops: usize,
    pub m: usize,
    pub p_t: f64,
    /// Pilots per class in the training phase.
    pub t: usize,
    pub detectors: Vec<DetectorKind>,
    /// Neighbor count for `emld`.
    pub emld_k: usize,
    pub lsl: LslConfig,
    pub snr_grid_db: Vec<f64>,
    pub channel_realizations: usize,
    pub payload_symbols_per_realization: usize,
    pub seed: u64,
    pub shrinkage_lambda: f64,
    pub epsilon_floor: f64,
    /// Fill `detect_us` with measured wall time. Off by default so CSV
    /// output stays bit-identical across reruns of the same seed.
    pub measure_time: bool,
    /// Budgets for [`run_lmax_sweep`]; ignored by [`run_experiment`].
    pub lmax_grid: Vec<usize>,
}

impl ExperimentConfig {
    /// Checks every invariant, naming the offending config key.
    pub fn validate(&self) -> Result<()> {
        if self.snr_grid_db.is_empty() {
            return Err(Error::config("snr_grid_db", "need at least one SNR point"));
        }
        for &snr in &self.snr_grid_db {
            SystemConfig::new(self.k, self.n_r, self.l, self.hops, self.m, self.p_t, snr)?;
        }
        let classes = self.num_classes()?;
        if self.t == 0 {
            return Err(Error::config("t", "need at least one pilot per class"));
        }
        if self.detectors.is_empty() {
            return Err(Error::config("detectors", "need at least one detector"));
        }
        if self.channel_realizations == 0 {
            return Err(Error::config("channel_realizations", "must be positive"));
        }
        if self.payload_symbols_per_realization == 0 {
            return Err(Error::config("payload_symbols_per_realization", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.shrinkage_lambda) {
            return Err(Error::config("shrinkage_lambda", "must lie in [0, 1]"));
        }
        if !(self.epsilon_floor > 0.0 && self.epsilon_floor < 0.5) {
            return Err(Error::config("epsilon_floor", "must lie in (0, 0.5)"));
        }
        if self.detectors.contains(&DetectorKind::Emld)
            && !(1..=self.t * classes).contains(&self.emld_k)
        {
            return Err(Error::config(
                "emld_k",
                format!("must lie in 1..={} (T·m^K)", self.t * classes),
            ));
        }
        if self.detectors.contains(&DetectorKind::Lsl) {
            self.validate_lsl(self.lsl.budget)?;
        }
        for &budget in &self.lmax_grid {
            self.validate_lsl(budget)?;
        }
        Ok(())
    }

    fn validate_lsl(&self, budget: usize) -> Result<()> {
        let classes = self.num_classes()?;
        if self.lsl.branching < 2 {
            return Err(Error::config("lsl_j", "branching factor must be at least 2"));
        }
        if self.lsl.trees == 0 {
            return Err(Error::config("lsl_w", "need at least one tree"));
        }
        if !(1..=classes).contains(&budget) {
            return Err(Error::config(
                "lsl_lmax",
                format!("budget {budget} outside 1..={classes} (m^K)"),
            ));
        }
        Ok(())
    }

    /// `m^K`, guarded against absurd class counts.
    pub fn num_classes(&self) -> Result<usize> {
        let k = u32::try_from(self.k)
            .map_err(|_| Error::config("k", "source count overflows u32"))?;
        match self.m.checked_pow(k) {
            Some(classes) if classes <= 1 << 24 => Ok(classes),
            _ => Err(Error::config(
                "k",
                format!("m^K = {}^{} exceeds the supported class count (2^24)", self.m, self.k),
            )),
        }
    }

    fn system_at(&self, snr_db: f64) -> Result<SystemConfig> {
        SystemConfig::new(self.k, self.n_r, self.l, self.hops, self.m, self.p_t, snr_db)
    }

    /// Message bits per joint class: `K · log₂ m`.
    fn bits_per_class(&self) -> u64 {
        self.k as u64 * u64::from(self.m.trailing_zeros())
    }
}

/// Accumulates config keys (from a file and/or CLI overrides) and builds
/// a validated [`ExperimentConfig`].
///
/// Recognized keys mirror the config fields: `k`, `n_r`, `l`, `hops`,
/// `m`, `p_t`, `t`, `detectors`, `emld_k`, `lsl_j`, `lsl_w`, `lsl_lmax`,
/// `snr_grid_db`, `channel_realizations`,
/// `payload_symbols_per_realization`, `seed`, `shrinkage_lambda`,
/// `epsilon_floor`, `measure_time`, `lmax_grid`.
#[derive(Clone, Debug, Default)]
pub struct ConfigBuilder {
    pub k: Option<usize>,
    pub n_r: Option<usize>,
    pub l: Option<usize>,
    pub hops: Option<usize>,
    pub m: Option<usize>,
    pub p_t: Option<f64>,
    pub t: Option<usize>,
    pub detectors: Option<Vec<DetectorKind>>,
    pub emld_k: Option<usize>,
    pub lsl_j: Option<usize>,
    pub lsl_w: Option<usize>,
    pub lsl_lmax: Option<usize>,
    pub snr_grid_db: Option<Vec<f64>>,
    pub channel_realizations: Option<usize>,
    pub payload_symbols_per_realization: Option<usize>,
    pub seed: Option<u64>,
    pub shrinkage_lambda: Option<f64>,
    pub epsilon_floor: Option<f64>,
    pub measure_time: Option<bool>,
    pub lmax_grid: Option<Vec<usize>>,
}

fn parse_field<T: FromStr>(field: &str, value: &str, expected: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::config(field, format!("expected {expected}, got '{}'", value.trim())))
}

fn parse_f64_field(field: &str, value: &str) -> Result<f64> {
    let v = value.trim();
    match v {
        "inf" | "+inf" => Ok(f64::INFINITY),
        _ => parse_field(field, v, "a real number"),
    }
}

fn parse_list<T>(field: &str, value: &str, item: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    let items: Vec<T> = value
        .split(',')
        .map(|s| item(s.trim()))
        .collect::<Result<_>>()?;
    if items.is_empty() {
        return Err(Error::config(field, "list must not be empty"));
    }
    Ok(items)
}

impl ConfigBuilder {
    /// Parses flat `key = value` text: one pair per line, `#` starts a
    /// comment, blank lines ignored.
    pub fn parse_str(text: &str) -> Result<Self> {
        let mut builder = ConfigBuilder::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::config(
                    format!("line {}", lineno + 1),
                    "expected 'key = value'".to_string(),
                )
            })?;
            builder.set(key.trim(), value.trim())?;
        }
        Ok(builder)
    }

    /// Reads and parses a config file.
    pub fn from_path<P: AsRef<Path>>(path: P) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_str(&text)
    }

    /// Applies one key/value pair.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "k" => self.k = Some(parse_field(key, value, "a positive integer")?),
            "n_r" => self.n_r = Some(parse_field(key, value, "a positive integer")?),
            "l" => self.l = Some(parse_field(key, value, "a positive integer")?),
            "hops" => self.hops = Some(parse_field(key, value, "a positive integer")?),
            "m" => self.m = Some(parse_field(key, value, "a positive integer")?),
            "p_t" => self.p_t = Some(parse_f64_field(key, value)?),
            "t" => self.t = Some(parse_field(key, value, "a positive integer")?),
            "detectors" => self.detectors = Some(parse_detector_list(value)?),
            "emld_k" => self.emld_k = Some(parse_field(key, value, "a positive integer")?),
            "lsl_j" => self.lsl_j = Some(parse_field(key, value, "an integer ≥ 2")?),
            "lsl_w" => self.lsl_w = Some(parse_field(key, value, "a positive integer")?),
            "lsl_lmax" => self.lsl_lmax = Some(parse_field(key, value, "a positive integer")?),
            "snr_grid_db" => {
                self.snr_grid_db = Some(parse_list(key, value, |s| parse_f64_field(key, s))?)
            }
            "channel_realizations" => {
                self.channel_realizations =
                    Some(parse_field(key, value, "a positive integer")?)
            }
            "payload_symbols_per_realization" => {
                self.payload_symbols_per_realization =
                    Some(parse_field(key, value, "a positive integer")?)
            }
            "seed" => self.seed = Some(parse_field(key, value, "an unsigned 64-bit integer")?),
            "shrinkage_lambda" => {
                self.shrinkage_lambda = Some(parse_f64_field(key, value)?)
            }
            "epsilon_floor" => self.epsilon_floor = Some(parse_f64_field(key, value)?),
            "measure_time" => {
                self.measure_time = Some(parse_field(key, value, "true or false")?)
            }
            "lmax_grid" => {
                self.lmax_grid = Some(parse_list(key, value, |s| {
                    parse_field(key, s, "a positive integer")
                })?)
            }
            other => {
                return Err(Error::config(other, "unknown configuration key"));
            }
        }
        Ok(())
    }

    /// Resolves defaults, checks required keys, and validates the result.
    pub fn build(self) -> Result<ExperimentConfig> {
        fn required<T>(field: &str, value: Option<T>) -> Result<T> {
            value.ok_or_else(|| Error::config(field, "required key is missing"))
        }

        let detectors = required("detectors", self.detectors)?;
        if detectors.contains(&DetectorKind::Emld) && self.emld_k.is_none() {
            return Err(Error::config("emld_k", "required when the emld detector is requested"));
        }
        if detectors.contains(&DetectorKind::Lsl) && self.lsl_lmax.is_none() {
            return Err(Error::config("lsl_lmax", "required when the lsl detector is requested"));
        }

        let config = ExperimentConfig {
            k: required("k", self.k)?,
            n_r: required("n_r", self.n_r)?,
            l: required("l", self.l)?,
            hops: self.hops.unwrap_or(2),
            m: required("m", self.m)?,
            p_t: self.p_t.unwrap_or(1.0),
            t: required("t", self.t)?,
            detectors,
            emld_k: self.emld_k.unwrap_or(1),
            lsl: LslConfig {
                branching: self.lsl_j.unwrap_or(32),
                trees: self.lsl_w.unwrap_or(4),
                budget: self.lsl_lmax.unwrap_or(1),
            },
            snr_grid_db: required("snr_grid_db", self.snr_grid_db)?,
            channel_realizations: required("channel_realizations", self.channel_realizations)?,
            payload_symbols_per_realization: required(
                "payload_symbols_per_realization",
                self.payload_symbols_per_realization,
            )?,
            seed: required("seed", self.seed)?,
            shrinkage_lambda: self.shrinkage_lambda.unwrap_or(0.1),
            epsilon_floor: self.epsilon_floor.unwrap_or(1e-3),
            measure_time: self.measure_time.unwrap_or(false),
            lmax_grid: self.lmax_grid.unwrap_or_default(),
        };
        config.validate()?;
        Ok(config)
    }
}

/// One CSV row: a detector's aggregate performance at one SNR point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BerRecord {
    pub detector: String,
    pub snr_db: f64,
    pub errors: u64,
    pub bits: u64,
    pub ber: f64,
    /// Mean distance (or weighted-distance) evaluations per detection.
    pub dist_evals: f64,
    /// Mean wall time per detection in microseconds; 0 unless
    /// `measure_time` was set.
    pub detect_us: f64,
}

/// A detector to run, with its display name and (for the reduced-search
/// detector) candidate budget.
#[derive(Clone, Debug)]
struct DetectorInstance {
    kind: DetectorKind,
    name: String,
    budget: usize,
}

#[derive(Clone, Copy, Default)]
struct Tally {
    errors: u64,
    bits: u64,
    dist_evals: u64,
    detections: u64,
    nanos: u64,
}

impl Tally {
    fn absorb(&mut self, other: &Tally) {
        self.errors += other.errors;
        self.bits += other.bits;
        self.dist_evals += other.dist_evals;
        self.detections += other.detections;
        self.nanos += other.nanos;
    }
}

/// Fitted per-realization state shared by all detector instances.
struct FittedModels {
    training: LabelledDataset,
    centroid: Option<CentroidParams>,
    gaussian: Option<GaussianParams>,
    bernoulli: Option<BernoulliParams>,
    forest: Option<ClusterForest>,
}

/// Runs the configured detectors over the SNR grid and returns one
/// record per (detector, SNR point), detector-major in config order.
///
/// Pipeline per (SNR point, channel realization): draw the channel,
/// collect `T` pilots per class, fit the requested models, build the
/// signature forest if the reduced-search detector is requested, then
/// transmit uniformly drawn payload messages and count message-bit errors
/// (class indices concatenate the per-source symbol labels, so XOR +
/// popcount counts exactly the wrong label bits).
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<BerRecord>> {
    config.validate()?;
    let instances: Vec<DetectorInstance> = config
        .detectors
        .iter()
        .map(|&kind| DetectorInstance {
            kind,
            name: kind.name().to_string(),
            budget: config.lsl.budget,
        })
        .collect();
    run_with_instances(config, &instances)
}

/// Budget sweep: runs the full-search Bernoulli detector as the
/// reference plus the reduced-search detector at every budget in
/// `lmax_grid` (rows named `lsl_<budget>`), sharing channels, training
/// sets and forests so the comparison is paired sample-by-sample.
pub fn run_lmax_sweep(config: &ExperimentConfig) -> Result<Vec<BerRecord>> {
    config.validate()?;
    if config.lmax_grid.is_empty() {
        return Err(Error::config("lmax_grid", "sweep requires at least one budget"));
    }
    let mut instances = vec![DetectorInstance {
        kind: DetectorKind::Bernoulli,
        name: DetectorKind::Bernoulli.name().to_string(),
        budget: 1,
    }];
    for &budget in &config.lmax_grid {
        instances.push(DetectorInstance {
            kind: DetectorKind::Lsl,
            name: format!("lsl_{budget}"),
            budget,
        });
    }
    run_with_instances(config, &instances)
}

fn run_with_instances(
    config: &ExperimentConfig,
    instances: &[DetectorInstance],
) -> Result<Vec<BerRecord>> {
    let realizations = config.channel_realizations;
    let mut totals: Vec<Vec<Tally>> = Vec::with_capacity(config.snr_grid_db.len());
    for (snr_index, &snr_db) in config.snr_grid_db.iter().enumerate() {
        let system = config.system_at(snr_db)?;
        let tallies: Vec<Vec<Tally>> = (0..realizations)
            .into_par_iter()
            .map(|r| {
                let stream = (snr_index * realizations + r) as u64;
                run_realization(config, &system, instances, stream)
            })
            .collect::<Result<_>>()?;
        let mut merged = vec![Tally::default(); instances.len()];
        for per_realization in &tallies {
            for (total, tally) in merged.iter_mut().zip(per_realization) {
                total.absorb(tally);
            }
        }
        totals.push(merged);
    }

    let mut records = Vec::with_capacity(instances.len() * config.snr_grid_db.len());
    for (i, instance) in instances.iter().enumerate() {
        for (snr_index, &snr_db) in config.snr_grid_db.iter().enumerate() {
            let tally = &totals[snr_index][i];
            records.push(BerRecord {
                detector: instance.name.clone(),
                snr_db,
                errors: tally.errors,
                bits: tally.bits,
                ber: tally.errors as f64 / tally.bits as f64,
                dist_evals: tally.dist_evals as f64 / tally.detections as f64,
                detect_us: tally.nanos as f64 / 1000.0 / tally.detections as f64,
            });
        }
    }
    Ok(records)
}

/// One channel realization: training, fitting, payload detection.
///
/// `stream` indexes the realization globally (SNR-major); the forest
/// build uses the same index in a separate stream namespace (top bit
/// set) so a detector's payload stream never depends on which other
/// detectors were requested.
fn run_realization(
    config: &ExperimentConfig,
    system: &SystemConfig,
    instances: &[DetectorInstance],
    stream: u64,
) -> Result<Vec<Tally>> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(stream);

    let channel = draw_channel(system, &mut rng);
    let training = collect_training(&channel, system, config.t, &mut rng);

    let wants = |kind: DetectorKind| instances.iter().any(|i| i.kind == kind);
    let centroid = wants(DetectorKind::Mcd).then(|| fit_centroid(&training));
    let gaussian = if wants(DetectorKind::Mahalanobis) {
        Some(fit_gaussian(&training, config.shrinkage_lambda)?)
    } else {
        None
    };
    let bernoulli = (wants(DetectorKind::Bernoulli) || wants(DetectorKind::Lsl))
        .then(|| fit_bernoulli(&training, config.epsilon_floor));
    let forest = if wants(DetectorKind::Lsl) {
        let mut forest_rng = ChaCha8Rng::seed_from_u64(config.seed);
        forest_rng.set_stream(stream | 1 << 63);
        let signatures = &bernoulli.as_ref().expect("fitted above").signatures;
        Some(build_forest(
            signatures,
            config.lsl.branching,
            config.lsl.trees,
            &mut forest_rng,
        ))
    } else {
        None
    };
    let models = FittedModels { training, centroid, gaussian, bernoulli, forest };

    let constellation = system.constellation();
    let classes = system.num_classes();
    let full_scan_evals = classes as u64;
    let neighbor_scan_evals = (config.t * classes) as u64;

    let mut tallies = vec![Tally::default(); instances.len()];
    for _ in 0..config.payload_symbols_per_realization {
        let sent = ClassIndex(rng.random_range(0..classes));
        let w = class_decode(sent, system.k, system.m);
        let r = transmit(&channel, &constellation, &w, &mut rng);

        for (instance, tally) in instances.iter().zip(tallies.iter_mut()) {
            let started = config.measure_time.then(Instant::now);
            let (decided, evals) = match instance.kind {
                DetectorKind::Mcd => (
                    detect_mcd(&r, models.centroid.as_ref().expect("fitted above")),
                    full_scan_evals,
                ),
                DetectorKind::Mahalanobis => (
                    detect_mahalanobis(&r, models.gaussian.as_ref().expect("fitted above")),
                    full_scan_evals,
                ),
                DetectorKind::Emld => (
                    detect_emld(&r, &models.training, config.emld_k),
                    neighbor_scan_evals,
                ),
                DetectorKind::Mmd => {
                    (detect_mmd(&r, &models.training), neighbor_scan_evals)
                }
                DetectorKind::Bernoulli => (
                    detect_bernoulli(&r, models.bernoulli.as_ref().expect("fitted above")),
                    full_scan_evals,
                ),
                DetectorKind::Lsl => {
                    let (decided, stats) = detect_lsl_with_stats(
                        &r,
                        models.forest.as_ref().expect("built above"),
                        models.bernoulli.as_ref().expect("fitted above"),
                        instance.budget,
                    );
                    (decided, stats.total_distance_evals())
                }
            };
            if let Some(start) = started {
                tally.nanos += u64::try_from(start.elapsed().as_nanos()).unwrap_or(u64::MAX);
            }
            tally.errors += u64::from(((sent.0 ^ decided.0) as u64).count_ones());
            tally.bits += config.bits_per_class();
            tally.dist_evals += evals;
            tally.detections += 1;
        }
    }
    Ok(tallies)
}

/// Writes records as CSV with header
/// `detector,snr_db,errors,bits,ber,dist_evals,detect_us`.
///
/// Numbers are formatted with Rust's shortest-round-trip float notation
/// (always `.` as the decimal separator), so parsing the file back
/// recovers every field exactly. The file appears atomically: content is
/// staged in a temporary file in the destination directory and renamed
/// over `path`, so a failing run never leaves a partial CSV behind.
pub fn emit_csv(records: &[BerRecord], path: &Path) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut file = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(path, e))?;
    writeln!(file, "detector,snr_db,errors,bits,ber,dist_evals,detect_us")
        .map_err(|e| Error::io(path, e))?;
    for r in records {
        writeln!(
            file,
            "{},{},{},{},{},{},{}",
            r.detector, r.snr_db, r.errors, r.bits, r.ber, r.dist_evals, r.detect_us
        )
        .map_err(|e| Error::io(path, e))?;
    }
    file.flush().map_err(|e| Error::io(path, e))?;
    file.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// Parses a CSV produced by [`emit_csv`] back into records (used by
/// round-trip tests and downstream tooling).
pub fn parse_csv(text: &str) -> Result<Vec<BerRecord>> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    if header != "detector,snr_db,errors,bits,ber,dist_evals,detect_us" {
        return Err(Error::MalformedDump(format!("unexpected CSV header '{header}'")));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 7 {
                return Err(Error::MalformedDump(format!(
                    "row {}: expected 7 fields, got {}",
                    i + 2,
                    fields.len()
                )));
            }
            let bad =
                |what: &str| Error::MalformedDump(format!("row {}: bad {what}", i + 2));
            Ok(BerRecord {
                detector: fields[0].to_string(),
                snr_db: fields[1].parse().map_err(|_| bad("snr_db"))?,
                errors: fields[2].parse().map_err(|_| bad("errors"))?,
                bits: fields[3].parse().map_err(|_| bad("bits"))?,
                ber: fields[4].parse().map_err(|_| bad("ber"))?,
                dist_evals: fields[5].parse().map_err(|_| bad("dist_evals"))?,
                detect_us: fields[6].parse().map_err(|_| bad("detect_us"))?,
            })
        })
        .collect()
}
