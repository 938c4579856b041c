//! Python bindings for the one-bit relay uplink detector library.
//!
//! The module mirrors the Rust pipeline: configure a system
//! ([`SystemConfig`]), freeze one channel realization ([`LinkInstance`]),
//! collect labelled training pilots ([`LabelledDataset`]), fit the
//! detectors ([`DetectorBank`]), then classify fresh observations.
//! `run_experiment` / `run_lmax_sweep` expose the full Monte-Carlo BER
//! driver from config text.
//!
//! Observations cross the boundary as plain `±1` integer lists.

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use onebit_sl::bench::{self, BerRecord, ConfigBuilder};
use onebit_sl::dataset::collect_training;
use onebit_sl::detectors::{
    detect_bernoulli, detect_emld, detect_mahalanobis, detect_mcd, detect_mmd,
    fit_bernoulli, fit_centroid, fit_gaussian, BernoulliParams, CentroidParams,
    GaussianParams,
};
use onebit_sl::forest::{build_forest, detect_lsl, ClusterForest};
use onebit_sl::netsim::{
    class_decode, class_encode, draw_channel, transmit, ChannelRealization, ClassIndex,
    MessageVector,
};
use onebit_sl::{BinaryObservation, Error};

fn py_err(e: Error) -> PyErr {
    match &e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn observation_from_pm1(entries: Vec<i8>) -> PyResult<BinaryObservation> {
    BinaryObservation::from_pm1(&entries).map_err(py_err)
}

/// System dimensions and operating point.
#[pyclass(name = "SystemConfig", module = "onebit_sl_py", frozen)]
struct PySystemConfig {
    inner: onebit_sl::SystemConfig,
}

#[pymethods]
impl PySystemConfig {
    #[new]
    #[pyo3(signature = (k, n_r, l, m, snr_db, hops = 2, p_t = 1.0))]
    fn new(
        k: usize,
        n_r: usize,
        l: usize,
        m: usize,
        snr_db: f64,
        hops: usize,
        p_t: f64,
    ) -> PyResult<Self> {
        let inner = onebit_sl::SystemConfig::new(k, n_r, l, hops, m, p_t, snr_db)
            .map_err(py_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k
    }

    #[getter]
    fn n_r(&self) -> usize {
        self.inner.n_r
    }

    #[getter]
    fn l(&self) -> usize {
        self.inner.l
    }

    #[getter]
    fn hops(&self) -> usize {
        self.inner.hops
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.m
    }

    #[getter]
    fn p_t(&self) -> f64 {
        self.inner.p_t
    }

    #[getter]
    fn snr_db(&self) -> f64 {
        self.inner.snr_db
    }

    /// Observation length `N = 2·N_r`.
    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    /// Joint class count `m^K`.
    #[getter]
    fn num_classes(&self) -> usize {
        self.inner.num_classes()
    }

    /// Per-component noise standard deviation at this SNR.
    #[getter]
    fn noise_std(&self) -> f64 {
        self.inner.noise_std()
    }

    fn __repr__(&self) -> String {
        let c = &self.inner;
        format!(
            "SystemConfig(k={}, n_r={}, l={}, m={}, snr_db={}, hops={}, p_t={})",
            c.k, c.n_r, c.l, c.m, c.snr_db, c.hops, c.p_t
        )
    }
}

/// Labelled one-bit observations: `T` pilots for each of the `m^K`
/// classes.
#[pyclass(name = "LabelledDataset", module = "onebit_sl_py")]
struct PyLabelledDataset {
    inner: onebit_sl::dataset::LabelledDataset,
}

#[pymethods]
impl PyLabelledDataset {
    #[getter]
    fn k(&self) -> usize {
        self.inner.k()
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.m()
    }

    #[getter]
    fn n_r(&self) -> usize {
        self.inner.n_r()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn num_classes(&self) -> usize {
        self.inner.num_classes()
    }

    #[getter]
    fn pilots_per_class(&self) -> usize {
        self.inner.pilots_per_class()
    }

    /// Total observation count (classes × pilots).
    fn __len__(&self) -> usize {
        self.inner.len()
    }

    /// The pilots of one class as `±1` lists.
    fn observations(&self, class_index: usize) -> PyResult<Vec<Vec<i8>>> {
        if class_index >= self.inner.num_classes() {
            return Err(PyValueError::new_err(format!(
                "class index {class_index} out of range for {} classes",
                self.inner.num_classes()
            )));
        }
        Ok(self
            .inner
            .class_observations(ClassIndex(class_index))
            .iter()
            .map(BinaryObservation::to_pm1)
            .collect())
    }

    /// Writes the packed binary dump format, recording `seed` in the
    /// header.
    #[pyo3(signature = (path, seed = 0))]
    fn dump(&self, path: &str, seed: u64) -> PyResult<()> {
        self.inner.dump_to_path(seed, path).map_err(py_err)
    }

    /// Loads a dump, returning the dataset and its recorded seed.
    #[staticmethod]
    fn load(path: &str) -> PyResult<(Self, u64)> {
        let (inner, seed) =
            onebit_sl::dataset::LabelledDataset::load_from_path(path).map_err(py_err)?;
        Ok((Self { inner }, seed))
    }

    fn __repr__(&self) -> String {
        format!(
            "LabelledDataset(num_classes={}, pilots_per_class={}, n={})",
            self.inner.num_classes(),
            self.inner.pilots_per_class(),
            self.inner.n()
        )
    }
}

/// One frozen channel realization with its own random stream: collect
/// training pilots and transmit payload messages through the same fades.
#[pyclass(name = "LinkInstance", module = "onebit_sl_py")]
struct PyLinkInstance {
    system: onebit_sl::SystemConfig,
    channel: ChannelRealization,
    rng: ChaCha8Rng,
}

#[pymethods]
impl PyLinkInstance {
    #[new]
    fn new(config: &PySystemConfig, seed: u64) -> Self {
        let system = config.inner.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let channel = draw_channel(&system, &mut rng);
        Self { system, channel, rng }
    }

    /// Collects `t` pilots per class over this realization.
    fn collect_training(&mut self, t: usize) -> PyResult<PyLabelledDataset> {
        if t == 0 {
            return Err(PyValueError::new_err("need at least one pilot per class"));
        }
        let inner = collect_training(&self.channel, &self.system, t, &mut self.rng);
        Ok(PyLabelledDataset { inner })
    }

    /// Sends the message of `class_index` once and returns the received
    /// `±1` observation.
    fn transmit(&mut self, class_index: usize) -> PyResult<Vec<i8>> {
        if class_index >= self.system.num_classes() {
            return Err(PyValueError::new_err(format!(
                "class index {class_index} out of range for {} classes",
                self.system.num_classes()
            )));
        }
        let w = class_decode(ClassIndex(class_index), self.system.k, self.system.m);
        let constellation = self.system.constellation();
        Ok(transmit(&self.channel, &constellation, &w, &mut self.rng).to_pm1())
    }

    #[getter]
    fn num_classes(&self) -> usize {
        self.system.num_classes()
    }

    #[getter]
    fn n(&self) -> usize {
        self.system.n()
    }
}

/// Every detector fitted on one training set.
#[pyclass(name = "DetectorBank", module = "onebit_sl_py")]
struct PyDetectorBank {
    training: onebit_sl::dataset::LabelledDataset,
    centroid: CentroidParams,
    gaussian: GaussianParams,
    bernoulli: BernoulliParams,
    forest: Option<ClusterForest>,
}

#[pymethods]
impl PyDetectorBank {
    #[new]
    #[pyo3(signature = (dataset, shrinkage_lambda = 0.1, epsilon_floor = 1e-3))]
    fn new(
        dataset: &PyLabelledDataset,
        shrinkage_lambda: f64,
        epsilon_floor: f64,
    ) -> PyResult<Self> {
        if !(0.0..=1.0).contains(&shrinkage_lambda) {
            return Err(PyValueError::new_err("shrinkage_lambda must lie in [0, 1]"));
        }
        if !(epsilon_floor > 0.0 && epsilon_floor < 0.5) {
            return Err(PyValueError::new_err("epsilon_floor must lie in (0, 0.5)"));
        }
        let training = dataset.inner.clone();
        let centroid = fit_centroid(&training);
        let gaussian = fit_gaussian(&training, shrinkage_lambda).map_err(py_err)?;
        let bernoulli = fit_bernoulli(&training, epsilon_floor);
        Ok(Self { training, centroid, gaussian, bernoulli, forest: None })
    }

    /// Builds the signature forest the reduced-search detector needs.
    #[pyo3(signature = (branching = 32, trees = 4, seed = 0))]
    fn build_forest(&mut self, branching: usize, trees: usize, seed: u64) -> PyResult<()> {
        if branching < 2 {
            return Err(PyValueError::new_err("branching factor must be at least 2"));
        }
        if trees == 0 {
            return Err(PyValueError::new_err("need at least one tree"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.forest =
            Some(build_forest(&self.bernoulli.signatures, branching, trees, &mut rng));
        Ok(())
    }

    /// Classifies one `±1` observation with the named detector
    /// (`mcd`, `mahalanobis`, `emld`, `mmd`, `bernoulli` or `lsl`).
    ///
    /// `k` is the neighbor count for `emld`; `budget` is the candidate
    /// budget for `lsl` (defaults to the full class count).
    #[pyo3(signature = (name, observation, k = 1, budget = None))]
    fn detect(
        &self,
        name: &str,
        observation: Vec<i8>,
        k: usize,
        budget: Option<usize>,
    ) -> PyResult<usize> {
        let r = observation_from_pm1(observation)?;
        if r.len() != self.training.n() {
            return Err(PyValueError::new_err(format!(
                "observation has {} entries, training set has {}",
                r.len(),
                self.training.n()
            )));
        }
        let decided = match name {
            "mcd" => detect_mcd(&r, &self.centroid),
            "mahalanobis" => detect_mahalanobis(&r, &self.gaussian),
            "emld" => {
                if !(1..=self.training.len()).contains(&k) {
                    return Err(PyValueError::new_err(format!(
                        "k must lie in 1..={}",
                        self.training.len()
                    )));
                }
                detect_emld(&r, &self.training, k)
            }
            "mmd" => detect_mmd(&r, &self.training),
            "bernoulli" => detect_bernoulli(&r, &self.bernoulli),
            "lsl" => {
                let forest = self.forest.as_ref().ok_or_else(|| {
                    PyValueError::new_err("call build_forest() before detecting with lsl")
                })?;
                let budget = budget.unwrap_or_else(|| self.training.num_classes());
                if !(1..=self.training.num_classes()).contains(&budget) {
                    return Err(PyValueError::new_err(format!(
                        "budget must lie in 1..={}",
                        self.training.num_classes()
                    )));
                }
                detect_lsl(&r, forest, &self.bernoulli, budget)
            }
            other => {
                return Err(PyValueError::new_err(format!(
                    "unknown detector '{other}' (expected mcd, mahalanobis, emld, mmd, bernoulli or lsl)"
                )))
            }
        };
        Ok(decided.0)
    }

    /// The fitted sign signature and per-coordinate flip probabilities of
    /// one class.
    fn bernoulli_parameters(&self, class_index: usize) -> PyResult<(Vec<i8>, Vec<f64>)> {
        if class_index >= self.training.num_classes() {
            return Err(PyValueError::new_err(format!(
                "class index {class_index} out of range for {} classes",
                self.training.num_classes()
            )));
        }
        Ok((
            self.bernoulli.signatures[class_index].to_pm1(),
            self.bernoulli.flip_probs[class_index].clone(),
        ))
    }
}

/// Decodes a joint class index into its `K` per-source symbol labels.
#[pyfunction]
fn message_labels(class_index: usize, k: usize, m: usize) -> PyResult<Vec<usize>> {
    if !m.is_power_of_two() || m < 2 {
        return Err(PyValueError::new_err("m must be a power of two, at least 2"));
    }
    let total = m
        .checked_pow(u32::try_from(k).map_err(|_| PyValueError::new_err("k too large"))?)
        .ok_or_else(|| PyValueError::new_err("m^K overflows"))?;
    if class_index >= total {
        return Err(PyValueError::new_err(format!(
            "class index {class_index} out of range for m^K = {total}"
        )));
    }
    Ok(class_decode(ClassIndex(class_index), k, m).0)
}

/// Inverse of [`message_labels`]: packs per-source symbol labels into the
/// joint class index.
#[pyfunction]
fn class_index(labels: Vec<usize>, m: usize) -> PyResult<usize> {
    if !m.is_power_of_two() || m < 2 {
        return Err(PyValueError::new_err("m must be a power of two, at least 2"));
    }
    if let Some(&bad) = labels.iter().find(|&&w| w >= m) {
        return Err(PyValueError::new_err(format!(
            "symbol label {bad} out of range for order {m}"
        )));
    }
    Ok(class_encode(&MessageVector(labels), m).0)
}

fn records_to_dicts(py: Python<'_>, records: Vec<BerRecord>) -> PyResult<Vec<Py<PyDict>>> {
    records
        .into_iter()
        .map(|r| {
            let row = PyDict::new(py);
            row.set_item("detector", r.detector)?;
            row.set_item("snr_db", r.snr_db)?;
            row.set_item("errors", r.errors)?;
            row.set_item("bits", r.bits)?;
            row.set_item("ber", r.ber)?;
            row.set_item("dist_evals", r.dist_evals)?;
            row.set_item("detect_us", r.detect_us)?;
            Ok(row.unbind())
        })
        .collect()
}

/// Runs the Monte-Carlo BER benchmark described by flat `key = value`
/// config text and returns one dict per (detector, SNR point).
#[pyfunction]
fn run_experiment(py: Python<'_>, config_text: &str) -> PyResult<Vec<Py<PyDict>>> {
    let config = ConfigBuilder::parse_str(config_text)
        .and_then(ConfigBuilder::build)
        .map_err(py_err)?;
    let records = py
        .detach(|| bench::run_experiment(&config))
        .map_err(py_err)?;
    records_to_dicts(py, records)
}

/// Runs the reduced-search budget sweep (`lmax_grid`) against the
/// full-search reference and returns one dict per (detector, SNR point).
#[pyfunction]
fn run_lmax_sweep(py: Python<'_>, config_text: &str) -> PyResult<Vec<Py<PyDict>>> {
    let config = ConfigBuilder::parse_str(config_text)
        .and_then(ConfigBuilder::build)
        .map_err(py_err)?;
    let records = py
        .detach(|| bench::run_lmax_sweep(&config))
        .map_err(py_err)?;
    records_to_dicts(py, records)
}

#[pymodule]
pub fn onebit_sl_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PySystemConfig>()?;
    m.add_class::<PyLabelledDataset>()?;
    m.add_class::<PyLinkInstance>()?;
    m.add_class::<PyDetectorBank>()?;
    m.add_function(wrap_pyfunction!(message_labels, m)?)?;
    m.add_function(wrap_pyfunction!(class_index, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(run_lmax_sweep, m)?)?;
    Ok(())
}
