//! Python bindings for the fairanneal core: datasets, metrics, the
//! multi-objective annealer and the baseline optimizers.

use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use ::fairanneal::baselines as fa_baselines;
use ::fairanneal::data as fa_data;
use ::fairanneal::datasets as fa_datasets;
use ::fairanneal::metrics as fa_metrics;
use ::fairanneal::model as fa_model;
use ::fairanneal::optimizer as fa_optimizer;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

/// A validated binary-classification dataset with a binary sensitive
/// attribute (1 = majority group, target 1 = desirable outcome).
#[pyclass(name = "Dataset", module = "fairanneal", skip_from_py_object)]
#[derive(Clone)]
struct PyDataset {
    inner: fa_data::Dataset,
}

#[pymethods]
impl PyDataset {
    #[new]
    #[pyo3(signature = (features, target, sensitive, feature_names, name="dataset".to_string()))]
    fn new(
        features: Vec<Vec<f64>>,
        target: Vec<u8>,
        sensitive: Vec<u8>,
        feature_names: Vec<String>,
        name: String,
    ) -> PyResult<Self> {
        let n_features = feature_names.len();
        let flat: Vec<f64> = features.iter().flatten().copied().collect();
        if features.iter().any(|row| row.len() != n_features) {
            return Err(value_err(
                "all feature rows must match feature_names in length",
            ));
        }
        let inner = fa_data::Dataset::new(flat, n_features, target, sensitive, feature_names, name)
            .map_err(value_err)?;
        Ok(PyDataset { inner })
    }

    /// Generates the synthetic evaluation dataset.
    #[staticmethod]
    #[pyo3(signature = (n_samples=5000, minority_fraction=0.5, bias_strength=2.0, noise_sd=1.0, seed=13))]
    fn synthetic(
        n_samples: usize,
        minority_fraction: f64,
        bias_strength: f64,
        noise_sd: f64,
        seed: u64,
    ) -> PyResult<Self> {
        let cfg = fa_datasets::SyntheticConfig {
            n_samples,
            minority_fraction,
            bias_strength,
            noise_sd,
            seed,
        };
        let inner = fa_datasets::generate_synthetic(&cfg).map_err(value_err)?;
        Ok(PyDataset { inner })
    }

    /// Loads a CSV through a preset file or a built-in preset name
    /// ("adult", "recidivism", "synthetic").
    #[staticmethod]
    #[pyo3(signature = (path, preset_path=None, preset_name=None))]
    fn from_csv(
        path: PathBuf,
        preset_path: Option<PathBuf>,
        preset_name: Option<String>,
    ) -> PyResult<Self> {
        let text = match (&preset_path, &preset_name) {
            (Some(p), _) => std::fs::read_to_string(p).map_err(runtime_err)?,
            (None, Some(name)) => fa_datasets::builtin_preset(name)
                .ok_or_else(|| value_err(format!("unknown built-in preset '{name}'")))?
                .to_string(),
            (None, None) => return Err(value_err("pass preset_path or preset_name")),
        };
        let spec = fa_datasets::parse_preset(&text).map_err(value_err)?;
        let outcome = fa_datasets::load_csv(&path, &spec).map_err(value_err)?;
        Ok(PyDataset {
            inner: outcome.dataset,
        })
    }

    #[getter]
    fn n_samples(&self) -> usize {
        self.inner.n_samples()
    }

    #[getter]
    fn n_features(&self) -> usize {
        self.inner.n_features()
    }

    #[getter]
    fn name(&self) -> &str {
        self.inner.name()
    }

    #[getter]
    fn feature_names(&self) -> Vec<String> {
        self.inner.feature_names().to_vec()
    }

    #[getter]
    fn target(&self) -> Vec<u8> {
        self.inner.target().to_vec()
    }

    #[getter]
    fn sensitive(&self) -> Vec<u8> {
        self.inner.sensitive().to_vec()
    }

    fn features(&self) -> Vec<Vec<f64>> {
        self.inner.rows().map(|r| r.to_vec()).collect()
    }

    fn minority_share(&self) -> f64 {
        self.inner.minority_share()
    }

    fn positive_share(&self) -> f64 {
        self.inner.positive_share()
    }

    fn subset(&self, rows: Vec<usize>) -> PyResult<Self> {
        Ok(PyDataset {
            inner: self.inner.subset(&rows).map_err(value_err)?,
        })
    }

    fn __len__(&self) -> usize {
        self.inner.n_samples()
    }

    fn __repr__(&self) -> String {
        format!(
            "Dataset(name='{}', n_samples={}, n_features={})",
            self.inner.name(),
            self.inner.n_samples(),
            self.inner.n_features()
        )
    }
}

/// Annealing configuration shared by `run_psa` and `run_sa_ba`.
#[pyclass(name = "AnnealConfig", module = "fairanneal", skip_from_py_object)]
#[derive(Clone)]
struct PyAnnealConfig {
    inner: fa_data::AnnealConfig,
}

#[pymethods]
impl PyAnnealConfig {
    #[new]
    #[pyo3(signature = (t_ba=0.2, t_us=1.0, alpha=0.95, beta=0.5, lambda_ba=1.0, lambda_us=1.0, n_chains=10, iters_per_temp=100, t_min=1e-4, seed=42))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        t_ba: f64,
        t_us: f64,
        alpha: f64,
        beta: f64,
        lambda_ba: f64,
        lambda_us: f64,
        n_chains: u32,
        iters_per_temp: u32,
        t_min: f64,
        seed: u64,
    ) -> PyResult<Self> {
        let inner = fa_data::AnnealConfig {
            t_ba,
            t_us,
            alpha,
            beta,
            lambda_ba,
            lambda_us,
            n_chains,
            iters_per_temp,
            t_min,
            seed,
        };
        inner.validate().map_err(value_err)?;
        Ok(PyAnnealConfig { inner })
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

/// Gradient-descent baseline configuration.
#[pyclass(name = "SgdConfig", module = "fairanneal", skip_from_py_object)]
#[derive(Clone)]
struct PySgdConfig {
    inner: fa_baselines::SgdConfig,
}

#[pymethods]
impl PySgdConfig {
    #[new]
    #[pyo3(signature = (learning_rate=0.1, max_epochs=10_000, tol=1e-8, seed=42))]
    fn new(learning_rate: f64, max_epochs: u32, tol: f64, seed: u64) -> PyResult<Self> {
        let inner = fa_baselines::SgdConfig {
            learning_rate,
            max_epochs,
            tol,
            seed,
        };
        inner.validate().map_err(value_err)?;
        Ok(PySgdConfig { inner })
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

/// The two objectives of one candidate.
#[pyclass(name = "ObjectiveValues", module = "fairanneal", skip_from_py_object)]
#[derive(Clone)]
struct PyObjectiveValues {
    inner: fa_data::ObjectiveValues,
}

#[pymethods]
impl PyObjectiveValues {
    #[getter]
    fn ba(&self) -> f64 {
        self.inner.ba
    }

    #[getter]
    fn us_raw(&self) -> f64 {
        self.inner.us_raw
    }

    #[getter]
    fn us_dev(&self) -> f64 {
        self.inner.us_dev
    }

    fn __repr__(&self) -> String {
        format!(
            "ObjectiveValues(ba={:.6}, us_raw={:.6}, us_dev={:.6})",
            self.inner.ba, self.inner.us_raw, self.inner.us_dev
        )
    }
}

/// One evaluated solution: parameters plus cached train objectives.
#[pyclass(name = "Solution", module = "fairanneal", skip_from_py_object)]
#[derive(Clone)]
struct PySolution {
    inner: fa_data::Solution,
}

#[pymethods]
impl PySolution {
    #[getter]
    fn theta(&self) -> Vec<f64> {
        self.inner.params.theta().to_vec()
    }

    #[getter]
    fn objectives(&self) -> PyObjectiveValues {
        PyObjectiveValues {
            inner: self.inner.objectives,
        }
    }

    #[getter]
    fn chain_id(&self) -> u32 {
        self.inner.chain_id
    }

    #[getter]
    fn step(&self) -> u64 {
        self.inner.step
    }

    fn __repr__(&self) -> String {
        format!(
            "Solution(chain={}, step={}, ba={:.6}, us_dev={:.6})",
            self.inner.chain_id,
            self.inner.step,
            self.inner.objectives.ba,
            self.inner.objectives.us_dev
        )
    }
}

/// Non-dominated archive returned by `run_psa`.
#[pyclass(name = "ParetoArchive", module = "fairanneal")]
struct PyParetoArchive {
    inner: fa_optimizer::ParetoArchive,
}

#[pymethods]
impl PyParetoArchive {
    fn entries(&self) -> Vec<PySolution> {
        self.inner
            .entries()
            .iter()
            .map(|s| PySolution { inner: s.clone() })
            .collect()
    }

    fn best_underestimation(&self) -> Option<PySolution> {
        self.inner
            .best_underestimation()
            .map(|s| PySolution { inner: s.clone() })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("ParetoArchive(len={})", self.inner.len())
    }
}

/// Deterministic stratified 70:30 split; returns (train, test) indices.
#[pyfunction]
fn split_70_30(dataset: &PyDataset, seed: u64) -> PyResult<(Vec<usize>, Vec<usize>)> {
    let split = fa_data::split_70_30(&dataset.inner, seed).map_err(value_err)?;
    Ok((split.train, split.test))
}

/// Standardizes continuous features with train-row statistics. Returns
/// the transformed dataset and a per-feature (name, mean, sd, kind)
/// table.
/// (name, mean, sd, kind) row of the scaling table.
type ScalingRow = (String, f64, f64, String);

#[pyfunction]
fn standardize(
    dataset: &PyDataset,
    train_idx: Vec<usize>,
) -> PyResult<(PyDataset, Vec<ScalingRow>)> {
    let (scaled, table) =
        fa_datasets::standardize(&dataset.inner, &train_idx).map_err(value_err)?;
    let rows = table
        .into_iter()
        .map(|f| (f.name, f.mean, f.sd, format!("{:?}", f.kind)))
        .collect();
    Ok((PyDataset { inner: scaled }, rows))
}

/// Pareto Simulated Annealing over the train dataset.
#[pyfunction]
fn run_psa(py: Python<'_>, train: &PyDataset, cfg: &PyAnnealConfig) -> PyResult<PyParetoArchive> {
    let train = train.inner.clone();
    let cfg = cfg.inner.clone();
    let archive = py
        .detach(move || fa_optimizer::run_psa(&train, &cfg))
        .map_err(runtime_err)?;
    Ok(PyParetoArchive { inner: archive })
}

/// Single-objective simulated annealing on balanced accuracy.
#[pyfunction]
fn run_sa_ba(py: Python<'_>, train: &PyDataset, cfg: &PyAnnealConfig) -> PyResult<PySolution> {
    let train = train.inner.clone();
    let cfg = cfg.inner.clone();
    let sol = py
        .detach(move || fa_baselines::run_sa_ba(&train, &cfg))
        .map_err(runtime_err)?;
    Ok(PySolution { inner: sol })
}

/// Full-batch gradient descent on log-loss.
#[pyfunction]
fn run_gd_logloss(py: Python<'_>, train: &PyDataset, cfg: &PySgdConfig) -> PyResult<PySolution> {
    let train = train.inner.clone();
    let cfg = cfg.inner.clone();
    let sol = py
        .detach(move || fa_baselines::run_gd_logloss(&train, &cfg))
        .map_err(runtime_err)?;
    Ok(PySolution { inner: sol })
}

/// Logistic probabilities for every dataset row.
#[pyfunction]
fn predict_proba(theta: Vec<f64>, dataset: &PyDataset) -> PyResult<Vec<f64>> {
    let params = fa_data::ModelParams::new(theta).map_err(value_err)?;
    fa_model::predict_proba(&params, &dataset.inner).map_err(value_err)
}

/// Thresholded binary predictions for every dataset row.
#[pyfunction]
#[pyo3(signature = (theta, dataset, threshold=0.5))]
fn predict(theta: Vec<f64>, dataset: &PyDataset, threshold: f64) -> PyResult<Vec<u8>> {
    let params = fa_data::ModelParams::new(theta).map_err(value_err)?;
    fa_model::predict(&params, &dataset.inner, threshold).map_err(value_err)
}

/// Balanced accuracy + underestimation for a prediction vector.
#[pyfunction]
fn objectives(y_true: Vec<u8>, y_pred: Vec<u8>, s: Vec<u8>) -> PyResult<PyObjectiveValues> {
    let inner = fa_metrics::objectives(&y_true, &y_pred, &s).map_err(value_err)?;
    Ok(PyObjectiveValues { inner })
}

#[pyfunction]
fn disparate_impact(y_true: Vec<u8>, y_pred: Vec<u8>, s: Vec<u8>) -> PyResult<f64> {
    let gc = fa_metrics::confusion(&y_true, &y_pred, &s).map_err(value_err)?;
    fa_metrics::disparate_impact(&gc).map_err(value_err)
}

#[pyfunction]
fn underestimation_score(y_true: Vec<u8>, y_pred: Vec<u8>, s: Vec<u8>) -> PyResult<f64> {
    let gc = fa_metrics::confusion(&y_true, &y_pred, &s).map_err(value_err)?;
    fa_metrics::underestimation_score(&gc).map_err(value_err)
}

#[pyfunction]
fn balanced_accuracy(y_true: Vec<u8>, y_pred: Vec<u8>, s: Vec<u8>) -> PyResult<f64> {
    let gc = fa_metrics::confusion(&y_true, &y_pred, &s).map_err(value_err)?;
    fa_metrics::balanced_accuracy(&gc).map_err(value_err)
}

#[pyfunction]
fn log_loss(y_true: Vec<u8>, p: Vec<f64>) -> PyResult<f64> {
    fa_metrics::log_loss(&y_true, &p).map_err(value_err)
}

/// True when objectives `a` Pareto-dominate `b`.
#[pyfunction]
fn dominates(a: &PyObjectiveValues, b: &PyObjectiveValues) -> bool {
    fa_optimizer::dominates(&a.inner, &b.inner)
}

#[pymodule(name = "fairanneal")]
fn fairanneal_pymodule(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyDataset>()?;
    m.add_class::<PyAnnealConfig>()?;
    m.add_class::<PySgdConfig>()?;
    m.add_class::<PyObjectiveValues>()?;
    m.add_class::<PySolution>()?;
    m.add_class::<PyParetoArchive>()?;
    m.add_function(wrap_pyfunction!(split_70_30, m)?)?;
    m.add_function(wrap_pyfunction!(standardize, m)?)?;
    m.add_function(wrap_pyfunction!(run_psa, m)?)?;
    m.add_function(wrap_pyfunction!(run_sa_ba, m)?)?;
    m.add_function(wrap_pyfunction!(run_gd_logloss, m)?)?;
    m.add_function(wrap_pyfunction!(predict_proba, m)?)?;
    m.add_function(wrap_pyfunction!(predict, m)?)?;
    m.add_function(wrap_pyfunction!(objectives, m)?)?;
    m.add_function(wrap_pyfunction!(disparate_impact, m)?)?;
    m.add_function(wrap_pyfunction!(underestimation_score, m)?)?;
    m.add_function(wrap_pyfunction!(balanced_accuracy, m)?)?;
    m.add_function(wrap_pyfunction!(log_loss, m)?)?;
    m.add_function(wrap_pyfunction!(dominates, m)?)?;
    Ok(())
}
