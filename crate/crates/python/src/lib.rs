//! Python bindings for mnl-lab. Item indices are 0-based here, as in the
//! Rust API; files written by the library use 1-based indices.

use std::path::PathBuf;

use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;

use mnl_lab::adversary::InstanceSpec;
use mnl_lab::environment::ChoiceOutcome;
use mnl_lab::harness::{run_experiment as run, write_artifacts, ExperimentConfig};
use mnl_lab::learner::{BaseLearner, EpochUcb as CoreEpochUcb};
use mnl_lab::model::{self, Assortment, ItemCatalog as CoreCatalog};
use mnl_lab::suites::Suite;
use mnl_lab::Error;

fn to_py(err: Error) -> PyErr {
    match err {
        Error::Io { .. } => PyOSError::new_err(err.to_string()),
        _ => PyValueError::new_err(err.to_string()),
    }
}

fn to_json(value: &impl serde::Serialize) -> String {
    serde_json::to_string(value).expect("serializable")
}

#[pyclass(name = "ItemCatalog", module = "mnl_lab", frozen)]
struct ItemCatalog {
    inner: CoreCatalog,
}

#[pymethods]
impl ItemCatalog {
    #[new]
    fn new(capacity: usize, payoffs: Vec<f64>) -> PyResult<Self> {
        let inner = CoreCatalog::new(capacity, payoffs).map_err(to_py)?;
        Ok(Self { inner })
    }

    /// Catalog of `n_items` items with payoff 1.
    #[staticmethod]
    fn uniform(n_items: usize, capacity: usize) -> PyResult<Self> {
        let inner = CoreCatalog::uniform(n_items, capacity).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn n_items(&self) -> usize {
        self.inner.n_items()
    }

    #[getter]
    fn capacity(&self) -> usize {
        self.inner.capacity()
    }

    #[getter]
    fn payoffs(&self) -> Vec<f64> {
        self.inner.payoffs().to_vec()
    }

    fn __repr__(&self) -> String {
        format!(
            "ItemCatalog(capacity={}, payoffs={:?})",
            self.inner.capacity(),
            self.inner.payoffs()
        )
    }
}

fn assortment(items: Vec<usize>, catalog: &CoreCatalog) -> PyResult<Assortment> {
    Assortment::new(items, catalog).map_err(to_py)
}

fn check_len(omega: &[f64], catalog: &CoreCatalog) -> PyResult<()> {
    if omega.len() != catalog.n_items() {
        return Err(PyValueError::new_err(format!(
            "expected {} weights, got {}",
            catalog.n_items(),
            omega.len()
        )));
    }
    Ok(())
}

/// Probability that `item` is chosen from `items`; `None` is no purchase.
#[pyfunction]
#[pyo3(signature = (omega, items, item=None))]
fn choice_prob(omega: Vec<f64>, items: Vec<usize>, item: Option<usize>) -> PyResult<f64> {
    let catalog = CoreCatalog::uniform(omega.len(), omega.len()).map_err(to_py)?;
    model::choice_prob(&omega, &assortment(items, &catalog)?, item).map_err(to_py)
}

#[pyfunction]
fn expected_payoff(omega: Vec<f64>, catalog: &ItemCatalog, items: Vec<usize>) -> PyResult<f64> {
    check_len(&omega, &catalog.inner)?;
    Ok(model::expected_payoff(
        &omega,
        &catalog.inner,
        &assortment(items, &catalog.inner)?,
    ))
}

/// `(items, value)` of the revenue-maximizing assortment.
#[pyfunction]
fn optimal_assortment(omega: Vec<f64>, catalog: &ItemCatalog) -> PyResult<(Vec<usize>, f64)> {
    let opt = mnl_lab::optimizer::optimal_assortment(&omega, &catalog.inner).map_err(to_py)?;
    Ok((opt.assortment.items().to_vec(), opt.value))
}

/// Sum of the `2K` largest absolute entries.
#[pyfunction]
fn l2k_norm(x: Vec<f64>, k_cap: usize) -> f64 {
    model::l2k_norm(&x, k_cap)
}

#[pyfunction]
#[pyo3(signature = (t, n_items, horizon, c_scale=1.0))]
fn rho(t: usize, n_items: usize, horizon: usize, c_scale: f64) -> PyResult<f64> {
    model::rho(t, n_items, horizon, c_scale).map_err(to_py)
}

#[pyclass(name = "EpochUcb", module = "mnl_lab")]
struct EpochUcb {
    inner: CoreEpochUcb,
}

#[pymethods]
impl EpochUcb {
    #[new]
    #[pyo3(signature = (catalog, horizon, c_scale=1.0))]
    fn new(catalog: &ItemCatalog, horizon: usize, c_scale: f64) -> PyResult<Self> {
        let inner = CoreEpochUcb::new(catalog.inner.clone(), horizon, c_scale).map_err(to_py)?;
        Ok(Self { inner })
    }

    /// Items to offer this round.
    fn act(&self) -> Vec<usize> {
        self.inner.act().items().to_vec()
    }

    /// Reports the chosen item (`None` for no purchase) of the last offer.
    #[pyo3(signature = (chosen=None))]
    fn observe(&mut self, chosen: Option<usize>) -> PyResult<()> {
        let reward = chosen.map_or(0.0, |j| {
            if j < self.inner.catalog().n_items() {
                self.inner.catalog().payoff(j)
            } else {
                0.0
            }
        });
        self.inner
            .observe(&ChoiceOutcome { chosen, reward })
            .map_err(to_py)
    }

    fn reward_upper_bound(&self) -> f64 {
        self.inner.reward_upper_bound()
    }

    #[getter]
    fn ucb(&self) -> Vec<f64> {
        self.inner.ucb().to_vec()
    }

    #[getter]
    fn epochs_completed(&self) -> Vec<u64> {
        self.inner.epochs_completed().to_vec()
    }
}

/// Runs an experiment from its JSON config and returns the summary as JSON.
/// Artifacts are written when the config names an output directory.
#[pyfunction]
fn run_experiment(config_json: &str) -> PyResult<String> {
    let config: ExperimentConfig =
        serde_json::from_str(config_json).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let (summary, records) = run(&config).map_err(to_py)?;
    if let Some(dir) = &config.output {
        write_artifacts(dir, &config, &summary, &records).map_err(to_py)?;
    }
    Ok(to_json(&summary))
}

/// Generates an adversarial instance; returns its metadata as JSON and
/// writes `schedule.json` and `metadata.json` when `out_dir` is given.
#[pyfunction]
#[pyo3(signature = (spec_json, seed=0, out_dir=None))]
fn gen_instance(spec_json: &str, seed: u64, out_dir: Option<PathBuf>) -> PyResult<String> {
    let spec: InstanceSpec =
        serde_json::from_str(spec_json).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let instance = spec.generate(seed).map_err(to_py)?;
    if let Some(dir) = out_dir {
        instance.write(dir).map_err(to_py)?;
    }
    Ok(to_json(&instance.metadata))
}

/// Runs a verification suite; returns `(passed, report_json)`.
#[pyfunction]
#[pyo3(signature = (suite, seed=0))]
fn verify(py: Python<'_>, suite: &str, seed: u64) -> PyResult<(bool, String)> {
    let suite: Suite = suite.parse().map_err(to_py)?;
    let report = py.detach(|| suite.run(seed)).map_err(to_py)?;
    Ok((report.pass, to_json(&report)))
}

#[pymodule]
#[pyo3(name = "mnl_lab")]
fn mnl_lab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<ItemCatalog>()?;
    m.add_class::<EpochUcb>()?;
    m.add_function(wrap_pyfunction!(choice_prob, m)?)?;
    m.add_function(wrap_pyfunction!(expected_payoff, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_assortment, m)?)?;
    m.add_function(wrap_pyfunction!(l2k_norm, m)?)?;
    m.add_function(wrap_pyfunction!(rho, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(gen_instance, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
