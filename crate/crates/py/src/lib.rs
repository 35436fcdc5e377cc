//! Python bindings: instances, model census, variance and cuts, full runs.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use agrisc::audit::census_audit;
use agrisc::oracle::variance_raw;
use agrisc::risk::{perspective_cut, plain_cut, variance_gradient, variance_value, LossPoint};
use agrisc::solver::{backend_by_name, export, FileFormat};
use agrisc::{build_model, BuildOptions, Mode, RunOptions, SolverConfig};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn to_py(py: Python<'_>, value: &impl serde::Serialize) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(runtime_err)?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

/// A validated problem instance.
#[pyclass(name = "Instance", module = "agrisc", skip_from_py_object)]
#[derive(Clone)]
struct PyInstance {
    inner: agrisc::Instance,
}

#[pymethods]
impl PyInstance {
    /// The bundled two-plant case study.
    #[staticmethod]
    fn case_study() -> Self {
        PyInstance {
            inner: agrisc::Instance::case_study(),
        }
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        agrisc::Instance::from_toml_str(text)
            .map(|inner| PyInstance { inner })
            .map_err(value_err)
    }

    #[staticmethod]
    fn from_path(path: &str) -> PyResult<Self> {
        agrisc::Instance::from_path(path)
            .map(|inner| PyInstance { inner })
            .map_err(value_err)
    }

    fn to_toml(&self) -> String {
        self.inner.to_toml_string()
    }

    #[getter]
    fn days(&self) -> usize {
        self.inner.num_days()
    }

    #[getter]
    fn weeks(&self) -> usize {
        self.inner.num_weeks()
    }

    #[getter]
    fn scenarios(&self) -> usize {
        self.inner.num_scenarios()
    }

    #[getter]
    fn probabilities(&self) -> Vec<f64> {
        self.inner.probabilities()
    }

    #[getter]
    fn variance_cap(&self) -> f64 {
        self.inner.risk.variance_cap
    }

    #[setter]
    fn set_variance_cap(&mut self, cap: f64) -> PyResult<()> {
        let mut next = self.inner.clone();
        next.risk.variance_cap = cap;
        next.validate().map_err(value_err)?;
        self.inner = next;
        Ok(())
    }

    fn loss_bound(&self, week: usize) -> PyResult<f64> {
        if week >= self.inner.num_weeks() {
            return Err(value_err(format!("week {week} out of range")));
        }
        Ok(self.inner.loss_bound(week))
    }

    /// Variable and row counts of the full model, with the published-size comparison.
    fn census(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &census_audit(&self.inner))
    }

    /// Writes the full model as `lp` or `mps`.
    #[pyo3(signature = (path, format = "lp", include_variance = true))]
    fn export(&self, path: &str, format: &str, include_variance: bool) -> PyResult<()> {
        let format: FileFormat = format.parse().map_err(value_err)?;
        let ir = build_model(
            &self.inner,
            BuildOptions {
                include_variance,
                ..Default::default()
            },
        );
        export(&ir, format, path).map_err(runtime_err)
    }

    /// Solves in `mode` (miqcp, perspective, plain-cut) and verifies the incumbent.
    #[allow(clippy::too_many_arguments)]
    #[pyo3(signature = (mode = "perspective", backend = None, time_limit = 600.0, gap = 1e-4, max_cuts = 50, seed = 0))]
    fn solve(
        &self,
        py: Python<'_>,
        mode: &str,
        backend: Option<&str>,
        time_limit: f64,
        gap: f64,
        max_cuts: usize,
        seed: u64,
    ) -> PyResult<Py<PyAny>> {
        let mode: Mode = mode.parse().map_err(value_err)?;
        let name = backend.unwrap_or(if mode == Mode::Miqcp { "scip" } else { "highs" });
        let config = SolverConfig {
            time_limit,
            rel_gap: gap,
            seed: Some(seed),
            threads: None,
        };
        let mut be = backend_by_name(name, config).map_err(value_err)?;
        let opts = RunOptions {
            time_limit,
            max_cuts,
            ..RunOptions::default()
        };
        let inst = self.inner.clone();
        let run = py
            .detach(move || agrisc::run_mode(&inst, mode, be.as_mut(), &opts))
            .map_err(runtime_err)?;
        let values = run
            .solution
            .as_ref()
            .map(|s| s.values.iter().map(|(k, v)| (k.to_string(), *v)).collect::<std::collections::BTreeMap<_, _>>());
        let out = serde_json::json!({
            "run": run,
            "values": values,
        });
        to_py(py, &out)
    }

    fn __repr__(&self) -> String {
        format!(
            "Instance(days={}, weeks={}, scenarios={}, plants={}, warehouses={}, markets={})",
            self.inner.num_days(),
            self.inner.num_weeks(),
            self.inner.num_scenarios(),
            self.inner.plants.len(),
            self.inner.warehouses.len(),
            self.inner.markets.len()
        )
    }
}

fn point(loss: Vec<Vec<f64>>, delta: Option<Vec<f64>>) -> PyResult<(LossPoint, usize)> {
    let weeks = loss.len();
    let scenarios = loss.first().map_or(0, Vec::len);
    if loss.iter().any(|r| r.len() != scenarios) {
        return Err(value_err("every week needs one loss per scenario"));
    }
    let delta = delta.unwrap_or_else(|| vec![1.0; weeks]);
    let p = LossPoint::new(weeks, scenarios, loss.into_iter().flatten().collect(), delta).map_err(value_err)?;
    Ok((p, weeks))
}

/// Week-averaged loss variance; `loss[week][scenario]`.
#[pyfunction]
fn variance(loss: Vec<Vec<f64>>, probabilities: Vec<f64>) -> PyResult<f64> {
    let (p, weeks) = point(loss, None)?;
    variance_value(&p, &probabilities, weeks).map_err(value_err)
}

/// The same quantity by the raw second-moment formula.
#[pyfunction]
fn variance_direct(loss: Vec<Vec<f64>>, probabilities: Vec<f64>) -> f64 {
    variance_raw(&loss, &probabilities)
}

/// Gradient with respect to every loss, week-major.
#[pyfunction]
fn gradient(loss: Vec<Vec<f64>>, probabilities: Vec<f64>) -> PyResult<Vec<f64>> {
    let (p, weeks) = point(loss, None)?;
    variance_gradient(&p, &probabilities, weeks).map_err(value_err)
}

/// A cut at `loss`; returns its coefficients, constant and the value of
/// its left-hand side at the generating point.
#[pyfunction]
#[pyo3(signature = (loss, probabilities, cap, delta = None, plain = false))]
fn cut(
    py: Python<'_>,
    loss: Vec<Vec<f64>>,
    probabilities: Vec<f64>,
    cap: f64,
    delta: Option<Vec<f64>>,
    plain: bool,
) -> PyResult<Py<PyAny>> {
    let (p, weeks) = point(loss, delta)?;
    let c = if plain {
        plain_cut(&p, &probabilities, weeks, cap)
    } else {
        perspective_cut(&p, &probabilities, weeks, cap)
    }
    .map_err(value_err)?;
    let out = serde_json::json!({
        "loss_coefs": c.loss_coefs,
        "delta_coefs": c.delta_coefs,
        "constant": c.constant,
        "lhs_at_point": c.lhs_at(&p),
    });
    to_py(py, &out)
}

#[pymodule(name = "agrisc")]
fn agrisc_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyInstance>()?;
    m.add_function(wrap_pyfunction!(variance, m)?)?;
    m.add_function(wrap_pyfunction!(variance_direct, m)?)?;
    m.add_function(wrap_pyfunction!(gradient, m)?)?;
    m.add_function(wrap_pyfunction!(cut, m)?)?;
    Ok(())
}
