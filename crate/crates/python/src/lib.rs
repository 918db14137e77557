//! Python bindings for the GHZ self-testing library.

use std::collections::HashMap;

use ghz_selftest::io::{strategy_from_str, strategy_to_canonical, to_canonical, to_canonical_string};
use ghz_selftest::optimize::{self, Optimum, SeesawConfig, SeesawMetric};
use ghz_selftest::robustness;
use ghz_selftest::scenario::success_metric;
use ghz_selftest::selftest::{self, Tolerances};
use ghz_selftest::states;
use ghz_selftest::{BitString, Error};
use pyo3::exceptions::{PyIOError, PyNotImplementedError, PyValueError};
use pyo3::prelude::*;

fn to_py(err: Error) -> PyErr {
    match err {
        Error::Io(e) => PyIOError::new_err(e.to_string()),
        Error::Unsupported(msg) => PyNotImplementedError::new_err(msg),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn json_loads<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (text,))
}

/// A GHZ-game strategy: two messages per sender and a receiver measurement.
#[pyclass(name = "Strategy", module = "ghz_selftest_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyStrategy {
    inner: states::Strategy,
}

#[pymethods]
impl PyStrategy {
    /// Optimal strategy with computational-basis messages for sender 1.
    #[staticmethod]
    fn ideal(n: usize) -> PyResult<Self> {
        Ok(Self { inner: states::ideal_strategy(n).map_err(to_py)? })
    }

    /// Optimal strategy whose measurement is the GHZ basis.
    #[staticmethod]
    fn aligned_ideal(n: usize) -> PyResult<Self> {
        Ok(Self { inner: states::aligned_ideal_strategy(n).map_err(to_py)? })
    }

    /// Random pure messages and a random projective measurement.
    #[staticmethod]
    #[pyo3(signature = (n, seed = 0))]
    fn random(n: usize, seed: u64) -> PyResult<Self> {
        Ok(Self { inner: states::random_strategy(n, seed).map_err(to_py)? })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self { inner: strategy_from_str(text).map_err(to_py)? })
    }

    /// Canonical JSON with sorted keys and round-trip float formatting.
    fn to_json(&self) -> String {
        strategy_to_canonical(&self.inner)
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n
    }

    fn success_metric(&self) -> PyResult<f64> {
        success_metric(&self.inner).map_err(to_py)
    }

    fn antipodality_gap(&self) -> f64 {
        selftest::antipodality_gap(&self.inner)
    }

    /// Runs every self-test check and returns the report as a dict.
    #[pyo3(signature = (tolerances = None))]
    fn certify<'py>(
        &self,
        py: Python<'py>,
        tolerances: Option<HashMap<String, f64>>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let mut tol = Tolerances::default();
        for (name, value) in tolerances.unwrap_or_default() {
            tol.set(&name, value).map_err(to_py)?;
        }
        let report = selftest::certify(&self.inner, &tol).map_err(to_py)?;
        json_loads(py, &to_canonical(&report).map_err(to_py)?)
    }

    fn __repr__(&self) -> String {
        format!("Strategy(n={})", self.inner.n)
    }
}

/// Eigenvalues of the ideal witness for outcome `s`, largest first.
#[pyfunction]
fn spectrum_closed_form(n: usize, s: &str) -> PyResult<Vec<f64>> {
    let bits: BitString = s.parse().map_err(to_py)?;
    if bits.len() != n {
        return Err(PyValueError::new_err(format!("bit string {s} has length {}, expected {n}", bits.len())));
    }
    let mut values = selftest::spectrum_closed_form(n, &bits).map_err(to_py)?;
    values.sort_by(|a, b| b.total_cmp(a));
    Ok(values)
}

/// Lower bound on the average GHZ fidelity at distance `eps` below the optimum.
#[pyfunction]
fn fidelity_lower_bound(n: usize, eps: f64) -> PyResult<f64> {
    robustness::fidelity_lower_bound(n, eps).map_err(to_py)
}

/// The local channel function g(x).
#[pyfunction]
fn channel_g(x: f64) -> PyResult<f64> {
    robustness::channel_g(x).map_err(to_py)
}

/// Multi-restart see-saw optimization. Returns the report as a dict; the
/// optimal strategy is included as a `Strategy` under `"strategy_object"`
/// for the GHZ and partial Bell metrics.
#[pyfunction]
#[pyo3(signature = (n = 2, metric = "ghz", restarts = optimize::DEFAULT_RESTARTS, seed = 0, max_iters = optimize::DEFAULT_MAX_ITERS, conv_tol = optimize::DEFAULT_CONV_TOL))]
fn seesaw<'py>(
    py: Python<'py>,
    n: usize,
    metric: &str,
    restarts: usize,
    seed: u64,
    max_iters: usize,
    conv_tol: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let metric: SeesawMetric = metric.parse().map_err(to_py)?;
    let mut config = SeesawConfig::new(n, metric);
    config.restarts = restarts;
    config.seed = seed;
    config.max_iters = max_iters;
    config.conv_tol = conv_tol;
    let result = py.detach(|| optimize::seesaw(&config)).map_err(to_py)?;
    let report = json_loads(py, &to_canonical_string(&result.to_value()))?;
    if let Optimum::Game(strategy) = result.best_strategy {
        report.set_item("strategy_object", PyStrategy { inner: strategy })?;
    }
    Ok(report)
}

#[pymodule]
fn ghz_selftest_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyStrategy>()?;
    m.add_function(wrap_pyfunction!(spectrum_closed_form, m)?)?;
    m.add_function(wrap_pyfunction!(fidelity_lower_bound, m)?)?;
    m.add_function(wrap_pyfunction!(channel_g, m)?)?;
    m.add_function(wrap_pyfunction!(seesaw, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
