//! Python bindings: parameters, drivers, divisors and the Monte Carlo checks.
//!
//! Structured results (reports, catalog entries) are returned as plain
//! Python dictionaries built from their JSON form.

use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde::Serialize;

use sle::loewner::{self, DriverKind};
use sle::mc::{self, ObservableArgs, Sle0Component};
use sle::observables::{self, SlitRadius};
use sle::vertex::{self, Chart};

create_exception!(sleobs, SleobsError, PyValueError);

fn err(e: sle::Error) -> PyErr {
    SleobsError::new_err(e.to_string())
}

fn to_py<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<PyObject> {
    let text = serde_json::to_string(value).map_err(|e| SleobsError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

/// Parameters derived from κ.
#[pyclass(frozen, name = "Params")]
struct PyParams(sle::SleCftParams);

#[pymethods]
impl PyParams {
    #[new]
    fn new(kappa: f64) -> PyResult<Self> {
        sle::SleCftParams::from_kappa(kappa).map(PyParams).map_err(err)
    }

    #[getter]
    fn kappa(&self) -> f64 {
        self.0.kappa
    }
    #[getter]
    fn a(&self) -> f64 {
        self.0.a
    }
    #[getter]
    fn b(&self) -> f64 {
        self.0.b
    }
    #[getter]
    fn c(&self) -> f64 {
        self.0.c
    }
    #[getter]
    fn h12(&self) -> f64 {
        self.0.h12
    }
    #[getter]
    fn h0half(&self) -> f64 {
        self.0.h0half
    }
    #[getter]
    fn lam(&self) -> f64 {
        self.0.lambda()
    }
    #[getter]
    fn mu(&self) -> f64 {
        self.0.mu()
    }

    /// Conformal dimensions of a vertex field with the given charges.
    #[pyo3(signature = (sigma, sigma_star, tau=0.0, tau_star=0.0))]
    fn dimensions(&self, py: Python<'_>, sigma: f64, sigma_star: f64, tau: f64, tau_star: f64) -> PyResult<PyObject> {
        to_py(py, &self.0.vertex_dimensions(sigma, sigma_star, tau, tau_star))
    }

    fn __repr__(&self) -> String {
        format!("Params(kappa={})", self.0.kappa)
    }
}

/// Sampled driving function θ_k = θ(k·dt).
#[pyclass(frozen, name = "Driver")]
struct PyDriver(loewner::Driver);

#[pymethods]
impl PyDriver {
    #[staticmethod]
    #[pyo3(signature = (kappa, dt, n_steps, seed=0, path=0))]
    fn brownian(kappa: f64, dt: f64, n_steps: usize, seed: u64, path: u64) -> PyResult<Self> {
        loewner::Driver::brownian(kappa, dt, n_steps, seed, path).map(PyDriver).map_err(err)
    }

    #[staticmethod]
    fn constant(value: f64, dt: f64, n_steps: usize) -> PyResult<Self> {
        loewner::Driver::constant(value, dt, n_steps).map(PyDriver).map_err(err)
    }

    #[staticmethod]
    fn from_samples(dt: f64, theta: Vec<f64>) -> PyResult<Self> {
        loewner::Driver::from_samples(dt, theta).map(PyDriver).map_err(err)
    }

    #[staticmethod]
    fn from_csv(text: &str) -> PyResult<Self> {
        loewner::Driver::read_csv(text.as_bytes()).map(PyDriver).map_err(err)
    }

    fn to_csv(&self) -> PyResult<String> {
        let mut buf = Vec::new();
        self.0.write_csv(&mut buf).map_err(err)?;
        String::from_utf8(buf).map_err(|e| SleobsError::new_err(e.to_string()))
    }

    #[getter]
    fn dt(&self) -> f64 {
        self.0.dt
    }
    #[getter]
    fn theta(&self) -> Vec<f64> {
        self.0.theta.clone()
    }
    #[getter]
    fn n_steps(&self) -> usize {
        self.0.n_steps()
    }
    #[getter]
    fn t_max(&self) -> f64 {
        self.0.t_max()
    }
    #[getter]
    fn is_brownian(&self) -> bool {
        matches!(self.0.kind, DriverKind::Brownian { .. })
    }

    /// Trace points γ at `n_samples` evenly spaced grid times.
    fn trace(&self, n_samples: usize) -> Vec<Complex64> {
        loewner::trace(&self.0, n_samples)
    }

    fn __repr__(&self) -> String {
        format!("Driver(dt={}, n_steps={})", self.0.dt, self.0.n_steps())
    }
}

/// Charges at interior nodes plus the root charge at the tip.
#[pyclass(frozen, name = "Divisor")]
struct PyDivisor(vertex::Divisor);

#[pymethods]
impl PyDivisor {
    /// Parses `node re,im sigma sigma_star` and `root tau tau_star` entries.
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        vertex::Divisor::parse(text).map(PyDivisor).map_err(err)
    }

    #[getter]
    fn total_charge(&self) -> f64 {
        self.0.total_charge()
    }
    #[getter]
    fn is_neutral(&self) -> bool {
        self.0.is_neutral()
    }
    #[getter]
    fn nodes(&self) -> Vec<Complex64> {
        self.0.node_positions()
    }

    /// Correlator at t = 0 in the identity chart.
    #[pyo3(signature = (params, hatted=true))]
    fn evaluate(&self, params: &PyParams, hatted: bool) -> PyResult<Complex64> {
        let chart = Chart::identity(&self.0.node_positions());
        vertex::eval_formal(&self.0, &params.0, &chart, hatted).map(|v| v.value()).map_err(err)
    }

    /// Hatted correlator along a driver: `(times, values, swallow_time)`.
    #[pyo3(signature = (params, driver, every=1))]
    fn along_path(
        &self,
        params: &PyParams,
        driver: &PyDriver,
        every: usize,
    ) -> PyResult<(Vec<f64>, Vec<Complex64>, Option<f64>)> {
        let s = vertex::eval_along_path(&self.0, &params.0, &driver.0, every).map_err(err)?;
        Ok((s.times, s.values.iter().map(|v| v.value()).collect(), s.swallow_time))
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Divisor({:?})", self.0.to_string())
    }
}

/// Ensemble settings shared by the Monte Carlo checks.
#[pyclass(name = "McConfig")]
#[derive(Clone)]
struct PyMcConfig(mc::McConfig);

#[pymethods]
impl PyMcConfig {
    #[new]
    #[pyo3(signature = (kappa, n_paths, dt, sample_times, seed=0, t_max=None, exit_radius=mc::EXIT_RADIUS, threads=None))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        kappa: f64,
        n_paths: usize,
        dt: f64,
        sample_times: Vec<f64>,
        seed: u64,
        t_max: Option<f64>,
        exit_radius: f64,
        threads: Option<usize>,
    ) -> PyResult<Self> {
        let mut cfg = mc::McConfig::new(kappa, n_paths, dt, sample_times, seed);
        if let Some(t) = t_max {
            cfg.t_max = t;
        }
        cfg.exit_radius = exit_radius;
        cfg.threads = threads;
        cfg.validate().map_err(err)?;
        Ok(PyMcConfig(cfg))
    }

    fn to_dict(&self, py: Python<'_>) -> PyResult<PyObject> {
        to_py(py, &self.0)
    }
}

/// Martingale check of a named observable; `divisor` is used by `vertex`.
#[pyfunction]
#[pyo3(signature = (config, observable, z=None, alpha=None, tau=None, h=None, theta0=None, divisor=None, schwarzian=false))]
#[allow(clippy::too_many_arguments)]
fn martingale_test(
    py: Python<'_>,
    config: &PyMcConfig,
    observable: &str,
    z: Option<Complex64>,
    alpha: Option<f64>,
    tau: Option<f64>,
    h: Option<f64>,
    theta0: Option<f64>,
    divisor: Option<&PyDivisor>,
    schwarzian: bool,
) -> PyResult<PyObject> {
    let p = config.0.params().map_err(err)?;
    let args = ObservableArgs {
        z,
        theta0,
        alpha,
        tau,
        h,
        divisor: divisor.map(|d| d.0.clone()),
        component: Some(if schwarzian { Sle0Component::Schwarzian } else { Sle0Component::Arg }),
    };
    let obs = mc::McObservable::from_name(observable, &args, &p).map_err(err)?;
    let report = py.allow_threads(|| mc::martingale_test(&config.0, &obs)).map_err(err)?;
    to_py(py, &report)
}

/// Drift check of a non-neutral divisor.
#[pyfunction]
fn neutrality_negative_test(py: Python<'_>, config: &PyMcConfig, divisor: &PyDivisor) -> PyResult<PyObject> {
    let r = py.allow_threads(|| mc::neutrality_negative_test(&config.0, &divisor.0)).map_err(err)?;
    to_py(py, &r)
}

/// Fitted decay rate of the boundary-derivative survival mean.
#[pyfunction]
#[pyo3(signature = (config, h=0.0, theta0=std::f64::consts::PI))]
fn exponent_fit(py: Python<'_>, config: &PyMcConfig, h: f64, theta0: f64) -> PyResult<PyObject> {
    let fit = py.allow_threads(|| mc::exponent_fit(h, theta0, &config.0)).map_err(err)?;
    to_py(py, &fit)
}

/// Probability that the κ = 8/3 trace avoids the segment from `r·e^{iθ0}` to `e^{iθ0}`.
#[pyfunction]
#[pyo3(signature = (config, r=0.5, theta0=std::f64::consts::PI))]
fn restriction_experiment(py: Python<'_>, config: &PyMcConfig, r: f64, theta0: f64) -> PyResult<PyObject> {
    let rep = py.allow_threads(|| mc::restriction_experiment(r, theta0, &config.0)).map_err(err)?;
    to_py(py, &rep)
}

/// Pathwise Hadamard rate and covariation check for two interior points.
#[pyfunction]
fn hadamard_check(py: Python<'_>, config: &PyMcConfig, z1: Complex64, z2: Complex64) -> PyResult<PyObject> {
    let rep = py.allow_threads(|| mc::hadamard_check(z1, z2, &config.0)).map_err(err)?;
    to_py(py, &rep)
}

/// Small-slit limit at angle `theta`; `literal` selects the radius 1 − 2√t.
#[pyfunction]
#[pyo3(signature = (theta, t, literal=false))]
fn fw_limit_check(py: Python<'_>, theta: f64, t: f64, literal: bool) -> PyResult<PyObject> {
    let radius = if literal { SlitRadius::Literal } else { SlitRadius::Capacity };
    let r = observables::fw_limit_check_with(theta, t, radius).map_err(err)?;
    let rel = r.relative_error();
    let dict = to_py(py, &r)?;
    dict.bind(py).set_item("relative_error", rel)?;
    Ok(dict)
}

/// Residual of the second-order equation for the T̂ one-point function.
#[pyfunction]
fn bpz_residual_virasoro(z: Complex64, params: &PyParams) -> PyResult<Complex64> {
    observables::bpz_residual_virasoro(z, &params.0).map_err(err)
}

/// Observable catalog at κ.
#[pyfunction]
fn catalog(py: Python<'_>, params: &PyParams) -> PyResult<PyObject> {
    to_py(py, &observables::catalog(&params.0))
}

/// Green's function of the unit disk.
#[pyfunction]
fn green(w1: Complex64, w2: Complex64) -> PyResult<f64> {
    sle::conformal::green(w1, w2).map_err(err)
}

#[pymodule]
fn sleobs(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("SleobsError", m.py().get_type::<SleobsError>())?;
    m.add("EXIT_RADIUS", mc::EXIT_RADIUS)?;
    m.add_class::<PyParams>()?;
    m.add_class::<PyDriver>()?;
    m.add_class::<PyDivisor>()?;
    m.add_class::<PyMcConfig>()?;
    m.add_function(wrap_pyfunction!(martingale_test, m)?)?;
    m.add_function(wrap_pyfunction!(neutrality_negative_test, m)?)?;
    m.add_function(wrap_pyfunction!(exponent_fit, m)?)?;
    m.add_function(wrap_pyfunction!(restriction_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(hadamard_check, m)?)?;
    m.add_function(wrap_pyfunction!(fw_limit_check, m)?)?;
    m.add_function(wrap_pyfunction!(bpz_residual_virasoro, m)?)?;
    m.add_function(wrap_pyfunction!(catalog, m)?)?;
    m.add_function(wrap_pyfunction!(green, m)?)?;
    Ok(())
}
