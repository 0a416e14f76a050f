//! Python bindings for the anisoflow solver.
//!
//! Configurations are passed as JSON text (the same documents the CLI reads);
//! structured results come back as Python dicts.

use std::path::PathBuf;
use std::sync::Arc;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

use anisoflow::solver::SolverConfig;
use anisoflow::study::StudyConfig;
use anisoflow::{diagnostics, elliptic, field, snapshot, solver, study, Regime};

fn to_py_err(e: anisoflow::Error) -> PyErr {
    if e.is_numerical() {
        PyRuntimeError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn to_dict<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn parse<T: serde::de::DeserializeOwned>(config: &str) -> PyResult<T> {
    serde_json::from_str(config).map_err(|e| PyValueError::new_err(format!("bad config: {e}")))
}

#[pyclass(name = "Grid", module = "anisoflow_py", frozen)]
struct PyGrid {
    inner: Arc<anisoflow::Grid>,
}

#[pymethods]
impl PyGrid {
    #[new]
    #[pyo3(signature = (nx, ny, stretch=0.0))]
    fn new(nx: usize, ny: usize, stretch: f64) -> PyResult<Self> {
        Ok(Self { inner: anisoflow::build_grid(nx, ny, stretch).map_err(to_py_err)? })
    }

    #[getter]
    fn nx(&self) -> usize {
        self.inner.nx
    }

    #[getter]
    fn ny(&self) -> usize {
        self.inner.ny
    }

    #[getter]
    fn stretch(&self) -> f64 {
        self.inner.stretch
    }

    #[getter]
    fn x_nodes(&self) -> Vec<f64> {
        self.inner.x_nodes.clone()
    }

    #[getter]
    fn y_nodes(&self) -> Vec<f64> {
        self.inner.y_nodes.clone()
    }

    #[getter]
    fn y_weights(&self) -> Vec<f64> {
        self.inner.y_weights.clone()
    }

    fn __repr__(&self) -> String {
        format!("Grid(nx={}, ny={}, stretch={})", self.inner.nx, self.inner.ny, self.inner.stretch)
    }
}

/// Solver state. Field accessors return flat y-major lists of length `nx * ny`.
#[pyclass(name = "FlowState", module = "anisoflow_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyFlowState {
    inner: field::FlowState,
}

#[pymethods]
impl PyFlowState {
    #[getter]
    fn t(&self) -> f64 {
        self.inner.t
    }

    #[getter]
    fn nu1(&self) -> f64 {
        self.inner.nu1
    }

    #[getter]
    fn nu2(&self) -> f64 {
        self.inner.nu2
    }

    #[getter]
    fn regime(&self) -> &'static str {
        match self.inner.regime {
            Regime::Viscous => "viscous",
            Regime::Limit => "limit",
        }
    }

    #[getter]
    fn grid(&self) -> PyGrid {
        PyGrid { inner: self.inner.grid().clone() }
    }

    #[getter]
    fn mean_u(&self) -> Vec<f64> {
        self.inner.mean_u.clone()
    }

    fn psi(&self) -> Vec<f64> {
        snapshot::physical_samples(&self.inner.psi)
    }

    fn omega(&self) -> Vec<f64> {
        snapshot::physical_samples(&self.inner.omega)
    }

    /// `(u, v)` including the mean flow.
    fn velocity(&self) -> (Vec<f64>, Vec<f64>) {
        let (u, v) = field::velocity_from_state(&self.inner);
        (snapshot::physical_samples(&u), snapshot::physical_samples(&v))
    }

    fn divergence(&self) -> Vec<f64> {
        field::divergence(&self.inner)
    }

    /// One step with a fresh integrator (first-order extrapolation of the advection).
    fn step(&self, dt: f64) -> PyResult<PyFlowState> {
        Ok(PyFlowState { inner: solver::step(&self.inner, dt).map_err(to_py_err)? })
    }

    fn record<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_dict(py, &diagnostics::record(&self.inner).map_err(to_py_err)?)
    }

    /// `(p, q)`: flow pressure and boundary-layer pressure, physical.
    fn pressures(&self) -> PyResult<(Vec<f64>, Vec<f64>)> {
        let pq = elliptic::recover_pressures(&self.inner).map_err(to_py_err)?;
        Ok((snapshot::physical_samples(&pq.p), snapshot::physical_samples(&pq.q)))
    }

    fn wall_traces<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_dict(py, &diagnostics::wall_traces(&self.inner))
    }

    fn audit_grad_q(&self) -> PyResult<f64> {
        diagnostics::audit_grad_q(&self.inner).map_err(to_py_err)
    }

    /// The full snapshot audit written by `anisoflow audit`.
    fn audit<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_dict(py, &anisoflow::cli::audit_snapshot(&self.inner).map_err(to_py_err)?)
    }

    fn write(&self, path: PathBuf) -> PyResult<()> {
        snapshot::write_snapshot(&path, &self.inner).map_err(to_py_err)
    }

    fn __repr__(&self) -> String {
        let g = self.inner.grid();
        format!("FlowState(t={}, regime={}, nx={}, ny={})", self.inner.t, self.regime(), g.nx, g.ny)
    }
}

/// Multistep integrator; feed it the states it returns.
#[pyclass(name = "Integrator", module = "anisoflow_py")]
struct PyIntegrator {
    inner: solver::Integrator,
    cfl: f64,
}

#[pymethods]
impl PyIntegrator {
    #[new]
    fn new(config: &str) -> PyResult<Self> {
        let cfg: SolverConfig = parse(config)?;
        cfg.validate().map_err(to_py_err)?;
        let grid = anisoflow::build_grid(cfg.nx, cfg.ny, cfg.stretch).map_err(to_py_err)?;
        Ok(Self { inner: solver::Integrator::from_config(&grid, &cfg), cfl: cfg.cfl })
    }

    /// Advances by `dt`, or by the CFL step when `dt` is omitted.
    #[pyo3(signature = (state, dt=None))]
    fn step(&mut self, state: &PyFlowState, dt: Option<f64>) -> PyResult<PyFlowState> {
        let dt = dt.unwrap_or_else(|| solver::cfl_dt(&state.inner, self.cfl, f64::INFINITY));
        Ok(PyFlowState { inner: self.inner.step(&state.inner, dt).map_err(to_py_err)? })
    }

    fn reset(&mut self) {
        self.inner.reset();
    }
}

#[pyfunction]
fn init_state(config: &str) -> PyResult<PyFlowState> {
    let cfg: SolverConfig = parse(config)?;
    Ok(PyFlowState { inner: solver::init_state(&cfg).map_err(to_py_err)? })
}

#[pyfunction]
fn read_snapshot(path: PathBuf) -> PyResult<PyFlowState> {
    Ok(PyFlowState { inner: snapshot::read_snapshot(&path).map_err(to_py_err)? })
}

/// Returns `(snapshots, series)` with one dict per diagnostics record.
#[pyfunction]
fn run_simulation<'py>(py: Python<'py>, config: &str) -> PyResult<(Vec<PyFlowState>, Bound<'py, PyAny>)> {
    let cfg: SolverConfig = parse(config)?;
    let out = py.detach(|| study::run_simulation(&cfg)).map_err(to_py_err)?;
    let snaps = out.snapshots.into_iter().map(|inner| PyFlowState { inner }).collect();
    Ok((snaps, to_dict(py, &out.series)?))
}

#[pyfunction]
fn run_study<'py>(py: Python<'py>, config: &str) -> PyResult<Bound<'py, PyAny>> {
    let cfg: StudyConfig = parse(config)?;
    let res = py.detach(|| study::run_study(&cfg)).map_err(to_py_err)?;
    to_dict(py, &res)
}

/// `(alpha, residual)` of the log-log fit of `(nu2, err)` pairs.
#[pyfunction]
fn fit_rate(points: Vec<(f64, f64)>) -> PyResult<(f64, f64)> {
    let f = study::fit_rate(&points).map_err(to_py_err)?;
    Ok((f.alpha, f.residual))
}

/// Triple-product ratio for three physical fields sampled on `grid`.
#[pyfunction]
fn audit_triple_product(grid: &PyGrid, f: Vec<f64>, g: Vec<f64>, h: Vec<f64>, m: f64) -> PyResult<f64> {
    let field = |d: Vec<f64>| field::ScalarField::from_physical(&grid.inner, d).map_err(to_py_err);
    diagnostics::audit_triple_product(&field(f)?, &field(g)?, &field(h)?, m).map_err(to_py_err)
}

#[pyfunction]
#[pyo3(signature = (count, seed=0, nx=32, ny=33))]
fn triple_product_corpus<'py>(
    py: Python<'py>,
    count: usize,
    seed: u64,
    nx: usize,
    ny: usize,
) -> PyResult<Bound<'py, PyAny>> {
    to_dict(py, &anisoflow::cli::triple_product_corpus(count, seed, nx, ny).map_err(to_py_err)?)
}

#[pymodule]
fn anisoflow_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGrid>()?;
    m.add_class::<PyFlowState>()?;
    m.add_class::<PyIntegrator>()?;
    m.add_function(wrap_pyfunction!(init_state, m)?)?;
    m.add_function(wrap_pyfunction!(read_snapshot, m)?)?;
    m.add_function(wrap_pyfunction!(run_simulation, m)?)?;
    m.add_function(wrap_pyfunction!(run_study, m)?)?;
    m.add_function(wrap_pyfunction!(fit_rate, m)?)?;
    m.add_function(wrap_pyfunction!(audit_triple_product, m)?)?;
    m.add_function(wrap_pyfunction!(triple_product_corpus, m)?)?;
    Ok(())
}
