//! Python bindings: parameters, single-mode solves, the collocation oracle,
//! the field solver, boundary-forced evolution and the scan drivers.

use nsk::evolution::{
    causality_ratio, evolve_boundary_forced, kinematic_residual, maximal_regularity_ratio, EvolutionConfig, ForcingTrace,
};
use nsk::field::{compute_norms, gaussian_samples, mode_samples, residual_field, resolvent_quotient, solve_field, FieldGrid};
use nsk::mode::{default_grid, residual_bc, residual_ode};
use nsk::oracle::{compare_with_formula, CollocationConfig};
use nsk::verifier::{check_high_frequency_asymptotics, scan_lopatinskii_lower_bound, verify_symbol_suite, AsymptoticsGrid, DetGrid, ShellGrid};
use nsk::{derive_constants, DerivedConstants, NskError, Sector, SectorPoint};
use num_complex::Complex64 as C64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: NskError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn json<T: serde::Serialize + ?Sized>(v: &T) -> PyResult<String> {
    serde_json::to_string(v).map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pyclass(name = "FluidParams", module = "nsk", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyParams {
    inner: nsk::FluidParams,
    consts: DerivedConstants,
}

impl PyParams {
    fn wrap(p: nsk::FluidParams) -> PyResult<Self> {
        let consts = derive_constants(&p).map_err(err)?;
        Ok(PyParams { inner: p, consts })
    }
}

#[pymethods]
impl PyParams {
    #[new]
    #[pyo3(signature = (mu, nu, kappa, sigma, gamma_star = 0.0, rho_star = 1.0, dim = 2))]
    fn new(mu: f64, nu: f64, kappa: f64, sigma: f64, gamma_star: f64, rho_star: f64, dim: usize) -> PyResult<Self> {
        Self::wrap(nsk::FluidParams::new(mu, nu, kappa, sigma, gamma_star, rho_star, dim).map_err(err)?)
    }

    #[staticmethod]
    #[pyo3(signature = (name, dim = 2))]
    fn preset(name: &str, dim: usize) -> PyResult<Self> {
        Self::wrap(nsk::FluidParams::preset(name, dim).map_err(err)?)
    }

    #[getter]
    fn mu(&self) -> f64 {
        self.inner.mu
    }
    #[getter]
    fn nu(&self) -> f64 {
        self.inner.nu
    }
    #[getter]
    fn kappa(&self) -> f64 {
        self.inner.kappa
    }
    #[getter]
    fn sigma(&self) -> f64 {
        self.inner.sigma
    }
    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim
    }
    #[getter]
    fn alpha(&self) -> f64 {
        self.consts.alpha
    }
    /// (s1, s2)
    #[getter]
    fn roots(&self) -> (C64, C64) {
        (self.consts.s1, self.consts.s2)
    }
    #[getter]
    fn eps_tilde_star(&self) -> f64 {
        self.consts.eps_tilde_star
    }

    fn to_json(&self) -> PyResult<String> {
        json(&self.inner)
    }

    fn __repr__(&self) -> String {
        let p = &self.inner;
        format!("FluidParams(mu={}, nu={}, kappa={}, sigma={}, dim={})", p.mu, p.nu, p.kappa, p.sigma, p.dim)
    }
}

#[pyclass(name = "ModeSolution", module = "nsk", frozen)]
pub struct PyMode {
    inner: nsk::mode::ModeSolution,
    params: nsk::FluidParams,
}

#[pymethods]
impl PyMode {
    #[getter]
    fn h0(&self) -> C64 {
        self.inner.h0
    }
    #[getter]
    fn eta0(&self) -> C64 {
        self.inner.eta0
    }
    #[getter]
    fn xi(&self) -> Vec<f64> {
        self.inner.point.xi.clone()
    }
    #[getter]
    fn lam(&self) -> C64 {
        self.inner.point.lambda
    }

    fn rho(&self, xs: Vec<f64>) -> Vec<C64> {
        xs.iter().map(|&x| self.inner.rho.eval(x)).collect()
    }

    /// `u[J][k]` at heights `xs`, tangential components first.
    fn u(&self, xs: Vec<f64>) -> Vec<Vec<C64>> {
        self.inner.u.iter().map(|p| xs.iter().map(|&x| p.eval(x)).collect()).collect()
    }

    /// (interior residual, boundary residual)
    fn residuals(&self) -> (f64, f64) {
        let g = default_grid(&self.inner, 64, 10.0);
        (residual_ode(&self.inner, &self.params, &g).max(), residual_bc(&self.inner, &self.params).max())
    }

    fn to_json(&self) -> PyResult<String> {
        json(&self.inner)
    }
}

#[pyfunction]
#[pyo3(signature = (params, xi, lam, eta0 = C64::new(1.0, 0.0)))]
fn solve_mode(params: &PyParams, xi: Vec<f64>, lam: C64, eta0: C64) -> PyResult<PyMode> {
    let sol = nsk::mode::solve_mode(&SectorPoint::new(xi, lam), eta0, &params.inner, &params.consts).map_err(err)?;
    Ok(PyMode { inner: sol, params: params.inner })
}

/// Collocation oracle against the closed form; returns the gap summary.
#[pyfunction]
#[pyo3(signature = (params, xi, lam, eta0 = C64::new(1.0, 0.0), num_nodes = None))]
fn oracle_compare<'py>(
    py: Python<'py>,
    params: &PyParams,
    xi: Vec<f64>,
    lam: C64,
    eta0: C64,
    num_nodes: Option<usize>,
) -> PyResult<Bound<'py, PyDict>> {
    let mut cfg = CollocationConfig::default();
    if let Some(n) = num_nodes {
        cfg.num_nodes = n;
    }
    let r = compare_with_formula(&SectorPoint::new(xi, lam), eta0, &params.inner, &params.consts, &cfg).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("max_gap", r.max_gap())?;
    d.set_item("rho_gap", r.rho_gap)?;
    d.set_item("u_gaps", r.u_gaps.clone())?;
    d.set_item("h0_gap", r.h0_gap)?;
    d.set_item("cond", r.oracle.cond)?;
    d.set_item("domain_length", r.oracle.domain_length)?;
    d.set_item("node_doubling_change", r.oracle.node_doubling_change)?;
    Ok(d)
}

#[pyclass(name = "FieldSolution", module = "nsk", frozen)]
pub struct PyField {
    inner: nsk::field::FieldSolution,
    params: nsk::FluidParams,
}

#[pymethods]
impl PyField {
    /// `rho[n][i]`: height n, flat tangential index i
    #[getter]
    fn rho(&self) -> Vec<Vec<C64>> {
        self.inner.rho.clone()
    }
    #[getter]
    fn u(&self) -> Vec<Vec<Vec<C64>>> {
        self.inner.u.clone()
    }
    #[getter]
    fn h(&self) -> Vec<C64> {
        self.inner.h.clone()
    }
    #[getter]
    fn warnings(&self) -> Vec<String> {
        self.inner.warnings.clone()
    }

    fn residual(&self) -> f64 {
        residual_field(&self.inner, &self.params).max()
    }

    /// (spectral norm sum, grid norm sum, relative gap)
    fn norms(&self) -> (f64, f64, f64) {
        let r = compute_norms(&self.inner);
        (r.spectral.sum(), r.grid.sum(), r.spectral.gap(&r.grid))
    }

    fn resolvent_quotient(&self) -> PyResult<f64> {
        resolvent_quotient(&self.inner).map_err(err)
    }
}

/// Physical-space solve; `eta` holds point samples in row-major order, a
/// Gaussian of the given width is used when omitted.
#[pyfunction]
#[pyo3(signature = (params, lam, eta = None, period = 20.0, modes = 32, xn_nodes = vec![0.0, 0.5, 1.0, 2.0], width = 1.5))]
#[allow(clippy::too_many_arguments)]
fn field(
    params: &PyParams,
    lam: C64,
    eta: Option<Vec<C64>>,
    period: f64,
    modes: usize,
    xn_nodes: Vec<f64>,
    width: f64,
) -> PyResult<PyField> {
    let g = FieldGrid::new(params.inner.dim, period, modes, xn_nodes).map_err(err)?;
    let eta = eta.unwrap_or_else(|| gaussian_samples(&g, width));
    let sol = solve_field(&eta, lam, &params.inner, &params.consts, &g).map_err(err)?;
    Ok(PyField { inner: sol, params: params.inner })
}

fn ramp(t: f64) -> f64 {
    if t > 0.0 {
        t.powi(4) * (-t).exp() / 24.0
    } else {
        0.0
    }
}

/// Forcing e^{ik·x'}·s(rate t) with s(t) = t^4 e^{-t}/24.
#[pyfunction]
#[pyo3(signature = (params, forcing_mode, gamma = 1.5, tau_max = 400.0, num_tau = 4096, t_max = 8.0, period = 2.0 * std::f64::consts::PI, modes = 16, rate = 1.0))]
#[allow(clippy::too_many_arguments)]
fn evolve<'py>(
    py: Python<'py>,
    params: &PyParams,
    forcing_mode: Vec<i64>,
    gamma: f64,
    tau_max: f64,
    num_tau: usize,
    t_max: f64,
    period: f64,
    modes: usize,
    rate: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let grid = FieldGrid::new(params.inner.dim, period, modes, vec![0.0, 0.5, 1.0]).map_err(err)?;
    if forcing_mode.len() != params.inner.dim - 1 {
        return Err(PyValueError::new_err(format!("forcing_mode needs {} entries", params.inner.dim - 1)));
    }
    let cfg = EvolutionConfig { gamma, tau_max, num_tau, t_max, ..EvolutionConfig::new(grid) };
    cfg.validate().map_err(err)?;
    let eta = mode_samples(&cfg.grid, &forcing_mode);
    let f = ForcingTrace::separable(&cfg, &eta, |t| ramp(rate * t));
    let traj = py.detach(|| evolve_boundary_forced(&f, &cfg, &params.inner, &params.consts)).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("times", traj.times.clone())?;
    d.set_item("h", traj.h.clone())?;
    d.set_item("un_trace", traj.un_trace.clone())?;
    d.set_item("rho_sup", traj.norms.iter().map(|s| s.rho_sup).collect::<Vec<_>>())?;
    d.set_item("mr_ratio", maximal_regularity_ratio(&traj, &f, &cfg).ok())?;
    d.set_item("causality_ratio", causality_ratio(&traj))?;
    d.set_item("kinematic_residual", kinematic_residual(&traj, &f, &cfg))?;
    d.set_item("gamma1_surrogate", traj.gamma1_surrogate)?;
    Ok(d)
}

/// Symbol-class suite; returns the reports as a JSON array.
#[pyfunction]
#[pyo3(signature = (params, epsilon, lambda0 = 0.0, seed = 7, points_per_shell = 400))]
fn verify_symbols(py: Python<'_>, params: &PyParams, epsilon: f64, lambda0: f64, seed: u64, points_per_shell: usize) -> PyResult<String> {
    let s = Sector::new(epsilon, lambda0).map_err(err)?;
    let g = ShellGrid { seed, points_per_shell, ..ShellGrid::default() };
    let reps = py.detach(|| verify_symbol_suite(&params.inner, &params.consts, &s, &g)).map_err(err)?;
    json(&reps)
}

/// Determinant lower-bound scan as a JSON report.
#[pyfunction]
#[pyo3(signature = (params, epsilon, lambda0 = 0.0))]
fn scan_det(py: Python<'_>, params: &PyParams, epsilon: f64, lambda0: f64) -> PyResult<String> {
    let s = Sector::new(epsilon, lambda0).map_err(err)?;
    let r = py.detach(|| scan_lopatinskii_lower_bound(&params.inner, &params.consts, &s, &DetGrid::default())).map_err(err)?;
    r.to_json().map_err(err)
}

#[pyfunction]
#[pyo3(signature = (params, epsilon))]
fn asymptotics(py: Python<'_>, params: &PyParams, epsilon: f64) -> PyResult<String> {
    let s = Sector::new(epsilon, 0.0).map_err(err)?;
    let r = py
        .detach(|| check_high_frequency_asymptotics(&params.inner, &params.consts, &s, &AsymptoticsGrid::default()))
        .map_err(err)?;
    r.to_json().map_err(err)
}

#[pymodule]
#[pyo3(name = "nsk")]
fn nsk_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyParams>()?;
    m.add_class::<PyMode>()?;
    m.add_class::<PyField>()?;
    m.add_function(wrap_pyfunction!(solve_mode, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_compare, m)?)?;
    m.add_function(wrap_pyfunction!(field, m)?)?;
    m.add_function(wrap_pyfunction!(evolve, m)?)?;
    m.add_function(wrap_pyfunction!(verify_symbols, m)?)?;
    m.add_function(wrap_pyfunction!(scan_det, m)?)?;
    m.add_function(wrap_pyfunction!(asymptotics, m)?)?;
    Ok(())
}
