//! Spectral collocation solver for the per-mode boundary value problem with
//! general data, and the comparison harness against the closed form.
//!
//! Along ξ̂ = ξ′/|ξ′| the unknowns are (ρ̂, ∂ρ̂, ∂²ρ̂, û₁, ∂û₁, û_N) with
//! û₁ = ξ̂·û′, plus ĥ(0); in three dimensions the component of û′
//! perpendicular to ξ̂ obeys a separate scalar problem.

use crate::cheb;
use crate::error::{NskError, Result};
use crate::linalg::solve_guarded;
use crate::mode::{solve_mode, SampledSolution};
use crate::params::{DerivedConstants, FluidParams, SectorPoint};
use crate::profile::ExpSum;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

const I: C64 = C64 { re: 0.0, im: 1.0 };
const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mapping {
    /// x = L(1+y)/2
    LinearTruncation,
    /// x = L·expm1(a(1+y)/2)/expm1(a); `stretch = None` picks a from the
    /// fastest rate at the point.
    Exponential { stretch: Option<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CollocationConfig {
    pub num_nodes: usize,
    /// `None`: 24/β
    pub domain_length: Option<f64>,
    pub mapping: Mapping,
    /// highest derivative of ρ̂ set to zero at x_N = L
    pub decay_bc: usize,
    pub cond_limit: f64,
    /// run the 2L and 2n comparison solves
    pub convergence_checks: bool,
    /// node-doubling change above this is reported as non-convergence
    pub node_tolerance: f64,
    /// keep doubling the node count while the change exceeds this
    pub refine_below: f64,
    pub max_nodes: usize,
}

impl Default for CollocationConfig {
    fn default() -> Self {
        CollocationConfig {
            num_nodes: 64,
            domain_length: None,
            mapping: Mapping::Exponential { stretch: None },
            decay_bc: 1,
            cond_limit: 1e12,
            convergence_checks: true,
            node_tolerance: 1e-6,
            refine_below: 1e-9,
            max_nodes: 256,
        }
    }
}

impl CollocationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_nodes < 16 {
            return Err(NskError::InvalidParams(format!("num_nodes = {} < 16", self.num_nodes)));
        }
        if let Some(l) = self.domain_length {
            if !(l > 0.0 && l.is_finite()) {
                return Err(NskError::InvalidParams(format!("domain_length = {l}")));
            }
        }
        if self.max_nodes < self.num_nodes {
            return Err(NskError::InvalidParams(format!("max_nodes = {} < num_nodes = {}", self.max_nodes, self.num_nodes)));
        }
        if self.decay_bc != 1 {
            return Err(NskError::InvalidParams("decay_bc must be 1 (rho = d_N rho = 0 and u = 0 at L)".into()));
        }
        Ok(())
    }
}

/// Data for the general per-mode problem. `f_hat` and `g_hat0` list
/// tangential components first, then the normal one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralModeRHS {
    pub d_hat: ExpSum,
    pub f_hat: Vec<ExpSum>,
    pub g_hat0: Vec<C64>,
    pub k_hat0: C64,
    pub zeta_hat0: C64,
    pub gamma_star: f64,
}

impl GeneralModeRHS {
    pub fn zero(dim: usize) -> Self {
        GeneralModeRHS {
            d_hat: ExpSum::zero(),
            f_hat: vec![ExpSum::zero(); dim],
            g_hat0: vec![ZERO; dim],
            k_hat0: ZERO,
            zeta_hat0: ZERO,
            gamma_star: 0.0,
        }
    }

    pub fn kinematic(dim: usize, zeta: C64) -> Self {
        GeneralModeRHS { zeta_hat0: zeta, ..Self::zero(dim) }
    }

    fn data_sums(&self) -> impl Iterator<Item = &ExpSum> {
        std::iter::once(&self.d_hat).chain(self.f_hat.iter())
    }

    fn validate(&self, dim: usize) -> Result<()> {
        if self.f_hat.len() != dim || self.g_hat0.len() != dim {
            return Err(NskError::InvalidParams(format!("forcing data must have {dim} components")));
        }
        let finite = self.g_hat0.iter().chain([&self.k_hat0, &self.zeta_hat0]).all(|v| v.re.is_finite() && v.im.is_finite());
        if !finite || !self.gamma_star.is_finite() {
            return Err(NskError::InvalidParams("boundary traces must be finite".into()));
        }
        if self.data_sums().flat_map(|s| s.terms.iter()).any(|(_, z)| z.re <= 0.0) {
            return Err(NskError::InvalidParams("interior data must decay (Re rate > 0)".into()));
        }
        Ok(())
    }
}

/// Decay rates of the homogeneous problem with γ_* included: t² = |ξ′|² + sλ
/// with κs² − (μ + ν + γ_*/λ)s + 1 = 0, and ω² = |ξ′|² + λ/μ.
pub fn homogeneous_rates(xi2: f64, lam: C64, p: &FluidParams, gamma: f64) -> [C64; 3] {
    let b = C64::new(p.mu + p.nu, 0.0) + gamma / lam;
    let disc = (b * b - 4.0 * p.kappa).sqrt();
    let big = if (b + disc).norm() >= (b - disc).norm() { (b + disc) / (2.0 * p.kappa) } else { (b - disc) / (2.0 * p.kappa) };
    let small = 1.0 / (p.kappa * big);
    let t = |s: C64| (s * lam + xi2).sqrt();
    [t(big), t(small), (lam / p.mu + xi2).sqrt()]
}

struct Grid {
    n: usize,
    length: f64,
    stretch: f64,
    x: Vec<f64>,
    xm: Vec<f64>,
    /// d/dx at the first-kind points, acting on Lobatto values
    dx: Vec<Vec<f64>>,
    interp: Vec<Vec<f64>>,
}

impl Grid {
    fn new(n: usize, length: f64, stretch: f64) -> Self {
        let y = cheb::lobatto(n);
        let ym = cheb::first_kind(n);
        let d = cheb::diff_matrix(n);
        let interp = cheb::interp_matrix(n, &ym);
        let mut dx = vec![vec![0.0; n + 1]; n];
        for m in 0..n {
            let jac = Self::jacobian(length, stretch, ym[m]);
            for j in 0..=n {
                dx[m][j] = (0..=n).map(|k| interp[m][k] * d[k][j]).sum::<f64>() / jac;
            }
        }
        let x = y.iter().map(|&v| Self::map(length, stretch, v)).collect();
        let xm = ym.iter().map(|&v| Self::map(length, stretch, v)).collect();
        Grid { n, length, stretch, x, xm, dx, interp }
    }

    fn map(l: f64, a: f64, y: f64) -> f64 {
        if a == 0.0 {
            0.5 * l * (1.0 + y)
        } else {
            l * (0.5 * a * (1.0 + y)).exp_m1() / a.exp_m1()
        }
    }

    fn jacobian(l: f64, a: f64, y: f64) -> f64 {
        if a == 0.0 {
            0.5 * l
        } else {
            0.5 * l * a * (0.5 * a * (1.0 + y)).exp() / a.exp_m1()
        }
    }

    fn inverse(&self, x: f64) -> f64 {
        let a = self.stretch;
        if a == 0.0 {
            2.0 * x / self.length - 1.0
        } else {
            2.0 / a * (x / self.length * a.exp_m1()).ln_1p() - 1.0
        }
    }

    /// Interpolated values of nodal data at heights `xs` (zero beyond L).
    fn sample(&self, values: &[C64], xs: &[f64]) -> Vec<C64> {
        let inside: Vec<f64> = xs.iter().map(|&x| self.inverse(x.min(self.length))).collect();
        let rows = cheb::interp_matrix(self.n, &inside);
        xs.iter()
            .zip(rows)
            .map(|(&x, row)| if x > self.length { ZERO } else { row.iter().zip(values).map(|(w, v)| v * *w).sum() })
            .collect()
    }
}

/// Linear boundary row Σ at0·Y(0) + Σ at_l·Y(L) + Σ extra·z = rhs.
struct BcRow {
    at0: Vec<C64>,
    at_l: Vec<C64>,
    extra: Vec<C64>,
    rhs: C64,
}

/// Y′ = A Y + F(x) for k components and `extras` scalar unknowns.
struct FirstOrderSystem<'a> {
    a: Vec<Vec<C64>>,
    forcing: &'a dyn Fn(f64) -> Vec<C64>,
    bcs: Vec<BcRow>,
    extras: usize,
}

struct NodalSolution {
    /// `y[c][j]`: component c at Lobatto node j
    y: Vec<Vec<C64>>,
    extras: Vec<C64>,
    cond: f64,
    backward_error: f64,
}

fn collocate(sys: &FirstOrderSystem, g: &Grid, cond_limit: f64) -> Result<NodalSolution> {
    let k = sys.a.len();
    let n = g.n;
    let size = k * (n + 1) + sys.extras;
    if k * n + sys.bcs.len() != size {
        return Err(NskError::InvalidParams("boundary row count does not close the system".into()));
    }
    let col = |c: usize, j: usize| c * (n + 1) + j;
    let mut m = DMatrix::from_element(size, size, ZERO);
    let mut rhs = DVector::from_element(size, ZERO);
    for pt in 0..n {
        let f = (sys.forcing)(g.xm[pt]);
        for c in 0..k {
            let row = c * n + pt;
            for j in 0..=n {
                m[(row, col(c, j))] += C64::new(g.dx[pt][j], 0.0);
                let w = g.interp[pt][j];
                if w != 0.0 {
                    for (cc, acc) in sys.a[c].iter().enumerate() {
                        if *acc != ZERO {
                            m[(row, col(cc, j))] -= acc * w;
                        }
                    }
                }
            }
            rhs[row] = f[c];
        }
    }
    // Lobatto node j = n sits at x = 0, node 0 at x = L
    for (b, bc) in sys.bcs.iter().enumerate() {
        let row = k * n + b;
        for c in 0..k {
            m[(row, col(c, n))] += bc.at0[c];
            m[(row, col(c, 0))] += bc.at_l[c];
        }
        for (e, v) in bc.extra.iter().enumerate() {
            m[(row, k * (n + 1) + e)] += *v;
        }
        rhs[row] = bc.rhs;
    }
    let s = solve_guarded(m, rhs, cond_limit)?;
    let y = (0..k).map(|c| (0..=n).map(|j| s.x[col(c, j)]).collect()).collect();
    let extras = (0..sys.extras).map(|e| s.x[k * (n + 1) + e]).collect();
    Ok(NodalSolution { y, extras, cond: s.cond, backward_error: s.backward_error })
}

fn unit(k: usize, i: usize, v: C64) -> Vec<C64> {
    let mut r = vec![ZERO; k];
    r[i] = v;
    r
}

/// Unit vector along ξ′ (e₁ at ξ′ = 0) and, in three dimensions, the
/// in-plane perpendicular.
fn frame(xi: &[f64]) -> (Vec<f64>, Option<Vec<f64>>) {
    let r = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut e = vec![0.0; xi.len()];
    if r > 0.0 {
        e.iter_mut().zip(xi).for_each(|(a, b)| *a = b / r);
    } else {
        e[0] = 1.0;
    }
    let perp = if xi.len() == 2 { Some(vec![-e[1], e[0]]) } else { None };
    (e, perp)
}

/// Result of one collocation solve on a fixed grid.
pub struct OracleSolution {
    grid: Grid,
    along: Vec<f64>,
    perp_dir: Option<Vec<f64>>,
    nodal: NodalSolution,
    perp: Option<NodalSolution>,
    pub h0: C64,
}

impl OracleSolution {
    pub fn domain_length(&self) -> f64 {
        self.grid.length
    }

    pub fn cond(&self) -> f64 {
        self.perp.as_ref().map_or(self.nodal.cond, |p| p.cond.max(self.nodal.cond))
    }

    pub fn backward_error(&self) -> f64 {
        self.perp.as_ref().map_or(self.nodal.backward_error, |p| p.backward_error.max(self.nodal.backward_error))
    }

    /// Heights of the collocation nodes, from x = L down to 0.
    pub fn nodes(&self) -> &[f64] {
        &self.grid.x
    }

    pub fn sample(&self, xs: &[f64]) -> SampledSolution {
        let rho = self.grid.sample(&self.nodal.y[0], xs);
        let u1 = self.grid.sample(&self.nodal.y[3], xs);
        let un = self.grid.sample(&self.nodal.y[5], xs);
        let uperp = self.perp.as_ref().map(|p| self.grid.sample(&p.y[0], xs));
        let mut u = Vec::new();
        for j in 0..self.along.len() {
            let perp_j = self.perp_dir.as_ref().map_or(0.0, |e| e[j]);
            u.push(
                (0..xs.len())
                    .map(|i| u1[i] * self.along[j] + uperp.as_ref().map_or(ZERO, |v| v[i] * perp_j))
                    .collect(),
            );
        }
        u.push(un);
        SampledSolution { xs: xs.to_vec(), rho, u, h0: self.h0 }
    }
}

/// Diagnostics attached to a converged oracle solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleDiagnostics {
    pub num_nodes: usize,
    pub domain_length: f64,
    pub stretch: f64,
    pub beta: f64,
    pub cond: f64,
    pub backward_error: f64,
    /// relative sup change on [0, L/2] against the 2L solve
    pub truncation_estimate: Option<f64>,
    /// relative sup change on [0, L/2] against the 2n solve
    pub node_doubling_change: Option<f64>,
    /// L < 8/β
    pub short_domain: bool,
}

fn grid_for(pt: &SectorPoint, rhs: &GeneralModeRHS, p: &FluidParams, cfg: &CollocationConfig) -> (f64, f64, f64) {
    let rates = homogeneous_rates(pt.xi2(), pt.lambda, p, rhs.gamma_star);
    let mut beta = rates.iter().map(|t| t.re).fold(f64::INFINITY, f64::min);
    let mut rmax = rates.iter().map(|t| t.norm()).fold(0.0, f64::max);
    for s in rhs.data_sums() {
        if let Some(b) = s.min_decay() {
            beta = beta.min(b);
        }
        rmax = rmax.max(s.max_rate());
    }
    let l = cfg.domain_length.unwrap_or(24.0 / beta);
    let a = match cfg.mapping {
        Mapping::LinearTruncation => 0.0,
        Mapping::Exponential { stretch: Some(a) } => a,
        Mapping::Exponential { stretch: None } => (rmax * l / 40.0).ln().max(0.0),
    };
    (beta, l, a)
}

fn solve_on(
    pt: &SectorPoint,
    rhs: &GeneralModeRHS,
    p: &FluidParams,
    g: Grid,
    cond_limit: f64,
) -> Result<OracleSolution> {
    let (mu, nu, ka, sg, gm) = (p.mu, p.nu, p.kappa, p.sigma, rhs.gamma_star);
    let lam = pt.lambda;
    let xi = pt.xi_abs();
    let x2 = xi * xi;
    let nt = pt.xi.len();
    let (along, perp_dir) = frame(&pt.xi);
    let proj = |v: &[ExpSum], e: &[f64]| ExpSum {
        terms: v.iter().zip(e).flat_map(|(s, w)| s.terms.iter().map(move |(c, z)| (c * *w, *z))).collect(),
    };
    let f1 = proj(&rhs.f_hat[..nt], &along);
    let fnorm = rhs.f_hat[nt].clone();
    let d = rhs.d_hat.clone();
    let dd = d.derivative();
    let g1: C64 = rhs.g_hat0[..nt].iter().zip(&along).map(|(g, w)| g * *w).sum();
    let gn = rhs.g_hat0[nt];
    let d0 = d.eval(0.0);

    let ix = I * xi;
    let c = |v: f64| C64::new(v, 0.0);
    // rows: Y = (ρ, ρ′, ρ″, u₁, u₁′, u_N)
    let mut a = vec![vec![ZERO; 6]; 6];
    a[0][1] = c(1.0);
    a[1][2] = c(1.0);
    a[2][5] = (lam + mu * x2) / ka;
    a[2][1] = (lam * (mu + nu) + ka * x2 + gm) / ka;
    a[2][4] = ix * (mu / ka);
    a[3][4] = c(1.0);
    a[4][3] = (lam + mu * x2) / mu;
    a[4][0] = (ix * (nu * lam + ka * x2 + gm)) / mu;
    a[4][2] = -ix * (ka / mu);
    a[5][0] = -lam;
    a[5][3] = -ix;
    let forcing = move |x: f64| {
        let dv = d.eval(x);
        vec![
            ZERO,
            ZERO,
            (-dd.eval(x) * (mu + nu) - fnorm.eval(x)) / ka,
            ZERO,
            (-ix * dv * nu - f1.eval(x)) / mu,
            dv,
        ]
    };
    let z6 = vec![ZERO; 6];
    let bcs = vec![
        BcRow { at0: [vec![ZERO; 4], vec![c(mu), ix * mu]].concat(), at_l: z6.clone(), extra: vec![ZERO], rhs: -g1 },
        BcRow {
            at0: vec![-lam * (mu + nu) - gm - ka * x2, ZERO, c(ka), -ix * (2.0 * mu), ZERO, ZERO],
            at_l: z6.clone(),
            extra: vec![c(sg * x2)],
            rhs: -gn - d0 * (mu + nu),
        },
        BcRow { at0: unit(6, 1, c(1.0)), at_l: z6.clone(), extra: vec![ZERO], rhs: -rhs.k_hat0 },
        BcRow { at0: unit(6, 5, c(1.0)), at_l: z6.clone(), extra: vec![lam], rhs: rhs.zeta_hat0 },
        BcRow { at0: z6.clone(), at_l: unit(6, 0, c(1.0)), extra: vec![ZERO], rhs: ZERO },
        BcRow { at0: z6.clone(), at_l: unit(6, 1, c(1.0)), extra: vec![ZERO], rhs: ZERO },
        BcRow { at0: z6.clone(), at_l: unit(6, 3, c(1.0)), extra: vec![ZERO], rhs: ZERO },
    ];
    let sys = FirstOrderSystem { a, forcing: &forcing, bcs, extras: 1 };
    let nodal = collocate(&sys, &g, cond_limit)?;
    let perp = match &perp_dir {
        Some(e) => {
            let fp = proj(&rhs.f_hat[..nt], e);
            let gp: C64 = rhs.g_hat0[..nt].iter().zip(e).map(|(g, w)| g * *w).sum();
            let a = vec![vec![ZERO, c(1.0)], vec![(lam + mu * x2) / mu, ZERO]];
            let forcing = move |x: f64| vec![ZERO, -fp.eval(x) / mu];
            let bcs = vec![
                BcRow { at0: vec![ZERO, c(mu)], at_l: vec![ZERO; 2], extra: vec![], rhs: -gp },
                BcRow { at0: vec![ZERO; 2], at_l: vec![c(1.0), ZERO], extra: vec![], rhs: ZERO },
            ];
            Some(collocate(&FirstOrderSystem { a, forcing: &forcing, bcs, extras: 0 }, &g, cond_limit)?)
        }
        None => None,
    };
    let h0 = nodal.extras[0];
    Ok(OracleSolution { grid: g, along, perp_dir, nodal, perp, h0 })
}

/// Evaluation heights on [0, X]: a geometric cluster near the wall and a
/// uniform part.
pub fn comparison_grid(xmax: f64) -> Vec<f64> {
    let mut xs: Vec<f64> = (0..=100).map(|i| xmax * i as f64 / 100.0).collect();
    xs.extend((1..=30).map(|k| xmax * 0.01 * 0.8f64.powi(k)));
    xs.sort_by(f64::total_cmp);
    xs
}

fn max_gap(a: &SampledSolution, b: &SampledSolution) -> f64 {
    a.gaps_to(b).into_iter().fold(0.0, f64::max)
}

/// Collocation solve with the convergence checks of `cfg`.
pub fn solve_general_mode(
    pt: &SectorPoint,
    rhs: &GeneralModeRHS,
    p: &FluidParams,
    cfg: &CollocationConfig,
) -> Result<(OracleSolution, OracleDiagnostics)> {
    cfg.validate()?;
    p.validate()?;
    if p.rho_star != 1.0 {
        return Err(NskError::InvalidParams("rescale parameters to rho_star = 1 first".into()));
    }
    if pt.xi.len() != p.ntan() {
        return Err(NskError::InvalidParams(format!("xi' needs {} components", p.ntan())));
    }
    if pt.lambda == ZERO {
        return Err(NskError::InvalidParams("lambda = 0".into()));
    }
    rhs.validate(p.dim)?;
    let (beta, l, a) = grid_for(pt, rhs, p, cfg);
    let mut diag = OracleDiagnostics {
        num_nodes: cfg.num_nodes,
        domain_length: l,
        stretch: a,
        beta,
        cond: 0.0,
        backward_error: 0.0,
        truncation_estimate: None,
        node_doubling_change: None,
        short_domain: l < 8.0 / beta,
    };
    let mut n = cfg.num_nodes;
    let mut sol = solve_on(pt, rhs, p, Grid::new(n, l, a), cfg.cond_limit)?;
    if cfg.convergence_checks {
        let xs = comparison_grid(0.5 * l);
        let mut base = sol.sample(&xs);
        loop {
            let fine = solve_on(pt, rhs, p, Grid::new(2 * n, l, a), cfg.cond_limit)?;
            let fine_s = fine.sample(&xs);
            let change = max_gap(&base, &fine_s);
            diag.node_doubling_change = Some(change);
            if change <= cfg.refine_below || 2 * n > cfg.max_nodes {
                break;
            }
            n *= 2;
            sol = fine;
            base = fine_s;
        }
        diag.num_nodes = n;
        let change = diag.node_doubling_change.unwrap_or(0.0);
        if change > cfg.node_tolerance {
            return Err(NskError::NonConvergence(format!(
                "node doubling {n} -> {} changed the solution by {change:.2e}",
                2 * n
            )));
        }
        let a2 = match cfg.mapping {
            Mapping::Exponential { stretch: None } => grid_for(pt, rhs, p, &CollocationConfig { domain_length: Some(2.0 * l), ..cfg.clone() }).2,
            _ => a,
        };
        let long = solve_on(pt, rhs, p, Grid::new(n, 2.0 * l, a2), cfg.cond_limit)?;
        diag.truncation_estimate = Some(max_gap(&base, &long.sample(&xs)));
    }
    diag.cond = sol.cond();
    diag.backward_error = sol.backward_error();
    Ok((sol, diag))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub xi: Vec<f64>,
    pub lambda: C64,
    /// sup-norm relative gaps: ρ̂, each û_J, ĥ(0)
    pub rho_gap: f64,
    pub u_gaps: Vec<f64>,
    pub h0_gap: f64,
    pub oracle: OracleDiagnostics,
}

impl ComparisonReport {
    pub fn max_gap(&self) -> f64 {
        self.u_gaps.iter().cloned().fold(self.rho_gap.max(self.h0_gap), f64::max)
    }
}

/// Oracle versus closed form for trace datum η̂(0) = `eta0`, sup over [0, L/2].
pub fn compare_with_formula(
    pt: &SectorPoint,
    eta0: C64,
    p: &FluidParams,
    c: &DerivedConstants,
    cfg: &CollocationConfig,
) -> Result<ComparisonReport> {
    let exact = solve_mode(pt, eta0, p, c)?;
    let rhs = GeneralModeRHS::kinematic(p.dim, eta0);
    let (sol, diag) = solve_general_mode(pt, &rhs, p, cfg)?;
    let xs = comparison_grid(0.5 * diag.domain_length);
    let approx = sol.sample(&xs);
    let reference = SampledSolution::from_mode(&exact, &xs);
    let gaps = approx.gaps_to(&reference);
    let nu = gaps.len() - 2;
    Ok(ComparisonReport {
        xi: pt.xi.clone(),
        lambda: pt.lambda,
        rho_gap: gaps[0],
        u_gaps: gaps[1..=nu].to_vec(),
        h0_gap: gaps[nu + 1],
        oracle: diag,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::derive_constants;

    fn p0(dim: usize) -> (FluidParams, DerivedConstants) {
        let p = FluidParams::simple(1.0, 3.0, 1.0, 1.0, dim).unwrap();
        (p, derive_constants(&p).unwrap())
    }

    #[test]
    fn reference_point_agrees() {
        let (p, c) = p0(2);
        let pt = SectorPoint::new(vec![1.0], C64::from_polar(2.0, std::f64::consts::FRAC_PI_4));
        let r = compare_with_formula(&pt, C64::new(1.0, 0.0), &p, &c, &CollocationConfig::default()).unwrap();
        assert!(r.max_gap() < 1e-6, "{r:?}");
        assert!(r.oracle.node_doubling_change.unwrap() < 1e-8);
        assert!(r.oracle.backward_error < 1e-10);
    }

    #[test]
    fn zero_data_zero_solution() {
        let (p, _) = p0(3);
        let pt = SectorPoint::new(vec![0.3, -0.5], C64::new(1.0, 1.0));
        let (s, _) = solve_general_mode(&pt, &GeneralModeRHS::zero(3), &p, &CollocationConfig::default()).unwrap();
        let v = s.sample(&[0.0, 0.5, 3.0]);
        assert_eq!(v.h0, ZERO);
        assert!(v.rho.iter().chain(v.u.iter().flatten()).all(|z| *z == ZERO));
    }

    #[test]
    fn zero_eta_gives_zero_gaps() {
        let (p, c) = p0(2);
        let pt = SectorPoint::new(vec![0.8], C64::new(0.5, 2.0));
        let r = compare_with_formula(&pt, ZERO, &p, &c, &CollocationConfig::default()).unwrap();
        assert_eq!(r.max_gap(), 0.0);
    }

    #[test]
    fn short_domain_is_flagged() {
        let (p, c) = p0(2);
        let pt = SectorPoint::new(vec![0.5], C64::new(0.5, 0.5));
        let cfg = CollocationConfig { domain_length: Some(1.0), ..Default::default() };
        let r = compare_with_formula(&pt, C64::new(1.0, 0.0), &p, &c, &cfg).unwrap();
        assert!(r.max_gap() > 1e-3, "{r:?}");
        assert!(r.oracle.short_domain);
        assert!(r.oracle.truncation_estimate.unwrap() > 1e-3);
    }

    #[test]
    fn gamma_and_mass_source() {
        let p = FluidParams::new(1.0, 3.0, 1.0, 1.0, 0.0, 1.0, 2).unwrap();
        let pt = SectorPoint::new(vec![0.7], C64::new(1.5, 1.0));
        let mut rhs = GeneralModeRHS::zero(2);
        rhs.gamma_star = 0.5;
        rhs.d_hat = ExpSum::single(C64::new(1.0, 0.0), C64::new(1.0, 0.0));
        let (s, d) = solve_general_mode(&pt, &rhs, &p, &CollocationConfig::default()).unwrap();
        assert!(d.backward_error < 1e-10, "{d:?}");
        assert!(d.node_doubling_change.unwrap() < 1e-8, "{d:?}");
        assert!(s.h0.norm() > 0.0);
    }
}
