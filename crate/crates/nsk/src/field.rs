//! Physical-space resolvent solutions on a periodic tangential box by
//! partial FFT and per-mode closed-form solves.

use crate::error::{NskError, Result};
use crate::mode::{interior_residual_profiles, solve_mode, ModeSolution};
use crate::params::{DerivedConstants, FluidParams, SectorPoint};
use crate::profile::ExpProfile;
use crate::quad::geometric_gauss;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const I: C64 = C64 { re: 0.0, im: 1.0 };
const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Tangential torus and evaluation heights. The mode index k runs over
/// −M/2..M/2 per direction; the unmatched Nyquist mode −M/2 is zeroed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldGrid {
    pub period: Vec<f64>,
    pub modes: Vec<usize>,
    pub xn_nodes: Vec<f64>,
    pub dim: usize,
}

impl FieldGrid {
    pub fn new(dim: usize, period: f64, modes: usize, xn_nodes: Vec<f64>) -> Result<Self> {
        let g = FieldGrid { period: vec![period; dim - 1], modes: vec![modes; dim - 1], xn_nodes, dim };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dim == 2 || self.dim == 3) || self.period.len() != self.dim - 1 || self.modes.len() != self.dim - 1 {
            return Err(NskError::Grid("need one period and mode count per tangential direction".into()));
        }
        for (&m, &p) in self.modes.iter().zip(&self.period) {
            if m < 8 || !m.is_power_of_two() {
                return Err(NskError::Grid(format!("modes = {m}: need a power of two >= 8")));
            }
            if !(p > 0.0 && p.is_finite()) {
                return Err(NskError::Grid(format!("period = {p}")));
            }
        }
        if self.xn_nodes.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
            return Err(NskError::Grid("x_N nodes must be finite and >= 0".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.modes.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Signed integer mode per direction for flat index `i` (row-major),
    /// `None` for the Nyquist mode.
    pub fn mode_index(&self, i: usize) -> Option<Vec<i64>> {
        let mut rem = i;
        let mut out = vec![0i64; self.modes.len()];
        for d in (0..self.modes.len()).rev() {
            let m = self.modes[d];
            let n = rem % m;
            rem /= m;
            if n == m / 2 {
                return None;
            }
            out[d] = if n < m / 2 { n as i64 } else { n as i64 - m as i64 };
        }
        Some(out)
    }

    pub fn frequency(&self, i: usize) -> Option<Vec<f64>> {
        self.mode_index(i).map(|k| k.iter().zip(&self.period).map(|(&k, &p)| 2.0 * PI * k as f64 / p).collect())
    }

    /// Tangential coordinates of flat grid point `i`.
    pub fn point(&self, i: usize) -> Vec<f64> {
        let mut rem = i;
        let mut out = vec![0.0; self.modes.len()];
        for d in (0..self.modes.len()).rev() {
            let m = self.modes[d];
            out[d] = self.period[d] * (rem % m) as f64 / m as f64;
            rem /= m;
        }
        out
    }

    /// Flat index of the signed mode `k`.
    pub fn flat_index(&self, k: &[i64]) -> Option<usize> {
        let mut i = 0;
        for (d, &kd) in k.iter().enumerate() {
            let m = self.modes[d] as i64;
            if kd <= -m / 2 || kd >= m / 2 {
                return None;
            }
            i = i * m as usize + kd.rem_euclid(m) as usize;
        }
        Some(i)
    }

    /// Area of the periodic cell, |T|.
    pub fn cell_measure(&self) -> f64 {
        self.period.iter().product()
    }
}

fn fft_nd(data: &mut [C64], shape: &[usize], inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let total: usize = shape.iter().product();
    let mut stride = 1;
    for d in (0..shape.len()).rev() {
        let m = shape[d];
        let fft = if inverse { planner.plan_fft_inverse(m) } else { planner.plan_fft_forward(m) };
        let mut buf = vec![ZERO; m];
        let block = stride * m;
        for outer in (0..total).step_by(block) {
            for inner in 0..stride {
                for j in 0..m {
                    buf[j] = data[outer + inner + j * stride];
                }
                fft.process(&mut buf);
                for j in 0..m {
                    data[outer + inner + j * stride] = buf[j];
                }
            }
        }
        stride *= m;
    }
}

/// η̂_k = |grid|⁻¹ Σ_j η_j e^{−iξ_k·x_j}, Nyquist zeroed.
pub fn forward_transform(g: &FieldGrid, samples: &[C64]) -> Vec<C64> {
    let mut d = samples.to_vec();
    fft_nd(&mut d, &g.modes, false);
    let n = g.len() as f64;
    for (i, v) in d.iter_mut().enumerate() {
        *v = if g.mode_index(i).is_some() { *v / n } else { ZERO };
    }
    d
}

/// f_j = Σ_k f̂_k e^{iξ_k·x_j}.
pub fn inverse_transform(g: &FieldGrid, coefs: &[C64]) -> Vec<C64> {
    let mut d = coefs.to_vec();
    fft_nd(&mut d, &g.modes, true);
    d
}

/// L² norms of the derivative tuples. `r_rho`: (∇³ρ, λ^{1/2}∇²ρ, λρ in H¹);
/// `s_u`: (∇²u, λ^{1/2}∇u, λu); `t_h`: (h in H^{5/2}, λh in H^{3/2}).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NormTriple {
    pub r_rho: [f64; 3],
    pub s_u: [f64; 3],
    pub t_h: [f64; 2],
}

impl NormTriple {
    pub fn entries(&self) -> Vec<f64> {
        self.r_rho.iter().chain(&self.s_u).chain(&self.t_h).copied().collect()
    }

    pub fn sum(&self) -> f64 {
        self.entries().iter().sum()
    }

    /// largest entrywise relative gap
    pub fn gap(&self, o: &NormTriple) -> f64 {
        self.entries()
            .iter()
            .zip(o.entries())
            .map(|(a, b)| if a.max(b) == 0.0 { 0.0 } else { (a - b).abs() / a.max(b) })
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSolution {
    pub grid: FieldGrid,
    pub lambda: C64,
    /// boundary datum coefficients per flat mode
    pub eta_hat: Vec<C64>,
    pub modes: Vec<ModeSolution>,
    /// `rho[n][j]` at height xn_nodes[n], tangential point j
    pub rho: Vec<Vec<C64>>,
    /// `u[J][n][j]`
    pub u: Vec<Vec<Vec<C64>>>,
    pub h: Vec<C64>,
    pub warnings: Vec<String>,
    pub norm_report: NormTriple,
}

fn zero_mode(g: &FieldGrid, i: usize, lam: C64, p: &FluidParams, c: &DerivedConstants) -> Result<ModeSolution> {
    // Nyquist slot: solve at the mirrored frequency with zero datum
    let mut k = vec![0i64; g.modes.len()];
    let mut rem = i;
    for d in (0..g.modes.len()).rev() {
        let m = g.modes[d];
        let n = rem % m;
        rem /= m;
        k[d] = if n < m / 2 { n as i64 } else { n as i64 - m as i64 };
    }
    let xi = k.iter().zip(&g.period).map(|(&k, &pp)| 2.0 * PI * k as f64 / pp).collect();
    solve_mode(&SectorPoint::new(xi, lam), ZERO, p, c)
}

fn synthesize(g: &FieldGrid, f: impl Fn(usize) -> C64) -> Vec<C64> {
    let coefs: Vec<C64> = (0..g.len()).map(f).collect();
    inverse_transform(g, &coefs)
}

/// Solve for boundary samples `eta` (row-major over the tangential grid).
pub fn solve_field(eta: &[C64], lambda: C64, p: &FluidParams, c: &DerivedConstants, grid: &FieldGrid) -> Result<FieldSolution> {
    grid.validate()?;
    if grid.dim != p.dim {
        return Err(NskError::Grid(format!("grid dimension {} vs params dimension {}", grid.dim, p.dim)));
    }
    if eta.len() != grid.len() {
        return Err(NskError::Grid(format!("eta has {} samples, grid has {}", eta.len(), grid.len())));
    }
    let mut warnings = Vec::new();
    let raw = {
        let mut d = eta.to_vec();
        fft_nd(&mut d, &grid.modes, false);
        d
    };
    let total: f64 = raw.iter().map(|v| v.norm_sqr()).sum();
    let high: f64 = (0..grid.len())
        .filter(|&i| {
            let mut rem = i;
            let mut hi = false;
            for d in (0..grid.modes.len()).rev() {
                let m = grid.modes[d];
                let n = rem % m;
                rem /= m;
                let k = if n <= m / 2 { n } else { m - n };
                hi |= 3 * k > m;
            }
            hi
        })
        .map(|i| raw[i].norm_sqr())
        .sum();
    if total > 0.0 && high > 1e-8 * total {
        warnings.push(format!("aliasing: top third of the spectrum carries {:.2e} of the energy", high / total));
    }
    let eta_hat = forward_transform(grid, eta);
    let modes: Vec<ModeSolution> = (0..grid.len())
        .into_par_iter()
        .map(|i| match grid.frequency(i) {
            Some(xi) => solve_mode(&SectorPoint::new(xi, lambda), eta_hat[i], p, c),
            None => zero_mode(grid, i, lambda, p, c),
        })
        .collect::<Result<_>>()?;
    let rho = grid.xn_nodes.iter().map(|&x| synthesize(grid, |i| modes[i].rho.eval(x))).collect();
    let u = (0..p.dim)
        .map(|j| grid.xn_nodes.iter().map(|&x| synthesize(grid, |i| modes[i].u[j].eval(x))).collect())
        .collect();
    let h = synthesize(grid, |i| modes[i].h0);
    let mut sol = FieldSolution { grid: grid.clone(), lambda, eta_hat, modes, rho, u, h, warnings, norm_report: NormTriple::default() };
    sol.norm_report = spectral_norms(&sol);
    Ok(sol)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldResidual {
    pub mass: f64,
    pub momentum: Vec<f64>,
    pub tangential_stress: Vec<f64>,
    pub normal_stress: f64,
    pub neumann: f64,
    pub kinematic: f64,
}

impl FieldResidual {
    pub fn max(&self) -> f64 {
        self.momentum
            .iter()
            .chain(&self.tangential_stress)
            .copied()
            .fold(self.mass.max(self.normal_stress).max(self.neumann).max(self.kinematic), f64::max)
    }
}

pub(crate) fn supnorm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Residuals of the ζ-only system at the stored λ.
pub fn residual_field(sol: &FieldSolution, p: &FluidParams) -> FieldResidual {
    residual_field_at(sol, p, sol.lambda)
}

/// Residuals of the stored fields measured against the system at `lambda`.
pub fn residual_field_at(sol: &FieldSolution, p: &FluidParams, lambda: C64) -> FieldResidual {
    let g = &sol.grid;
    let nt = g.dim - 1;
    let modes: Vec<ModeSolution> = sol
        .modes
        .iter()
        .map(|m| {
            let mut m = m.clone();
            m.point.lambda = lambda;
            m
        })
        .collect();
    let field_sup = sol.rho.iter().chain(sol.u.iter().flatten()).map(|v| supnorm(v)).fold(0.0, f64::max);
    let scale = (lambda.norm() * field_sup).max(1.0);
    let profiles: Vec<(ExpProfile, Vec<ExpProfile>, ExpProfile)> = modes.iter().map(|m| interior_residual_profiles(m, p)).collect();
    let mut mass: f64 = 0.0;
    let mut momentum = vec![0.0f64; g.dim];
    for &x in &g.xn_nodes {
        mass = mass.max(supnorm(&synthesize(g, |i| profiles[i].0.eval(x))));
        for j in 0..nt {
            momentum[j] = momentum[j].max(supnorm(&synthesize(g, |i| profiles[i].1[j].eval(x))));
        }
        momentum[nt] = momentum[nt].max(supnorm(&synthesize(g, |i| profiles[i].2.eval(x))));
    }
    let x2 = |m: &ModeSolution| m.point.xi2();
    let tangential_stress = (0..nt)
        .map(|j| {
            supnorm(&synthesize(g, |i| {
                let m = &modes[i];
                (I * m.point.xi[j] * m.u[nt].eval(0.0) + m.u[j].derivative().eval(0.0)) * p.mu
            })) / scale
        })
        .collect();
    let normal_stress = supnorm(&synthesize(g, |i| {
        let m = &modes[i];
        m.u[nt].derivative().eval(0.0) * (2.0 * p.mu)
            + m.divergence().eval(0.0) * (p.nu - p.mu)
            + (m.rho.differentiate(2).eval(0.0) - m.rho.eval(0.0) * x2(m)) * p.kappa
            + m.h0 * (p.sigma * x2(m))
    })) / scale;
    let neumann = supnorm(&synthesize(g, |i| modes[i].rho.derivative().eval(0.0))) / scale;
    let eta = synthesize(g, |i| sol.eta_hat[i]);
    let kin = synthesize(g, |i| lambda * modes[i].h0 + modes[i].u[nt].eval(0.0) - sol.eta_hat[i]);
    let kscale = supnorm(&eta).max(lambda.norm() * supnorm(&sol.h));
    FieldResidual {
        mass: mass / scale,
        momentum: momentum.iter().map(|v| v / scale).collect(),
        tangential_stress,
        normal_stress,
        neumann,
        kinematic: if kscale == 0.0 { 0.0 } else { supnorm(&kin) / kscale },
    }
}

fn binom(m: usize, b: usize) -> f64 {
    (1..=b).fold(1.0, |acc, i| acc * (m + 1 - i) as f64 / i as f64)
}

/// ‖∇^m f‖²_{L²(ℝ^N_+)} contribution of one mode: Σ_b C(m,b)|ξ′|^{2(m−b)}‖∂_N^b f̂‖².
pub(crate) fn grad_norm_sq(f: &ExpProfile, xi2: f64, m: usize) -> f64 {
    (0..=m).map(|b| binom(m, b) * xi2.powi((m - b) as i32) * f.differentiate(b).norm_sq()).sum()
}

/// Closed-form norms (Plancherel on the torus, exact x_N integrals).
pub fn spectral_norms(sol: &FieldSolution) -> NormTriple {
    let meas = sol.grid.cell_measure();
    let lam = sol.lambda.norm();
    let mut acc = [0.0f64; 8];
    for m in &sol.modes {
        let xi2 = m.point.xi2();
        let r = &m.rho;
        acc[0] += grad_norm_sq(r, xi2, 3);
        acc[1] += lam * grad_norm_sq(r, xi2, 2);
        acc[2] += lam * lam * (grad_norm_sq(r, xi2, 0) + grad_norm_sq(r, xi2, 1));
        for u in &m.u {
            acc[3] += grad_norm_sq(u, xi2, 2);
            acc[4] += lam * grad_norm_sq(u, xi2, 1);
            acc[5] += lam * lam * grad_norm_sq(u, xi2, 0);
        }
        let hs = m.h0.norm_sqr();
        acc[6] += (1.0 + xi2).powf(2.5) * hs;
        acc[7] += (1.0 + xi2).powf(1.5) * lam * lam * hs;
    }
    let n = |v: f64| (meas * v).sqrt();
    NormTriple {
        r_rho: [n(acc[0]), n(acc[1]), n(acc[2])],
        s_u: [n(acc[3]), n(acc[4]), n(acc[5])],
        t_h: [n(acc[6]), n(acc[7])],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub spectral: NormTriple,
    pub grid: NormTriple,
    /// tail integral beyond the quadrature cutoff, relative to the total
    pub tail_fraction: f64,
    pub cutoff: f64,
    pub warnings: Vec<String>,
}

/// Sums |∂-tensor entry|² over every ordered index sequence of length m, in
/// physical space on the grid at one height.
fn tensor_sq_at(sol: &FieldSolution, m: usize, x: f64, derivs: &[Vec<ExpProfile>]) -> f64 {
    let g = &sol.grid;
    let dim = g.dim;
    let nt = dim - 1;
    let cell = g.cell_measure() / g.len() as f64;
    let mut total = 0.0;
    let count = dim.pow(m as u32);
    for seq in 0..count {
        let mut s = seq;
        let mut tang = vec![0usize; nt];
        let mut b = 0;
        for _ in 0..m {
            let d = s % dim;
            s /= dim;
            if d == nt {
                b += 1;
            } else {
                tang[d] += 1;
            }
        }
        let f = synthesize(g, |i| {
            let xi = &sol.modes[i].point.xi;
            let mut mult = C64::new(1.0, 0.0);
            for (d, &t) in tang.iter().enumerate() {
                mult *= (I * xi[d]).powu(t as u32);
            }
            mult * derivs[i][b].eval(x)
        });
        total += f.iter().map(|v| v.norm_sqr()).sum::<f64>() * cell;
    }
    total
}

/// Norms from physical-space grid samples: spectral x′-derivatives, trapezoid
/// in x′, composite Gauss in x_N on [0, X] and the exact exponential tail.
pub fn compute_norms(sol: &FieldSolution) -> NormReport {
    let meas = sol.grid.cell_measure();
    let lam = sol.lambda.norm();
    let beta = sol
        .modes
        .iter()
        .filter(|m| m.point.xi2() > 0.0)
        .map(|m| m.kernels().min_decay())
        .fold(f64::INFINITY, f64::min);
    let cutoff = if beta.is_finite() { 12.0 / beta } else { 1.0 };
    let (xs, ws) = geometric_gauss(cutoff, 14, 16);
    // component getters: ρ and each û_J
    let ncomp = 1 + sol.grid.dim;
    let comp = |m: &ModeSolution, c: usize| -> ExpProfile { if c == 0 { m.rho.clone() } else { m.u[c - 1].clone() } };
    let mut quad = vec![[0.0f64; 4]; ncomp];
    let mut tails = vec![[0.0f64; 4]; ncomp];
    for c in 0..ncomp {
        let derivs: Vec<Vec<ExpProfile>> = sol.modes.iter().map(|m| { let f = comp(m, c); (0..=3).map(|b| f.differentiate(b)).collect() }).collect();
        let orders: &[usize] = if c == 0 { &[0, 1, 2, 3] } else { &[0, 1, 2] };
        for &m in orders {
            let mut s = 0.0;
            for (x, w) in xs.iter().zip(&ws) {
                s += w * tensor_sq_at(sol, m, *x, &derivs);
            }
            quad[c][m] = s;
            tails[c][m] = sol
                .modes
                .iter()
                .zip(&derivs)
                .map(|(md, d)| {
                    let xi2 = md.point.xi2();
                    (0..=m).map(|b| binom(m, b) * xi2.powi((m - b) as i32) * d[b].norm_sq_tail(cutoff)).sum::<f64>()
                })
                .sum::<f64>()
                * meas;
        }
    }
    let full = |c: usize, m: usize| quad[c][m] + tails[c][m];
    let us = |m: usize| (1..ncomp).map(|c| full(c, m)).sum::<f64>();
    let spectral = spectral_norms(sol);
    let grid = NormTriple {
        r_rho: [full(0, 3).sqrt(), (lam * full(0, 2)).sqrt(), (lam * lam * (full(0, 0) + full(0, 1))).sqrt()],
        s_u: [us(2).sqrt(), (lam * us(1)).sqrt(), (lam * lam * us(0)).sqrt()],
        // boundary Sobolev norms are spectral sums on both paths
        t_h: spectral.t_h,
    };
    let tail_total: f64 = tails.iter().flatten().sum();
    let all: f64 = quad.iter().flatten().sum::<f64>() + tail_total;
    let tail_fraction = if all > 0.0 { tail_total / all } else { 0.0 };
    let mut warnings = Vec::new();
    if tail_fraction > 1e-8 {
        warnings.push(format!("x_N tail beyond {cutoff:.3e} carries {tail_fraction:.2e} of the norm"));
    }
    NormReport { spectral, grid, tail_fraction, cutoff, warnings }
}

/// (Σ NormTriple entries) / ‖η‖_{H^{3/2}} for a solved field.
pub fn resolvent_quotient(sol: &FieldSolution) -> Result<f64> {
    let meas = sol.grid.cell_measure();
    let eta: f64 = sol
        .modes
        .iter()
        .zip(&sol.eta_hat)
        .map(|(m, e)| (1.0 + m.point.xi2()).powf(1.5) * e.norm_sqr())
        .sum::<f64>()
        * meas;
    if eta == 0.0 {
        return Err(NskError::Undefined("zero boundary datum: resolvent quotient undefined".into()));
    }
    Ok(sol.norm_report.sum() / eta.sqrt())
}

/// Samples of a Gaussian bump exp(−|x′ − centre|²/(2w²)) on the grid.
pub fn gaussian_samples(g: &FieldGrid, width: f64) -> Vec<C64> {
    (0..g.len())
        .map(|i| {
            let x = g.point(i);
            let r2: f64 = x.iter().zip(&g.period).map(|(x, p)| (x - 0.5 * p).powi(2)).sum();
            C64::new((-r2 / (2.0 * width * width)).exp(), 0.0)
        })
        .collect()
}

/// Samples of e^{iξ_k·x′} for the signed mode `k`.
pub fn mode_samples(g: &FieldGrid, k: &[i64]) -> Vec<C64> {
    (0..g.len())
        .map(|i| {
            let x = g.point(i);
            let ph: f64 = x.iter().zip(k).zip(&g.period).map(|((x, &k), p)| 2.0 * PI * k as f64 * x / p).sum();
            C64::from_polar(1.0, ph)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::derive_constants;

    fn setup(dim: usize) -> (FluidParams, DerivedConstants) {
        let p = FluidParams::simple(1.0, 3.0, 1.0, 1.0, dim).unwrap();
        (p, derive_constants(&p).unwrap())
    }

    #[test]
    fn fft_roundtrip_and_indices() {
        let g = FieldGrid::new(3, 2.0, 8, vec![0.0]).unwrap();
        assert_eq!(g.mode_index(0), Some(vec![0, 0]));
        assert_eq!(g.mode_index(4), None);
        assert_eq!(g.flat_index(&[-1, 2]), Some(7 * 8 + 2));
        let eta = mode_samples(&g, &[1, -3]);
        let hat = forward_transform(&g, &eta);
        let k = g.flat_index(&[1, -3]).unwrap();
        assert!((hat[k] - C64::new(1.0, 0.0)).norm() < 1e-14);
        assert!(hat.iter().enumerate().all(|(i, v)| i == k || v.norm() < 1e-14));
    }

    #[test]
    fn single_mode_diagonalizes() {
        let (p, c) = setup(2);
        let g = FieldGrid::new(2, 2.0 * PI, 16, vec![0.0, 0.3, 1.0]).unwrap();
        let lam = C64::new(1.0, 2.0);
        let sol = solve_field(&mode_samples(&g, &[3]), lam, &p, &c, &g).unwrap();
        let m = solve_mode(&SectorPoint::new(vec![3.0], lam), C64::new(1.0, 0.0), &p, &c).unwrap();
        for (n, &x) in g.xn_nodes.iter().enumerate() {
            for j in 0..g.len() {
                let ph = C64::from_polar(1.0, 3.0 * g.point(j)[0]);
                assert!((sol.rho[n][j] - m.rho.eval(x) * ph).norm() < 1e-10);
            }
        }
        let nt = sol.norm_report;
        let want = grad_norm_sq(&m.rho, 9.0, 3).sqrt() * (2.0 * PI).sqrt();
        assert!((nt.r_rho[0] - want).abs() < 1e-12 * want);
    }

    #[test]
    fn zero_datum() {
        let (p, c) = setup(3);
        let g = FieldGrid::new(3, 4.0, 8, vec![0.0, 1.0]).unwrap();
        let sol = solve_field(&vec![ZERO; g.len()], C64::new(2.0, 0.0), &p, &c, &g).unwrap();
        assert!(sol.h.iter().chain(sol.rho.iter().flatten()).all(|v| *v == ZERO));
        assert!(resolvent_quotient(&sol).is_err());
    }

    #[test]
    fn aliasing_warning() {
        let (p, c) = setup(2);
        let g = FieldGrid::new(2, 2.0 * PI, 16, vec![0.0]).unwrap();
        let sol = solve_field(&mode_samples(&g, &[7]), C64::new(1.0, 0.0), &p, &c, &g).unwrap();
        assert!(sol.warnings.iter().any(|w| w.contains("aliasing")));
    }

    #[test]
    fn zeroed_mode_is_detected() {
        let (p, c) = setup(2);
        let g = FieldGrid::new(2, 20.0, 32, vec![0.0, 0.5, 2.0]).unwrap();
        let mut sol = solve_field(&gaussian_samples(&g, 1.5), C64::new(1.0, 1.0), &p, &c, &g).unwrap();
        assert!(residual_field(&sol, &p).max() < 1e-8);
        let k = g.flat_index(&[1]).unwrap();
        sol.modes[k] = sol.modes[k].scale(ZERO);
        assert!(residual_field(&sol, &p).kinematic > 1e-4);
    }

    #[test]
    fn grid_norms_match_spectral() {
        for dim in [2, 3] {
            let (p, c) = setup(dim);
            let g = FieldGrid::new(dim, 16.0, 16, vec![0.0]).unwrap();
            let sol = solve_field(&gaussian_samples(&g, 2.0), C64::new(3.0, 1.0), &p, &c, &g).unwrap();
            let r = compute_norms(&sol);
            assert!(r.spectral.gap(&r.grid) < 1e-10, "dim {dim}: {r:?}");
        }
    }

    #[test]
    fn real_data_real_fields() {
        let (p, c) = setup(3);
        let g = FieldGrid::new(3, 12.0, 16, vec![0.0, 0.5]).unwrap();
        let sol = solve_field(&gaussian_samples(&g, 1.5), C64::new(2.0, 0.0), &p, &c, &g).unwrap();
        let sup = sol.rho.iter().flatten().chain(sol.u.iter().flatten().flatten()).map(|v| v.norm()).fold(0.0, f64::max);
        let im = sol.rho.iter().flatten().chain(sol.u.iter().flatten().flatten()).chain(&sol.h).map(|v| v.im.abs()).fold(0.0, f64::max);
        assert!(im < 1e-10 * sup.max(1.0));
    }

    #[test]
    fn wrong_lambda_is_detected() {
        let (p, c) = setup(2);
        let g = FieldGrid::new(2, 20.0, 32, vec![0.0, 0.5]).unwrap();
        let lam = C64::new(1.0, 1.0);
        let sol = solve_field(&gaussian_samples(&g, 1.5), lam, &p, &c, &g).unwrap();
        assert!(residual_field_at(&sol, &p, lam * 2.0).max() > 1e-4);
    }
}
