//! Boundary-forced time evolution by numerical Laplace inversion along the
//! line λ = γ + iτ.

use crate::error::{NskError, Result};
use crate::field::{forward_transform, grad_norm_sq, inverse_transform, supnorm, FieldGrid};
use crate::mode::solve_mode;
use crate::params::{DerivedConstants, FluidParams, SectorPoint};
use crate::quad::integrate_adaptive;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Fraction of |τ| covered by the raised-cosine taper.
pub const TAPER_FRACTION: f64 = 0.1;
/// Relative spectral energy allowed under the taper before tau_max is
/// declared insufficient.
pub const TAIL_LIMIT: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub gamma: f64,
    pub tau_max: f64,
    pub num_tau: usize,
    /// output window is [0, t_max]; the negative-time prefix is kept for
    /// causality monitoring
    pub t_max: f64,
    pub grid: FieldGrid,
    /// empirical λ₀ from the symbol scans
    pub lambda0: f64,
}

impl EvolutionConfig {
    pub fn new(grid: FieldGrid) -> Self {
        EvolutionConfig { gamma: 1.5, tau_max: 400.0, num_tau: 4096, t_max: 8.0, grid, lambda0: 1.0 }
    }

    pub fn dt(&self) -> f64 {
        PI / self.tau_max
    }

    /// Length of the periodic time window, 2π/Δτ.
    pub fn period(&self) -> f64 {
        self.num_tau as f64 * self.dt()
    }

    pub fn t_start(&self) -> f64 {
        -0.25 * self.period()
    }

    pub fn times(&self) -> Vec<f64> {
        let (t0, dt) = (self.t_start(), self.dt());
        (0..self.num_tau).map(|j| t0 + j as f64 * dt).collect()
    }

    pub fn taus(&self) -> Vec<f64> {
        let m = self.num_tau;
        let dtau = 2.0 * self.tau_max / m as f64;
        (0..m).map(|q| if q < m / 2 { q as f64 } else { q as f64 - m as f64 } * dtau).collect()
    }

    /// 1.5 · max(λ₀, 1); a numerical stand-in for the abscissa γ₁.
    pub fn gamma1_surrogate(&self) -> f64 {
        1.5 * self.lambda0.max(1.0)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        if self.num_tau < 256 || !self.num_tau.is_power_of_two() {
            return Err(NskError::Evolution(format!("num_tau = {}: need a power of two >= 256", self.num_tau)));
        }
        if !(self.tau_max > 0.0 && self.tau_max.is_finite()) {
            return Err(NskError::Evolution(format!("tau_max = {}", self.tau_max)));
        }
        if !(self.lambda0 >= 0.0 && self.lambda0.is_finite()) {
            return Err(NskError::Evolution(format!("lambda0 = {}", self.lambda0)));
        }
        if !(self.gamma >= self.gamma1_surrogate()) || !self.gamma.is_finite() {
            return Err(NskError::Evolution(format!(
                "gamma = {} below the gamma_1 surrogate {}",
                self.gamma,
                self.gamma1_surrogate()
            )));
        }
        if !(self.t_max > 0.0 && self.t_max < 0.75 * self.period() - self.dt()) {
            return Err(NskError::Evolution(format!("t_max = {} outside (0, {:.3})", self.t_max, 0.75 * self.period())));
        }
        Ok(())
    }

    fn window(&self, tau: f64) -> f64 {
        let edge = (1.0 - TAPER_FRACTION) * self.tau_max;
        let a = tau.abs();
        if a <= edge {
            1.0
        } else if a >= self.tau_max {
            0.0
        } else {
            0.5 * (1.0 + (PI * (a - edge) / (TAPER_FRACTION * self.tau_max)).cos())
        }
    }
}

/// ζ sampled on the tangential grid at every time of the configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForcingTrace {
    pub times: Vec<f64>,
    /// `zeta[j][i]`: time j, tangential point i
    pub zeta: Vec<Vec<C64>>,
}

impl ForcingTrace {
    pub fn from_fn(cfg: &EvolutionConfig, f: impl Fn(&[f64], f64) -> C64) -> Self {
        let g = &cfg.grid;
        let pts: Vec<Vec<f64>> = (0..g.len()).map(|i| g.point(i)).collect();
        let times = cfg.times();
        let zeta = times.iter().map(|&t| pts.iter().map(|x| f(x, t)).collect()).collect();
        ForcingTrace { times, zeta }
    }

    /// ζ = η(x′)·s(t).
    pub fn separable(cfg: &EvolutionConfig, eta: &[C64], s: impl Fn(f64) -> f64) -> Self {
        let times = cfg.times();
        let zeta = times.iter().map(|&t| { let v = s(t); eta.iter().map(|e| e * v).collect() }).collect();
        ForcingTrace { times, zeta }
    }

    pub fn zero(cfg: &EvolutionConfig) -> Self {
        let times = cfg.times();
        let zeta = vec![vec![ZERO; cfg.grid.len()]; times.len()];
        ForcingTrace { times, zeta }
    }

    pub fn scaled(&self, c: C64) -> Self {
        ForcingTrace { times: self.times.clone(), zeta: self.zeta.iter().map(|r| r.iter().map(|v| v * c).collect()).collect() }
    }

    /// Delay by `n` time samples.
    pub fn delayed(&self, n: usize) -> Self {
        let w = self.zeta[0].len();
        let mut zeta = vec![vec![ZERO; w]; n.min(self.zeta.len())];
        zeta.extend(self.zeta.iter().take(self.zeta.len().saturating_sub(n)).cloned());
        ForcingTrace { times: self.times.clone(), zeta }
    }

    pub fn is_zero(&self) -> bool {
        self.zeta.iter().flatten().all(|v| *v == ZERO)
    }

    /// Checks shape, vanishing for t ≤ 0 and a second-order zero at t = 0.
    pub fn validate(&self, cfg: &EvolutionConfig) -> Result<()> {
        if self.times.len() != cfg.num_tau || self.zeta.len() != cfg.num_tau || self.zeta.iter().any(|r| r.len() != cfg.grid.len()) {
            return Err(NskError::Evolution("forcing shape does not match the configuration".into()));
        }
        let first = self.times.iter().position(|&t| t > 0.0).unwrap_or(self.times.len());
        if self.zeta[..first].iter().flatten().any(|v| *v != ZERO) {
            return Err(NskError::Evolution("forcing must vanish for t <= 0".into()));
        }
        if first + 1 < self.times.len() {
            // |ζ|/t² at the first two positive samples: a first-order ramp
            // doubles this quotient, a second-order one keeps it flat
            let q = |j: usize| supnorm(&self.zeta[j]) / self.times[j].powi(2);
            let (q1, q2) = (q(first), q(first + 1));
            if q1 > 1.5 * q2 && q1 > 0.0 {
                return Err(NskError::Evolution("forcing must vanish to second order at t = 0".into()));
            }
        }
        Ok(())
    }
}

/// Squared transform-side norms behind the maximal-regularity ratio, with
/// the Plancherel factors applied.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MrTerms {
    pub labels: Vec<String>,
    pub squares: Vec<f64>,
    pub forcing_sq: f64,
}

impl MrTerms {
    pub fn left_side(&self) -> f64 {
        self.squares.iter().map(|v| v.sqrt()).sum()
    }
}

const MR_LABELS: [&str; 11] = [
    "dt_rho_H1", "rho_H3", "lam_half_rho_H2", "lam_rho_H1", "lam_3half_rho_L2", "dt_u_L2", "u_H2", "lam_half_u_H1",
    "lam_u_L2", "dt_h_H3half", "h_H5half",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormSample {
    pub t: f64,
    pub rho_sup: f64,
    pub u_sup: f64,
    pub h_l2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    /// t_start ≤ t ≤ t_max
    pub times: Vec<f64>,
    /// `rho[j][n][i]`: time j, height n, tangential point i
    pub rho: Vec<Vec<Vec<C64>>>,
    /// `u[J][j][n][i]`
    pub u: Vec<Vec<Vec<Vec<C64>>>>,
    pub h: Vec<Vec<C64>>,
    /// normal velocity at x_N = 0
    pub un_trace: Vec<Vec<C64>>,
    pub norms: Vec<NormSample>,
    pub mr_terms: MrTerms,
    pub mr_ratio: Option<f64>,
    pub gamma: f64,
    pub gamma1_surrogate: f64,
}

fn spectra(f: &ForcingTrace, cfg: &EvolutionConfig) -> Result<Vec<Vec<C64>>> {
    let g = &cfg.grid;
    let m = cfg.num_tau;
    let dt = cfg.dt();
    let per_time: Vec<Vec<C64>> = f.zeta.iter().map(|z| forward_transform(g, z)).collect();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(m);
    let taus = cfg.taus();
    let t0 = cfg.t_start();
    let mut out = Vec::with_capacity(g.len());
    let (mut tail, mut total) = (0.0, 0.0);
    for k in 0..g.len() {
        let mut buf: Vec<C64> = f.times.iter().enumerate().map(|(j, &t)| per_time[j][k] * (-cfg.gamma * t).exp()).collect();
        fft.process(&mut buf);
        for (q, v) in buf.iter_mut().enumerate() {
            *v *= C64::from_polar(dt, -taus[q] * t0);
            let e = v.norm_sqr();
            total += e;
            if cfg.window(taus[q]) < 1.0 {
                tail += e;
            }
            *v *= cfg.window(taus[q]);
        }
        out.push(buf);
    }
    if total > 0.0 && tail > TAIL_LIMIT * total {
        return Err(NskError::Evolution(format!(
            "insufficient tau_max: {:.2e} of the forcing spectrum lies under the taper",
            tail / total
        )));
    }
    Ok(out)
}

/// Solve the ζ-forced problem with zero initial data.
pub fn evolve_boundary_forced(f: &ForcingTrace, cfg: &EvolutionConfig, p: &FluidParams, c: &DerivedConstants) -> Result<Trajectory> {
    cfg.validate()?;
    f.validate(cfg)?;
    let g = &cfg.grid;
    if g.dim != p.dim {
        return Err(NskError::Grid(format!("grid dimension {} vs params dimension {}", g.dim, p.dim)));
    }
    let m = cfg.num_tau;
    let nx = g.xn_nodes.len();
    let dim = p.dim;
    let nq = 2 + nx * (1 + dim);
    let spec = spectra(f, cfg)?;
    let taus = cfg.taus();
    let t0 = cfg.t_start();
    let times = cfg.times();
    let meas = g.cell_measure();
    let plancherel = meas * (2.0 * cfg.tau_max / m as f64) / (2.0 * PI);
    let ifft = FftPlanner::<f64>::new().plan_fft_inverse(m);
    // per mode: time series of every sampled quantity, and MR partial sums
    let per_mode: Vec<(Vec<Vec<C64>>, [f64; 11], f64)> = (0..g.len())
        .into_par_iter()
        .map(|k| -> Result<_> {
            let mut vals = vec![vec![ZERO; m]; nq];
            let mut mr = [0.0f64; 11];
            let mut forcing = 0.0;
            let Some(xi) = g.frequency(k) else { return Ok((vals, mr, forcing)) };
            let xi2: f64 = xi.iter().map(|v| v * v).sum();
            for q in 0..m {
                let z = spec[k][q];
                if z == ZERO {
                    continue;
                }
                let lam = C64::new(cfg.gamma, taus[q]);
                let sol = solve_mode(&SectorPoint::new(xi.clone(), lam), z, p, c)?;
                let ph = C64::from_polar(1.0, taus[q] * t0);
                vals[0][q] = sol.h0 * ph;
                vals[1][q] = sol.u[dim - 1].eval(0.0) * ph;
                for (n, &x) in g.xn_nodes.iter().enumerate() {
                    vals[2 + n][q] = sol.rho.eval(x) * ph;
                    for j in 0..dim {
                        vals[2 + nx * (1 + j) + n][q] = sol.u[j].eval(x) * ph;
                    }
                }
                let l = lam.norm();
                let gr: Vec<f64> = (0..=3).map(|b| grad_norm_sq(&sol.rho, xi2, b)).collect();
                let gu: Vec<f64> = (0..=2).map(|b| sol.u.iter().map(|u| grad_norm_sq(u, xi2, b)).sum()).collect();
                let hr = |s: usize| gr[..=s].iter().sum::<f64>();
                let hu = |s: usize| gu[..=s].iter().sum::<f64>();
                let hs = sol.h0.norm_sqr();
                let w = (1.0 + xi2).sqrt();
                let parts = [
                    l * l * hr(1),
                    hr(3),
                    l * hr(2),
                    l * l * hr(1),
                    l * l * l * hr(0),
                    l * l * hu(0),
                    hu(2),
                    l * hu(1),
                    l * l * hu(0),
                    l * l * w.powi(3) * hs,
                    w.powi(5) * hs,
                ];
                for (a, b) in mr.iter_mut().zip(parts) {
                    *a += b;
                }
                forcing += w.powi(3) * z.norm_sqr();
            }
            for v in vals.iter_mut() {
                ifft.process(v);
            }
            Ok((vals, mr, forcing))
        })
        .collect::<Result<_>>()?;
    let keep = times.iter().take_while(|&&t| t <= cfg.t_max).count();
    let scale: Vec<f64> = times[..keep].iter().map(|&t| (cfg.gamma * t).exp() / (m as f64 * cfg.dt())).collect();
    let synth = |qi: usize, j: usize| -> Vec<C64> {
        let coefs: Vec<C64> = per_mode.iter().map(|(v, _, _)| v[qi][j] * scale[j]).collect();
        inverse_transform(g, &coefs)
    };
    let mut traj = Trajectory {
        times: times[..keep].to_vec(),
        rho: Vec::with_capacity(keep),
        u: vec![Vec::with_capacity(keep); dim],
        h: Vec::with_capacity(keep),
        un_trace: Vec::with_capacity(keep),
        norms: Vec::with_capacity(keep),
        mr_terms: MrTerms::default(),
        mr_ratio: None,
        gamma: cfg.gamma,
        gamma1_surrogate: cfg.gamma1_surrogate(),
    };
    for j in 0..keep {
        let h_l2 = (meas * per_mode.iter().map(|(v, _, _)| (v[0][j] * scale[j]).norm_sqr()).sum::<f64>()).sqrt();
        traj.h.push(synth(0, j));
        traj.un_trace.push(synth(1, j));
        let rho: Vec<Vec<C64>> = (0..nx).map(|n| synth(2 + n, j)).collect();
        let mut u_sup: f64 = 0.0;
        for (jj, uj) in traj.u.iter_mut().enumerate() {
            let rows: Vec<Vec<C64>> = (0..nx).map(|n| synth(2 + nx * (1 + jj) + n, j)).collect();
            u_sup = rows.iter().map(|r| supnorm(r)).fold(u_sup, f64::max);
            uj.push(rows);
        }
        let rho_sup = rho.iter().map(|r| supnorm(r)).fold(0.0, f64::max);
        traj.rho.push(rho);
        traj.norms.push(NormSample { t: times[j], rho_sup, u_sup, h_l2 });
    }
    let mut squares = [0.0; 11];
    let mut forcing_sq = 0.0;
    for (_, mr, fz) in &per_mode {
        for (a, b) in squares.iter_mut().zip(mr) {
            *a += b * plancherel;
        }
        forcing_sq += fz * plancherel;
    }
    traj.mr_terms = MrTerms { labels: MR_LABELS.iter().map(|s| s.to_string()).collect(), squares: squares.to_vec(), forcing_sq };
    traj.mr_ratio = (forcing_sq > 0.0).then(|| traj.mr_terms.left_side() / forcing_sq.sqrt());
    Ok(traj)
}

/// Left side of the weighted maximal-regularity estimate over
/// ‖e^{−γt}ζ‖_{L²(ℝ, H^{3/2})}, both on the transform side (p = q = 2).
pub fn maximal_regularity_ratio(traj: &Trajectory, f: &ForcingTrace, cfg: &EvolutionConfig) -> Result<f64> {
    let spec = spectra(f, cfg)?;
    let g = &cfg.grid;
    let plancherel = g.cell_measure() * (2.0 * cfg.tau_max / cfg.num_tau as f64) / (2.0 * PI);
    let forcing_sq: f64 = (0..g.len())
        .filter_map(|k| g.frequency(k).map(|xi| (k, xi)))
        .map(|(k, xi)| {
            let w = (1.0 + xi.iter().map(|v| v * v).sum::<f64>()).powf(1.5);
            spec[k].iter().map(|z| w * z.norm_sqr()).sum::<f64>()
        })
        .sum::<f64>()
        * plancherel;
    if forcing_sq == 0.0 {
        return Err(NskError::Undefined("zero forcing: maximal-regularity ratio undefined".into()));
    }
    Ok(traj.mr_terms.left_side() / forcing_sq.sqrt())
}

/// max over the interior output times of |∂_t h + u_N(0) − ζ| with a
/// central difference in t, relative to max |ζ|.
pub fn kinematic_residual(traj: &Trajectory, f: &ForcingTrace, cfg: &EvolutionConfig) -> f64 {
    let dt = cfg.dt();
    let zmax = f.zeta.iter().map(|r| supnorm(r)).fold(0.0, f64::max);
    if zmax == 0.0 {
        return 0.0;
    }
    let mut worst: f64 = 0.0;
    for j in 1..traj.times.len().saturating_sub(1) {
        for i in 0..cfg.grid.len() {
            let dh = (traj.h[j + 1][i] - traj.h[j - 1][i]) / (2.0 * dt);
            worst = worst.max((dh + traj.un_trace[j][i] - f.zeta[j][i]).norm());
        }
    }
    worst / zmax
}

/// Largest field magnitude over t < 0 relative to the peak over the window.
pub fn causality_ratio(traj: &Trajectory) -> f64 {
    let size = |s: &NormSample| s.rho_sup.max(s.u_sup).max(s.h_l2);
    let peak = traj.norms.iter().map(size).fold(0.0, f64::max);
    if peak == 0.0 {
        return 0.0;
    }
    traj.norms.iter().filter(|s| s.t < 0.0).map(size).fold(0.0, f64::max) / peak
}

/// One-mode Bromwich integral (2π)⁻¹∫ e^{λt} Û(λ) dτ along Re λ = γ, by
/// adaptive quadrature on |τ| ≤ tau_cut, for ζ = e^{iξ′·x′} s(t) with
/// Laplace transform `s_hat`. Returns [h, u_N(0), ρ(x_n)..., u_J(x_n)...].
#[allow(clippy::too_many_arguments)]
pub fn bromwich_one_mode(
    xi: &[f64],
    s_hat: impl Fn(C64) -> C64,
    t: f64,
    xs: &[f64],
    gamma: f64,
    tau_cut: f64,
    p: &FluidParams,
    c: &DerivedConstants,
) -> Result<Vec<C64>> {
    let dim = p.dim;
    let nq = 2 + xs.len() * (1 + dim);
    let pick = |tau: f64, qi: usize| -> C64 {
        let lam = C64::new(gamma, tau);
        let sol = match solve_mode(&SectorPoint::new(xi.to_vec(), lam), s_hat(lam), p, c) {
            Ok(s) => s,
            Err(_) => return C64::new(f64::NAN, 0.0),
        };
        let nx = xs.len();
        let v = match qi {
            0 => sol.h0,
            1 => sol.u[dim - 1].eval(0.0),
            q if q < 2 + nx => sol.rho.eval(xs[q - 2]),
            q => {
                let r = q - 2 - nx;
                sol.u[r / nx].eval(xs[r % nx])
            }
        };
        v * (lam * t).exp() / (2.0 * PI)
    };
    // one panel per oscillation of e^{iτt}
    let panels = ((2.0 * tau_cut * t.abs().max(1.0) / (2.0 * PI)).ceil() as usize).max(16);
    let breaks: Vec<f64> = (0..=panels).map(|i| -tau_cut + 2.0 * tau_cut * i as f64 / panels as f64).collect();
    (0..nq)
        .map(|qi| {
            let r = integrate_adaptive(|tau| pick(tau, qi), &breaks, 1e-14, 1e-11, 400_000)?;
            if !r.value.re.is_finite() {
                return Err(NskError::Evolution("mode solve failed on the Bromwich line".into()));
            }
            Ok(r.value)
        })
        .collect()
}
