//! Closed-form per-mode solution of the Fourier-side boundary value problem
//! driven by the kinematic datum η̂(0), and its residuals.

use crate::error::{NskError, Result};
use crate::kernels::{KernelKind, KernelSet};
use crate::params::{DerivedConstants, FluidParams, Sector, SectorPoint};
use crate::profile::ExpProfile;
use crate::symbols::{eval_roots, eval_symbols, ModeSymbols};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// (ρ̂, û, ĥ(0)) at one (ξ′, λ). `u[J]` lists tangential components first,
/// then the normal one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSolution {
    pub point: SectorPoint,
    pub eta0: C64,
    pub h0: C64,
    pub rho: ExpProfile,
    pub u: Vec<ExpProfile>,
}

impl ModeSolution {
    pub fn lambda(&self) -> C64 {
        self.point.lambda
    }

    pub fn u_normal(&self) -> &ExpProfile {
        self.u.last().expect("at least one velocity component")
    }

    pub fn kernels(&self) -> KernelSet {
        self.rho.kernels
    }

    /// φ̂ = iξ′·û′ + ∂_N û_N.
    pub fn divergence(&self) -> ExpProfile {
        let n = self.u.len() - 1;
        let mut phi = self.u[n].derivative();
        for j in 0..n {
            phi = &phi + &(&self.u[j] * (I * self.point.xi[j]));
        }
        phi
    }

    pub fn scale(&self, c: C64) -> Self {
        ModeSolution {
            point: self.point.clone(),
            eta0: self.eta0 * c,
            h0: self.h0 * c,
            rho: self.rho.scale(c),
            u: self.u.iter().map(|p| p.scale(c)).collect(),
        }
    }

    /// Largest coefficient-wise difference relative to the larger solution.
    pub fn coefficient_gap(&self, o: &ModeSolution) -> f64 {
        let mut num = (self.h0 - o.h0).norm();
        let mut den = self.h0.norm().max(o.h0.norm());
        let pairs = std::iter::once((&self.rho, &o.rho)).chain(self.u.iter().zip(o.u.iter()));
        for (a, b) in pairs {
            for i in 0..6 {
                num = num.max((a.coef[i] - b.coef[i]).norm());
                den = den.max(a.coef[i].norm()).max(b.coef[i].norm());
            }
        }
        if den == 0.0 {
            0.0
        } else {
            num / den
        }
    }
}

fn require_reduced(p: &FluidParams) -> Result<()> {
    if p.gamma_star != 0.0 {
        return Err(NskError::InvalidParams(
            "closed-form mode solution covers gamma_star = 0 only; use the collocation oracle".into(),
        ));
    }
    if p.rho_star != 1.0 {
        return Err(NskError::InvalidParams("rescale parameters to rho_star = 1 first".into()));
    }
    Ok(())
}

/// Build the profiles from precomputed symbols.
pub fn assemble(pt: &SectorPoint, eta0: C64, p: &FluidParams, s: &ModeSymbols) -> ModeSolution {
    let k = s.kernels();
    let n = pt.xi.len();
    let f = s.m_frak * eta0 * (p.sigma * pt.xi2());
    let rho = ExpProfile::from_terms(k, &[(s.theta1 * f, KernelKind::ExpT1), (-s.theta2 * f, KernelKind::M0)]);
    let u = (0..=n)
        .map(|j| {
            ExpProfile::from_terms(
                k,
                &[
                    (s.nj1[j] * f, KernelKind::ExpOmega),
                    (s.nj2[j][0] * f, KernelKind::M1),
                    (s.nj2[j][1] * f, KernelKind::M2),
                ],
            )
        })
        .collect();
    ModeSolution { point: pt.clone(), eta0, h0: s.m_frak * eta0, rho, u }
}

/// Exact solution for kinematic datum η̂(0) = `eta0`.
///
/// At ξ′ = 0 the fields decouple from ĥ and the solution is ρ̂ = û = 0,
/// ĥ(0) = η̂(0)/λ.
pub fn solve_mode(pt: &SectorPoint, eta0: C64, p: &FluidParams, c: &DerivedConstants) -> Result<ModeSolution> {
    require_reduced(p)?;
    if pt.xi.len() != p.ntan() {
        return Err(NskError::InvalidParams(format!(
            "xi' has {} components, dimension {} needs {}",
            pt.xi.len(),
            p.dim,
            p.ntan()
        )));
    }
    if pt.xi2() == 0.0 {
        let (om, t1, t2) = eval_roots(pt, c, p)?;
        let k = KernelSet::from_roots(t1, t2, om);
        let z = ExpProfile::zero(k);
        return Ok(ModeSolution {
            point: pt.clone(),
            eta0,
            h0: eta0 / pt.lambda,
            rho: z.clone(),
            u: vec![z; pt.xi.len() + 1],
        });
    }
    let s = eval_symbols(pt, c, p)?;
    Ok(assemble(pt, eta0, p, &s))
}

/// [`solve_mode`] with an explicit sector membership check.
pub fn solve_mode_in(
    sector: &Sector,
    pt: &SectorPoint,
    eta0: C64,
    p: &FluidParams,
    c: &DerivedConstants,
) -> Result<ModeSolution> {
    if !sector.contains(pt.lambda) {
        return Err(NskError::Sector(format!("lambda = {} not in the sector {:?}", pt.lambda, sector)));
    }
    solve_mode(pt, eta0, p, c)
}

/// Parallel map of [`solve_mode`]; output order follows the input.
pub fn solve_mode_batch(
    pts: &[SectorPoint],
    eta0: C64,
    p: &FluidParams,
    c: &DerivedConstants,
) -> Vec<Result<ModeSolution>> {
    pts.par_iter().map(|pt| solve_mode(pt, eta0, p, c)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdeResidual {
    pub mass: f64,
    pub tangential: Vec<f64>,
    pub normal: f64,
    pub scale: f64,
}

impl OdeResidual {
    pub fn max(&self) -> f64 {
        self.tangential.iter().cloned().fold(self.mass.max(self.normal), f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BcResidual {
    pub tangential: Vec<f64>,
    pub normal: f64,
    pub neumann: f64,
    pub kinematic: f64,
    pub scale: f64,
}

impl BcResidual {
    pub fn max(&self) -> f64 {
        self.tangential
            .iter()
            .cloned()
            .fold(self.normal.max(self.neumann).max(self.kinematic), f64::max)
    }
}

/// Interior residual profiles (mass, tangential…, normal).
pub fn interior_residual_profiles(sol: &ModeSolution, p: &FluidParams) -> (ExpProfile, Vec<ExpProfile>, ExpProfile) {
    let lam = sol.lambda();
    let x2 = sol.point.xi2();
    let n = sol.u.len() - 1;
    let phi = sol.divergence();
    let mass = &(&sol.rho * lam) + &phi;
    let rho2 = sol.rho.differentiate(2);
    let lap_rho = &rho2 - &(&sol.rho * C64::new(x2, 0.0));
    let momentum = |u: &ExpProfile| {
        let lap_u = &u.differentiate(2) - &(u * C64::new(x2, 0.0));
        &(u * lam) - &(&lap_u * C64::new(p.mu, 0.0))
    };
    let tang = (0..n)
        .map(|j| {
            let ix = I * sol.point.xi[j];
            let m = momentum(&sol.u[j]);
            &(&m - &(&phi * (ix * p.nu))) - &(&lap_rho * (ix * p.kappa))
        })
        .collect();
    let m = momentum(&sol.u[n]);
    let normal = &(&m - &(&phi.derivative() * C64::new(p.nu, 0.0))) - &(&lap_rho.derivative() * C64::new(p.kappa, 0.0));
    (mass, tang, normal)
}

/// Max interior residual over `grid`, normalized by max(1, |λ|·‖profile‖_∞).
pub fn residual_ode(sol: &ModeSolution, p: &FluidParams, grid: &[f64]) -> OdeResidual {
    let sup = std::iter::once(&sol.rho)
        .chain(sol.u.iter())
        .map(|f| f.sup_on(grid))
        .fold(0.0, f64::max);
    let scale = (sol.lambda().norm() * sup).max(1.0);
    let (mass, tang, normal) = interior_residual_profiles(sol, p);
    OdeResidual {
        mass: mass.sup_on(grid) / scale,
        tangential: tang.iter().map(|f| f.sup_on(grid) / scale).collect(),
        normal: normal.sup_on(grid) / scale,
        scale,
    }
}

/// Boundary residuals at x_N = 0.
pub fn residual_bc(sol: &ModeSolution, p: &FluidParams) -> BcResidual {
    residual_bc_with(sol, p, true)
}

/// As [`residual_bc`]; `with_surface_tension = false` drops σ|ξ′|²ĥ(0) from
/// the normal-stress row.
pub fn residual_bc_with(sol: &ModeSolution, p: &FluidParams, with_surface_tension: bool) -> BcResidual {
    let lam = sol.lambda();
    let x2 = sol.point.xi2();
    let n = sol.u.len() - 1;
    let sup0 = std::iter::once(&sol.rho)
        .chain(sol.u.iter())
        .map(|f| f.eval(0.0).norm())
        .fold(0.0, f64::max);
    let scale = (lam.norm() * sup0).max(1.0);
    let un0 = sol.u[n].eval(0.0);
    let tangential = (0..n)
        .map(|j| {
            let r = (I * sol.point.xi[j] * un0 + sol.u[j].derivative().eval(0.0)) * p.mu;
            r.norm() / scale
        })
        .collect();
    let phi0 = sol.divergence().eval(0.0);
    let rho0 = sol.rho.eval(0.0);
    let rho2 = sol.rho.differentiate(2).eval(0.0);
    let st = if with_surface_tension { sol.h0 * (p.sigma * x2) } else { C64::new(0.0, 0.0) };
    let normal = sol.u[n].derivative().eval(0.0) * (2.0 * p.mu) + phi0 * (p.nu - p.mu) + (rho2 - rho0 * x2) * p.kappa + st;
    let neumann = sol.rho.derivative().eval(0.0);
    let kin = lam * sol.h0 + un0 - sol.eta0;
    let kscale = sol.eta0.norm().max((lam * sol.h0).norm()).max(un0.norm());
    BcResidual {
        tangential,
        normal: normal.norm() / scale,
        neumann: neumann.norm() / scale,
        kinematic: if kscale == 0.0 { 0.0 } else { kin.norm() / kscale },
        scale,
    }
}

/// Uniform evaluation grid on (0, X] with X = `decays`/β.
pub fn default_grid(sol: &ModeSolution, count: usize, decays: f64) -> Vec<f64> {
    let beta = sol.kernels().min_decay();
    let xmax = decays / beta;
    (1..=count).map(|i| xmax * i as f64 / count as f64).collect()
}


/// Profiles sampled at fixed heights; output of the quadrature and
/// collocation paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledSolution {
    pub xs: Vec<f64>,
    pub rho: Vec<C64>,
    /// `u[J][i]`: component J at height `xs[i]`
    pub u: Vec<Vec<C64>>,
    pub h0: C64,
}

impl SampledSolution {
    pub fn from_mode(sol: &ModeSolution, xs: &[f64]) -> Self {
        SampledSolution {
            xs: xs.to_vec(),
            rho: xs.iter().map(|&x| sol.rho.eval(x)).collect(),
            u: sol.u.iter().map(|p| xs.iter().map(|&x| p.eval(x)).collect()).collect(),
            h0: sol.h0,
        }
    }

    /// Sup-norm gaps (ρ, u_J…, h0), each relative to the sup of `reference`
    /// (absolute when the reference vanishes).
    pub fn gaps_to(&self, reference: &SampledSolution) -> Vec<f64> {
        fn gap(a: &[C64], b: &[C64]) -> f64 {
            let d = a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
            let s = b.iter().map(|y| y.norm()).fold(0.0, f64::max);
            if s > 0.0 {
                d / s
            } else {
                d
            }
        }
        let mut out = vec![gap(&self.rho, &reference.rho)];
        for (a, b) in self.u.iter().zip(&reference.u) {
            out.push(gap(a, b));
        }
        out.push(gap(&[self.h0], &[reference.h0]));
        out
    }
}
