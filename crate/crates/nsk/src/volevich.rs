//! Half-space quadrature form of the trace-driven solution.
//!
//! Every term K(x_N)η̂(0) of the closed-form solution is replaced by an
//! integral over y_N of η̂(ξ′, y_N) and ∂_Nη̂(ξ′, y_N), using
//! −∂_y K(x + y) expressed in the kernel basis.
//!
//! Usage requirement: η̂(ξ′, ·) and ∂_Nη̂(ξ′, ·) must be integrable on the
//! half-line against e^{−βy}.

use crate::error::{NskError, Result};
use crate::kernels::{KernelKind, KernelSet};
use crate::mode::{solve_mode, SampledSolution};
use crate::params::{DerivedConstants, FluidParams, SectorPoint};
use crate::profile::ExpSum;
use crate::quad::integrate_half_line;
use num_complex::Complex64 as C64;
use std::sync::Arc;

/// x_N-profile of the datum η̂(ξ′, ·).
#[derive(Clone)]
pub enum BoundaryProfile {
    Exp(ExpSum),
    /// Samples from a closure; derivatives by finite differences.
    Sampled {
        f: Arc<dyn Fn(f64) -> C64 + Send + Sync>,
        /// a decay rate the profile is known to beat
        decay: f64,
    },
}

impl BoundaryProfile {
    pub fn value(&self, y: f64) -> C64 {
        match self {
            BoundaryProfile::Exp(e) => e.eval(y),
            BoundaryProfile::Sampled { f, .. } => f(y),
        }
    }

    pub fn derivative(&self, y: f64) -> C64 {
        match self {
            BoundaryProfile::Exp(e) => e.derivative().eval(y),
            BoundaryProfile::Sampled { f, .. } => {
                let h = 1e-3 * (1.0 + y).min(10.0);
                if y >= 2.0 * h {
                    (f(y - 2.0 * h) - f(y + 2.0 * h) + (f(y + h) - f(y - h)) * 8.0) / (12.0 * h)
                } else {
                    // fourth-order one-sided stencil
                    (f(y) * -25.0 + f(y + h) * 48.0 - f(y + 2.0 * h) * 36.0 + f(y + 3.0 * h) * 16.0
                        - f(y + 4.0 * h) * 3.0)
                        / (12.0 * h)
                }
            }
        }
    }

    pub fn decay(&self) -> f64 {
        match self {
            BoundaryProfile::Exp(e) => e.min_decay().unwrap_or(1.0),
            BoundaryProfile::Sampled { decay, .. } => *decay,
        }
    }
}

const QUAD_ABS: f64 = 1e-15;
const QUAD_REL: f64 = 1e-12;

/// −∂_y K(x + y) in the kernel basis.
fn minus_shift_derivative(k: &KernelSet, kind: KernelKind) -> [(C64, KernelKind); 2] {
    let d = k.derivative(kind);
    [(-d[0].0, d[0].1), (-d[1].0, d[1].1)]
}

/// Right-hand side of the identity for K(x)η(0), with its quadrature error.
pub fn volevich_term(k: &KernelSet, kind: KernelKind, eta: &BoundaryProfile, x: f64) -> Result<(C64, f64)> {
    let md = minus_shift_derivative(k, kind);
    let beta = k.min_decay().min(eta.decay() + k.min_decay());
    let integrand = |y: f64| {
        let s = x + y;
        let lead: C64 = md.iter().map(|(c, kk)| c * k.eval(*kk, s)).sum();
        lead * eta.value(y) - k.eval(kind, s) * eta.derivative(y)
    };
    let r = integrate_half_line(integrand, beta, QUAD_ABS, QUAD_REL)?;
    Ok((r.value, r.error))
}

/// Trace η(0) recovered from the half-line data alone.
pub fn volevich_trace(k: &KernelSet, eta: &BoundaryProfile) -> Result<(C64, f64)> {
    volevich_term(k, KernelKind::ExpOmega, eta, 0.0)
}

/// Solution assembled from half-line integrals, sampled at `xs`.
///
/// Agrees with [`solve_mode`] at the trace η̂(ξ′, 0) up to quadrature error.
pub fn solve_mode_volevich(
    pt: &SectorPoint,
    eta: &BoundaryProfile,
    p: &FluidParams,
    c: &DerivedConstants,
    xs: &[f64],
) -> Result<(SampledSolution, f64)> {
    // coefficients per unit trace; the kernel structure does not depend on η
    let unit = solve_mode(pt, C64::new(1.0, 0.0), p, c)?;
    let k = unit.kernels();
    let (trace, mut err) = volevich_trace(&k, eta)?;
    let mut cache: Vec<[Option<C64>; 6]> = vec![[None; 6]; xs.len()];
    let mut kernel_at = |i: usize, kind: KernelKind| -> Result<C64> {
        if let Some(v) = cache[i][kind.index()] {
            return Ok(v);
        }
        let (v, e) = volevich_term(&k, kind, eta, xs[i])?;
        err = err.max(e);
        cache[i][kind.index()] = Some(v);
        Ok(v)
    };
    let mut profile = |prof: &crate::profile::ExpProfile| -> Result<Vec<C64>> {
        let mut out = Vec::with_capacity(xs.len());
        for i in 0..xs.len() {
            let mut s = C64::new(0.0, 0.0);
            for (cf, kind) in prof.terms() {
                s += cf * kernel_at(i, kind)?;
            }
            out.push(s);
        }
        Ok(out)
    };
    let rho = profile(&unit.rho)?;
    let mut u = Vec::with_capacity(unit.u.len());
    for comp in &unit.u {
        u.push(profile(comp)?);
    }
    if !trace.norm().is_finite() {
        return Err(NskError::Quadrature { estimate: f64::INFINITY });
    }
    let sol = SampledSolution { xs: xs.to_vec(), rho, u, h0: unit.h0 * trace };
    Ok((sol, err))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::derive_constants;

    #[test]
    fn identities_hold_for_exponential_datum() {
        let p = FluidParams::simple(1.0, 3.0, 1.0, 1.0, 2).unwrap();
        let c = derive_constants(&p).unwrap();
        let pt = SectorPoint::new(vec![0.9], C64::new(0.6, 1.4));
        let unit = solve_mode(&pt, C64::new(1.0, 0.0), &p, &c).unwrap();
        let k = unit.kernels();
        let eta = BoundaryProfile::Exp(ExpSum::single(C64::new(1.0, 0.0), C64::new(1.0, 0.0)));
        for &x in &[0.0, 0.3, 2.0] {
            for kind in KernelKind::ALL {
                let (v, _) = volevich_term(&k, kind, &eta, x).unwrap();
                let want = k.eval(kind, x);
                assert!((v - want).norm() <= 1e-10 * want.norm().max(1e-3), "{kind:?} x={x}");
            }
        }
    }

    #[test]
    fn zero_trace_gives_zero() {
        let p = FluidParams::simple(1.0, 1.0, 2.0, 1.0, 2).unwrap();
        let c = derive_constants(&p).unwrap();
        let pt = SectorPoint::new(vec![1.2], C64::new(1.0, -0.5));
        // y e^{−y} vanishes at the boundary
        let eta = BoundaryProfile::Sampled { f: Arc::new(|y| C64::new(y * (-y).exp(), 0.0)), decay: 0.9 };
        let xs = [0.1, 0.5, 1.5];
        let (s, _) = solve_mode_volevich(&pt, &eta, &p, &c, &xs).unwrap();
        assert!(s.h0.norm() < 1e-8);
        assert!(s.rho.iter().chain(s.u.iter().flatten()).all(|v| v.norm() < 1e-8));
    }
}
