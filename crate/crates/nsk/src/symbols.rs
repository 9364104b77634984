//! Frequency-side symbols at one (ξ′, λ).

use crate::error::{NskError, Result};
use crate::kernels::KernelSet;
use crate::params::{DerivedConstants, FluidParams, SectorPoint};
use crate::scalar::Scalar;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::Mutex;

/// All symbols at one point, generic over the scalar type.
///
/// `nj1[J]` and `nj2[J][l−1]` follow the ordering (tangential components,
/// then normal). The n and ϑ coefficients carry no factor of 𝔪; the field
/// formulas multiply by σ|ξ′|²𝔪η̂(0) separately.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolSet<S> {
    pub omega: S,
    pub t1: S,
    pub t2: S,
    pub l1: S,
    pub l2: S,
    pub a: S,
    pub p1: S,
    pub p2: S,
    pub q1: S,
    pub q2: S,
    pub r1: S,
    pub r2: S,
    pub w: S,
    pub big_m: S,
    pub m_frak: S,
    pub theta1: S,
    pub theta2: S,
    pub nj1: Vec<S>,
    pub nj2: Vec<[S; 2]>,
    /// t₂ − t₁, t₁ − ω, t₂ − ω from difference-of-squares forms
    pub d21: S,
    pub d1w: S,
    pub d2w: S,
}

pub type ModeSymbols = SymbolSet<C64>;

/// Closed-form evaluation of every symbol.
pub fn symbols_generic<S: Scalar>(
    xi: &[S],
    lam: S,
    p: &FluidParams,
    c: &DerivedConstants,
) -> SymbolSet<S> {
    let r = S::real;
    let k = |z: C64| S::cst(z);
    let mu = p.mu;
    let mui = 1.0 / mu;
    let kpi = 1.0 / p.kappa;
    let sig = p.sigma;
    let (s1, s2) = (c.s1, c.s2);
    let xi2 = xi.iter().fold(r(0.0), |acc, &x| acc + x * x);

    let omega = (xi2 + lam * mui).sqrt();
    let t1 = (xi2 + lam.mulc(s1)).sqrt();
    let t2 = (xi2 + lam.mulc(s2)).sqrt();
    let tq = t2 * t2 + t2 * t1 + t1 * t1 - xi2;
    let sum12 = t1 + t2;
    let prod12 = t1 * t2;
    let ell = |t: S, s: C64| {
        lam * t * (t + omega) * tq * (mui * mui)
            + omega * xi2 * 4.0
                * (t.mulc(s) * omega * (t + omega) - prod12 * sum12 * k(s - mui))
    };
    let l1 = ell(t1, s1);
    let l2 = ell(t2, s2);
    let ds = s2 - s1;
    let a = sum12.mulc(kpi / ds);
    let pp = |t: S, s: C64| omega.mulc(s * 4.0 - 3.0 * mui) + t * mui;
    let qq = |t: S, s: C64| omega.mulc(s * 2.0 - mui) + t * mui;
    let (p1, p2) = (pp(t1, s1), pp(t2, s2));
    let (q1, q2) = (qq(t1, s1), qq(t2, s2));
    let w = omega * omega + xi2;
    let r1 = sum12.mulc((s1 - mui) / ds) / (t1 + omega);
    let r2 = sum12.mulc((s2 - mui) / ds) / (t2 + omega);
    let l12 = l1 * l2;
    let big_m = omega * lam * l12 * (2.0 * mu * kpi)
        + xi2 * l12 * (sig * kpi)
        + xi2 * prod12 * w * a * (l2.mulc(s2) * q1 - l1.mulc(s1) * q2) * sig;
    let m_frak = omega * l12 * (2.0 * mu * kpi) / big_m;
    let ss = s1 * s2;
    let theta1 = t1.mulc(ss) * (t1 + omega) * w / (l1 * mu);
    let theta2 = t1 * theta1;

    let base = prod12 * w;
    // signed sums over l with (−1)^{l+1}
    let sp = base * a * (p1 / l1.mulc(s1) - p2 / l2.mulc(s2));
    let sq = base * a * (q1 / l1.mulc(s1) - q2 / l2.mulc(s2));
    let tan1 = (sp + 1.0) / (omega * omega * (2.0 * mu));
    let c2 = |t: S, s: C64, l: S| base.mulc(ss) * (t + omega) / (l.mulc(s) * mu);
    let c2_1 = c2(t1, s1, l1);
    let c2_2 = c2(t2, s2, l2);
    let iu = C64::new(0.0, 1.0);
    let mut nj1 = Vec::with_capacity(xi.len() + 1);
    let mut nj2 = Vec::with_capacity(xi.len() + 1);
    for &x in xi {
        let ix = x.mulc(iu);
        nj1.push(ix * tan1);
        nj2.push([-(ix * c2_1), ix * c2_2]);
    }
    nj1.push((sq + 1.0) / (omega * (2.0 * mu)));
    nj2.push([t1 * c2_1, -(t2 * c2_2)]);

    let d21 = lam.mulc(ds) / sum12;
    let d1w = lam.mulc(s1 - mui) / (t1 + omega);
    let d2w = lam.mulc(s2 - mui) / (t2 + omega);

    SymbolSet {
        omega,
        t1,
        t2,
        l1,
        l2,
        a,
        p1,
        p2,
        q1,
        q2,
        r1,
        r2,
        w,
        big_m,
        m_frak,
        theta1,
        theta2,
        nj1,
        nj2,
        d21,
        d1w,
        d2w,
    }
}

impl ModeSymbols {
    pub fn kernels(&self) -> KernelSet {
        KernelSet {
            t1: self.t1,
            t2: self.t2,
            omega: self.omega,
            d21: self.d21,
            d1w: self.d1w,
            d2w: self.d2w,
        }
    }
}

fn root_err(root: &'static str, re: f64, pt: &SectorPoint) -> NskError {
    NskError::RootBranch { root, re, xi: pt.xi.clone(), lambda: format!("{}", pt.lambda) }
}

fn check_lambda(pt: &SectorPoint) -> Result<()> {
    if pt.lambda.norm() == 0.0 || !pt.lambda.norm().is_finite() {
        return Err(NskError::Sector(format!("lambda must be nonzero and finite, got {}", pt.lambda)));
    }
    Ok(())
}

/// Principal roots (ω_λ, t₁, t₂), each checked to have positive real part.
pub fn eval_roots(pt: &SectorPoint, c: &DerivedConstants, p: &FluidParams) -> Result<(C64, C64, C64)> {
    check_lambda(pt)?;
    let x2 = pt.xi2();
    let om = (x2 + pt.lambda / p.mu).sqrt();
    let t1 = (x2 + c.s1 * pt.lambda).sqrt();
    let t2 = (x2 + c.s2 * pt.lambda).sqrt();
    for (name, v) in [("omega", om), ("t1", t1), ("t2", t2)] {
        // principal roots have Re ≥ 0; a vanishing real part means the radicand
        // sits on the branch cut
        if !(v.re > 1e-12 * v.norm()) {
            return Err(root_err(name, v.re, pt));
        }
    }
    Ok((om, t1, t2))
}

pub fn eval_symbols(pt: &SectorPoint, c: &DerivedConstants, p: &FluidParams) -> Result<ModeSymbols> {
    eval_roots(pt, c, p)?;
    let xi: Vec<C64> = pt.xi.iter().map(|&x| C64::new(x, 0.0)).collect();
    let s = symbols_generic(&xi, pt.lambda, p, c);
    if !(s.big_m.norm() > 1e-300) || !s.m_frak.norm().is_finite() {
        return Err(NskError::SingularDeterminant { xi_abs: pt.xi_abs(), lambda: format!("{}", pt.lambda) });
    }
    Ok(s)
}

/// Memo of symbol evaluations keyed by (|ξ′|, λ), safe for concurrent use.
///
/// Stores the evaluation at ξ′ = (|ξ′|, 0, …) and rotates the vector-valued
/// coefficients on lookup.
#[derive(Default)]
pub struct SymbolMemo {
    table: Mutex<HashMap<(u64, u64, u64), ModeSymbols>>,
}

impl SymbolMemo {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.table.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, pt: &SectorPoint, c: &DerivedConstants, p: &FluidParams) -> Result<ModeSymbols> {
        let r = pt.xi_abs();
        let key = (r.to_bits(), pt.lambda.re.to_bits(), pt.lambda.im.to_bits());
        let hit = self.table.lock().unwrap().get(&key).cloned();
        let canon = match hit {
            Some(s) => s,
            None => {
                let mut xi = vec![0.0; pt.xi.len()];
                xi[0] = r;
                let s = eval_symbols(&SectorPoint::new(xi, pt.lambda), c, p)?;
                self.table.lock().unwrap().insert(key, s.clone());
                s
            }
        };
        Ok(rotate(canon, &pt.xi))
    }
}

fn rotate(mut s: ModeSymbols, xi: &[f64]) -> ModeSymbols {
    let r: f64 = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
    let n = xi.len();
    if r == 0.0 {
        return s;
    }
    let a1 = s.nj1[0] / r;
    let a2 = [s.nj2[0][0] / r, s.nj2[0][1] / r];
    for j in 0..n {
        s.nj1[j] = a1 * xi[j];
        s.nj2[j] = [a2[0] * xi[j], a2[1] * xi[j]];
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::derive_constants;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn rel(a: C64, b: C64) -> f64 {
        (a - b).norm() / b.norm()
    }

    fn p0() -> (FluidParams, DerivedConstants) {
        let p = FluidParams::simple(1.0, 3.0, 1.0, 1.0, 2).unwrap();
        (p, derive_constants(&p).unwrap())
    }

    fn p1(dim: usize) -> (FluidParams, DerivedConstants) {
        let p = FluidParams::simple(1.0, 1.0, 2.0, 1.0, dim).unwrap();
        (p, derive_constants(&p).unwrap())
    }

    #[test]
    fn roots_p0_origin() {
        let (p, k) = p0();
        let (om, t1, t2) = eval_roots(&SectorPoint::new(vec![0.0], c(1.0, 0.0)), &k, &p).unwrap();
        assert!(rel(om, c(1.0, 0.0)) < 1e-15);
        assert!((t1.re - (2.0 + 3f64.sqrt()).sqrt()).abs() < 1e-14);
        assert!((t2.re - (2.0 - 3f64.sqrt()).sqrt()).abs() < 1e-14);
        assert!(rel(t1 * t2, c(1.0, 0.0)) < 1e-14);
    }

    #[test]
    fn roots_p1_origin() {
        let (p, k) = p1(2);
        let (_, t1, t2) = eval_roots(&SectorPoint::new(vec![0.0], c(1.0, 0.0)), &k, &p).unwrap();
        assert!((t1 - c(0.776887, 0.321797)).norm() < 1e-6);
        assert!((t2 - t1.conj()).norm() < 1e-15);
        assert!(rel(t1 * t2, c(0.5f64.sqrt(), 0.0)) < 1e-14);
    }

    #[test]
    fn root_branch_flagged() {
        let (p, k) = p1(2);
        // arg λ = π − arg s₁ puts s₁λ on the negative real axis
        let pt = SectorPoint::new(vec![0.0], C64::from_polar(1.0, 0.75 * std::f64::consts::PI));
        let e = eval_roots(&pt, &k, &p).unwrap_err();
        assert!(matches!(e, NskError::RootBranch { .. }), "{e}");
    }

    #[test]
    fn p0_origin_values() {
        let (p, k) = p0();
        let s = eval_symbols(&SectorPoint::new(vec![0.0], c(1.0, 0.0)), &k, &p).unwrap();
        assert!(rel(s.a, c(-0.5f64.sqrt(), 0.0)) < 1e-14);
        let t1 = (2.0 + 3f64.sqrt()).sqrt();
        assert!(rel(s.p1, c(5.0 + 4.0 * 3f64.sqrt() + t1, 0.0)) < 1e-14);
        assert!(rel(s.q1, c(8.3959532677, 0.0)) < 1e-10);
        assert!(rel(s.l1, c(5.0 * t1 * (t1 + 1.0), 0.0)) < 1e-14);
        assert!(rel(s.l1, c(28.3195123007, 0.0)) < 1e-10);
        assert!(rel(s.big_m, c(222.474487139, 0.0)) < 1e-10);
        assert!(rel(s.m_frak, c(1.0, 0.0)) < 1e-14);
    }

    #[test]
    fn xi_zero_determinant_closed_form() {
        let (p, k) = p0();
        let lam = c(0.4, 1.7);
        let s = eval_symbols(&SectorPoint::new(vec![0.0], lam), &k, &p).unwrap();
        let want = s.omega * lam * s.l1 * s.l2 * (2.0 * p.mu / p.kappa);
        assert_eq!(s.big_m, want);
        assert!(rel(s.m_frak, lam.inv()) < 1e-14);
    }

    #[test]
    fn reference_values_off_axis() {
        let (p, k) = p0();
        let lam = C64::from_polar(2.0, std::f64::consts::FRAC_PI_4);
        let s = eval_symbols(&SectorPoint::new(vec![1.0], lam), &k, &p).unwrap();
        assert!(rel(s.m_frak, c(0.36533158506275, -0.28138787064278)) < 1e-12);
        assert!(rel(s.big_m, c(-374955.07021573, -485830.90915984)) < 1e-12);
        assert!(rel(s.l1, c(-89.00946148732, 559.34362681812)) < 1e-12);
        let (p, k) = p1(3);
        let s = eval_symbols(&SectorPoint::new(vec![0.6, 0.8], lam), &k, &p).unwrap();
        assert!(rel(s.m_frak, c(0.35918541486105, -0.27446093558824)) < 1e-12);
        assert!(rel(s.big_m, c(-16203.743082627, -9937.1600413996)) < 1e-12);
    }

    #[test]
    fn swap_symmetry() {
        for (p, k) in [p0(), p1(2)] {
            let pt = SectorPoint::new(vec![0.8], c(-0.3, 2.1));
            let a = eval_symbols(&pt, &k, &p).unwrap();
            let b = eval_symbols(&pt, &k.swapped(), &p).unwrap();
            assert!(rel(b.big_m, a.big_m) < 1e-12);
            assert!(rel(b.m_frak, a.m_frak) < 1e-12);
            assert!(rel(b.a, -a.a) < 1e-14);
        }
    }

    #[test]
    fn r_identities() {
        let (p, k) = p1(2);
        let s = eval_symbols(&SectorPoint::new(vec![1.3], c(0.5, -2.0)), &k, &p).unwrap();
        assert!(rel(s.r1, (s.t1 - s.omega) / (s.t2 - s.t1)) < 1e-10);
        assert!(rel(s.r2, (s.t2 - s.omega) / (s.t2 - s.t1)) < 1e-10);
        let lhs = s.r1 * (k.s2 - k.s1) * (s.t1 + s.omega);
        assert!(rel(lhs, (k.s1 - 1.0 / p.mu) * (s.t2 + s.t1)) < 1e-12);
    }

    #[test]
    fn memo_matches_direct() {
        let (p, k) = p1(3);
        let memo = SymbolMemo::new();
        let pts = [
            SectorPoint::new(vec![0.6, 0.8], c(1.0, 1.0)),
            SectorPoint::new(vec![-0.8, 0.6], c(1.0, 1.0)),
            SectorPoint::new(vec![0.0, 1.0], c(1.0, 1.0)),
        ];
        for pt in &pts {
            let a = memo.get(pt, &k, &p).unwrap();
            let b = eval_symbols(pt, &k, &p).unwrap();
            assert!(rel(a.big_m, b.big_m) < 1e-13);
            for j in 0..3 {
                assert!((a.nj1[j] - b.nj1[j]).norm() <= 1e-13 * b.nj1[j].norm().max(1e-300));
                assert!((a.nj2[j][1] - b.nj2[j][1]).norm() <= 1e-13 * b.nj2[j][1].norm().max(1e-300));
            }
        }
        assert_eq!(memo.len(), 1);
    }
}
