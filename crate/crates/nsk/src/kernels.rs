//! Exponential and divided-difference kernels in the normal variable.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

/// Below this value of |gap·x| the divided differences switch to the
/// scaled-exponential form.
pub const GAP_SWITCH: f64 = 1e-4;

/// e^z − 1 without cancellation for small |z|.
pub fn expm1(z: C64) -> C64 {
    let (x, y) = (z.re, z.im);
    let ex = x.exp();
    let s = (0.5 * y).sin();
    C64::new(x.exp_m1() * y.cos() - 2.0 * s * s, ex * y.sin())
}

/// (e^z − 1)/z, equal to 1 at z = 0.
pub fn exprel(z: C64) -> C64 {
    if z.norm() < GAP_SWITCH {
        // Taylor remainder at |z| < 1e-4 is below 1e-22
        let one = C64::new(1.0, 0.0);
        one + z * (one / 2.0 + z * (one / 6.0 + z * (one / 24.0 + z / 120.0)))
    } else {
        expm1(z) / z
    }
}

/// (e^{−a x} − e^{−b x})/(a − b) with the gap `a − b` supplied separately.
///
/// Passing an exactly computed gap (rather than the floating difference of
/// `a` and `b`) keeps the result accurate when the rates nearly coincide.
pub fn exp_divided_difference(a: C64, b: C64, gap: C64, x: f64) -> C64 {
    if x == 0.0 {
        return C64::new(0.0, 0.0);
    }
    if (gap * x).norm() < GAP_SWITCH {
        // e^{−ax} − e^{−bx} = e^{−bx}(e^{−gap·x} − 1)
        -(-b * x).exp() * x * exprel(-gap * x)
    } else {
        ((-a * x).exp() - (-b * x).exp()) / gap
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum KernelKind {
    ExpT1,
    ExpT2,
    ExpOmega,
    M0,
    M1,
    M2,
}

impl KernelKind {
    pub const ALL: [KernelKind; 6] = [
        KernelKind::ExpT1,
        KernelKind::ExpT2,
        KernelKind::ExpOmega,
        KernelKind::M0,
        KernelKind::M1,
        KernelKind::M2,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            KernelKind::ExpT1 => "exp_t1",
            KernelKind::ExpT2 => "exp_t2",
            KernelKind::ExpOmega => "exp_omega",
            KernelKind::M0 => "M0",
            KernelKind::M1 => "M1",
            KernelKind::M2 => "M2",
        }
    }
}

/// Decay rates and their gaps: everything needed to evaluate the six basis
/// kernels at a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSet {
    pub t1: C64,
    pub t2: C64,
    pub omega: C64,
    /// t₂ − t₁
    pub d21: C64,
    /// t₁ − ω
    pub d1w: C64,
    /// t₂ − ω
    pub d2w: C64,
}

impl KernelSet {
    /// Gaps by plain subtraction; exact when the inputs are nearby doubles.
    pub fn from_roots(t1: C64, t2: C64, omega: C64) -> Self {
        KernelSet { t1, t2, omega, d21: t2 - t1, d1w: t1 - omega, d2w: t2 - omega }
    }

    pub fn rate(&self, k: KernelKind) -> Option<C64> {
        match k {
            KernelKind::ExpT1 => Some(self.t1),
            KernelKind::ExpT2 => Some(self.t2),
            KernelKind::ExpOmega => Some(self.omega),
            _ => None,
        }
    }

    /// 𝔯_l = (t_l − ω)/(t₂ − t₁).
    pub fn r(&self, l: usize) -> C64 {
        if l == 1 {
            self.d1w / self.d21
        } else {
            self.d2w / self.d21
        }
    }

    pub fn eval(&self, k: KernelKind, x: f64) -> C64 {
        match k {
            KernelKind::ExpT1 => (-self.t1 * x).exp(),
            KernelKind::ExpT2 => (-self.t2 * x).exp(),
            KernelKind::ExpOmega => (-self.omega * x).exp(),
            // (e^{−t₂x} − e^{−t₁x})/(t₂ − t₁)
            KernelKind::M0 => exp_divided_difference(self.t2, self.t1, self.d21, x),
            // (e^{−t_l x} − e^{−ωx})/(t₂ − t₁) = 𝔯_l · dd(t_l, ω)
            KernelKind::M1 => self.r(1) * exp_divided_difference(self.t1, self.omega, self.d1w, x),
            KernelKind::M2 => self.r(2) * exp_divided_difference(self.t2, self.omega, self.d2w, x),
        }
    }

    /// Derivative of a basis kernel written in the same basis: list of
    /// (coefficient, kernel).
    pub fn derivative(&self, k: KernelKind) -> [(C64, KernelKind); 2] {
        let z = C64::new(0.0, 0.0);
        let one = C64::new(1.0, 0.0);
        match k {
            KernelKind::ExpT1 => [(-self.t1, k), (z, k)],
            KernelKind::ExpT2 => [(-self.t2, k), (z, k)],
            KernelKind::ExpOmega => [(-self.omega, k), (z, k)],
            KernelKind::M0 => [(-self.t2, k), (-one, KernelKind::ExpT1)],
            KernelKind::M1 => [(-self.t1, k), (-self.r(1), KernelKind::ExpOmega)],
            KernelKind::M2 => [(-self.t2, k), (-self.r(2), KernelKind::ExpOmega)],
        }
    }

    /// Pure-exponential expansion: coefficients on (e^{−t₁x}, e^{−t₂x}, e^{−ωx}).
    pub fn expand(&self, k: KernelKind) -> [C64; 3] {
        let z = C64::new(0.0, 0.0);
        let one = C64::new(1.0, 0.0);
        let inv = one / self.d21;
        match k {
            KernelKind::ExpT1 => [one, z, z],
            KernelKind::ExpT2 => [z, one, z],
            KernelKind::ExpOmega => [z, z, one],
            KernelKind::M0 => [-inv, inv, z],
            KernelKind::M1 => [inv, z, -inv],
            KernelKind::M2 => [z, inv, -inv],
        }
    }

    /// β = min(Re t₁, Re t₂, Re ω).
    pub fn min_decay(&self) -> f64 {
        self.t1.re.min(self.t2.re).min(self.omega.re)
    }

    pub fn max_rate(&self) -> f64 {
        self.t1.norm().max(self.t2.norm()).max(self.omega.norm())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn exprel_branches_agree() {
        for &z in &[c(9.9e-5, 0.0), c(0.0, 9.9e-5), c(-7e-5, 7e-5)] {
            let series = exprel(z);
            let direct = expm1(z) / z;
            assert!((series - direct).norm() < 1e-12, "{z}");
        }
        for &z in &[c(1.01e-4, 0.0), c(-7.2e-5, 7.2e-5)] {
            let a = exprel(z);
            let one = c(1.0, 0.0);
            let taylor = one + z / 2.0 + z * z / 6.0;
            assert!((a - taylor).norm() < 1e-12);
        }
    }

    #[test]
    fn kernels_vanish_at_zero() {
        let k = KernelSet::from_roots(c(1.5, 0.2), c(0.7, -0.1), c(1.1, 0.3));
        for kind in [KernelKind::M0, KernelKind::M1, KernelKind::M2] {
            assert_eq!(k.eval(kind, 0.0), c(0.0, 0.0));
        }
    }

    #[test]
    fn near_coincident_limit() {
        let k = KernelSet::from_roots(c(1.0 + 1e-8, 0.0), c(1.0, 0.0), c(2.0, 0.0));
        let v = k.eval(KernelKind::M0, 1.0);
        assert!((v - c(-(-1.0f64).exp(), 0.0)).norm() < 1e-8);
    }

    #[test]
    fn derivative_identity_fd() {
        let k = KernelSet::from_roots(c(1.3, 0.4), c(0.6, -0.2), c(0.9, 0.1));
        let x = 0.7;
        let h = 1e-4;
        for kind in KernelKind::ALL {
            let fd = (k.eval(kind, x - 2.0 * h) - k.eval(kind, x + 2.0 * h)
                + (k.eval(kind, x + h) - k.eval(kind, x - h)) * 8.0)
                / (12.0 * h);
            let d: C64 = k.derivative(kind).iter().map(|(cf, kk)| cf * k.eval(*kk, x)).sum();
            assert!((fd - d).norm() < 1e-9 * d.norm().max(1e-3), "{kind:?}");
        }
    }

    #[test]
    fn expansion_matches_eval() {
        let k = KernelSet::from_roots(c(1.3, 0.4), c(0.6, -0.2), c(0.9, 0.1));
        for kind in KernelKind::ALL {
            let e = k.expand(kind);
            let x = 1.3;
            let v = e[0] * (-k.t1 * x).exp() + e[1] * (-k.t2 * x).exp() + e[2] * (-k.omega * x).exp();
            assert!((v - k.eval(kind, x)).norm() < 1e-14);
        }
    }
}
