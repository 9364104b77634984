//! Exact x_N-profiles over the six-element kernel basis.

use crate::kernels::{KernelKind, KernelSet};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Sub};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Σ c_k K_k(x_N) over K ∈ {e^{−t₁x}, e^{−t₂x}, e^{−ωx}, ℳ₀, ℳ₁, ℳ₂}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpProfile {
    pub coef: [C64; 6],
    pub kernels: KernelSet,
}

impl ExpProfile {
    pub fn zero(kernels: KernelSet) -> Self {
        ExpProfile { coef: [ZERO; 6], kernels }
    }

    pub fn term(kernels: KernelSet, kind: KernelKind, c: C64) -> Self {
        let mut p = Self::zero(kernels);
        p.coef[kind.index()] = c;
        p
    }

    pub fn from_terms(kernels: KernelSet, terms: &[(C64, KernelKind)]) -> Self {
        let mut p = Self::zero(kernels);
        for &(c, k) in terms {
            p.coef[k.index()] += c;
        }
        p
    }

    /// Nonzero (coefficient, basis) pairs.
    pub fn terms(&self) -> Vec<(C64, KernelKind)> {
        KernelKind::ALL
            .iter()
            .filter(|k| self.coef[k.index()] != ZERO)
            .map(|&k| (self.coef[k.index()], k))
            .collect()
    }

    pub fn get(&self, k: KernelKind) -> C64 {
        self.coef[k.index()]
    }

    pub fn is_zero(&self) -> bool {
        self.coef.iter().all(|c| *c == ZERO)
    }

    pub fn eval(&self, x: f64) -> C64 {
        KernelKind::ALL
            .iter()
            .filter(|k| self.coef[k.index()] != ZERO)
            .map(|&k| self.coef[k.index()] * self.kernels.eval(k, x))
            .sum()
    }

    pub fn derivative(&self) -> Self {
        let mut out = Self::zero(self.kernels);
        for k in KernelKind::ALL {
            let c = self.coef[k.index()];
            if c == ZERO {
                continue;
            }
            for (d, kk) in self.kernels.derivative(k) {
                out.coef[kk.index()] += c * d;
            }
        }
        out
    }

    /// Exact derivative of order 0..=3.
    pub fn differentiate(&self, order: usize) -> Self {
        assert!(order <= 3, "profile derivatives are supported up to order 3");
        let mut p = self.clone();
        for _ in 0..order {
            p = p.derivative();
        }
        p
    }

    pub fn scale(&self, c: C64) -> Self {
        let mut p = self.clone();
        for v in p.coef.iter_mut() {
            *v *= c;
        }
        p
    }

    /// Coefficients on (e^{−t₁x}, e^{−t₂x}, e^{−ωx}).
    pub fn expand(&self) -> [C64; 3] {
        let mut e = [ZERO; 3];
        for k in KernelKind::ALL {
            let c = self.coef[k.index()];
            if c == ZERO {
                continue;
            }
            let w = self.kernels.expand(k);
            for i in 0..3 {
                e[i] += c * w[i];
            }
        }
        e
    }

    fn rates(&self) -> [C64; 3] {
        [self.kernels.t1, self.kernels.t2, self.kernels.omega]
    }

    /// ∫_X^∞ f(x) conj(g(x)) dx in closed form; both profiles must share
    /// the same decay rates.
    pub fn inner_tail(&self, other: &ExpProfile, x0: f64) -> C64 {
        let (a, b) = (self.expand(), other.expand());
        let (za, zb) = (self.rates(), other.rates());
        let mut s = ZERO;
        for i in 0..3 {
            if a[i] == ZERO {
                continue;
            }
            for j in 0..3 {
                if b[j] == ZERO {
                    continue;
                }
                let z = za[i] + zb[j].conj();
                s += a[i] * b[j].conj() * (-z * x0).exp() / z;
            }
        }
        s
    }

    /// ∫_X^∞ |f|² dx.
    pub fn norm_sq_tail(&self, x0: f64) -> f64 {
        self.inner_tail(self, x0).re.max(0.0)
    }

    /// ‖f‖²_{L²(0,∞)}.
    pub fn norm_sq(&self) -> f64 {
        self.norm_sq_tail(0.0)
    }

    /// max |f| over the given nodes.
    pub fn sup_on(&self, xs: &[f64]) -> f64 {
        xs.iter().map(|&x| self.eval(x).norm()).fold(0.0, f64::max)
    }
}

impl Add for &ExpProfile {
    type Output = ExpProfile;
    fn add(self, o: &ExpProfile) -> ExpProfile {
        let mut p = self.clone();
        for i in 0..6 {
            p.coef[i] += o.coef[i];
        }
        p
    }
}

impl Sub for &ExpProfile {
    type Output = ExpProfile;
    fn sub(self, o: &ExpProfile) -> ExpProfile {
        let mut p = self.clone();
        for i in 0..6 {
            p.coef[i] -= o.coef[i];
        }
        p
    }
}

impl Mul<C64> for &ExpProfile {
    type Output = ExpProfile;
    fn mul(self, c: C64) -> ExpProfile {
        self.scale(c)
    }
}


/// General exponential sum Σ c_k e^{−z_k x}, used for data profiles.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ExpSum {
    /// (coefficient, rate) pairs; every rate needs Re > 0.
    pub terms: Vec<(C64, C64)>,
}

impl ExpSum {
    pub fn zero() -> Self {
        ExpSum { terms: Vec::new() }
    }

    pub fn single(c: C64, rate: C64) -> Self {
        ExpSum { terms: vec![(c, rate)] }
    }

    pub fn eval(&self, x: f64) -> C64 {
        self.terms.iter().map(|(c, z)| c * (-z * x).exp()).sum()
    }

    pub fn derivative(&self) -> Self {
        ExpSum { terms: self.terms.iter().map(|&(c, z)| (-c * z, z)).collect() }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|(c, _)| *c == ZERO)
    }

    /// Smallest real part among the rates, or `None` for the empty sum.
    pub fn min_decay(&self) -> Option<f64> {
        self.terms.iter().map(|(_, z)| z.re).reduce(f64::min)
    }

    pub fn max_rate(&self) -> f64 {
        self.terms.iter().map(|(_, z)| z.norm()).fold(0.0, f64::max)
    }
}
