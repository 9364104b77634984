//! Complex scalar abstraction for forward-mode differentiation.
//!
//! Symbol formulas are written once over [`Scalar`]; plain evaluation uses
//! `Complex64`, derivatives use (nested) [`Dual`] numbers.

use num_complex::Complex64 as C64;
use std::ops::{Add, Div, Mul, Neg, Sub};

pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Mul<f64, Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
{
    fn cst(c: C64) -> Self;
    fn value(&self) -> C64;
    fn sqrt(self) -> Self;
    fn exp(self) -> Self;

    fn real(x: f64) -> Self {
        Self::cst(C64::new(x, 0.0))
    }

    fn mulc(self, c: C64) -> Self {
        self * Self::cst(c)
    }

    fn recip(self) -> Self {
        Self::real(1.0) / self
    }

    fn powi(self, n: i32) -> Self {
        let mut acc = Self::real(1.0);
        let base = if n < 0 { self.recip() } else { self };
        for _ in 0..n.unsigned_abs() {
            acc = acc * base;
        }
        acc
    }
}

impl Scalar for C64 {
    fn cst(c: C64) -> Self {
        c
    }
    fn value(&self) -> C64 {
        *self
    }
    fn sqrt(self) -> Self {
        C64::sqrt(self)
    }
    fn exp(self) -> Self {
        C64::exp(self)
    }
}

/// First-order dual number `re + eps·ε` with ε² = 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual<T> {
    pub re: T,
    pub eps: T,
}

impl<T: Scalar> Dual<T> {
    pub fn new(re: T, eps: T) -> Self {
        Dual { re, eps }
    }

    pub fn constant(re: T) -> Self {
        Dual { re, eps: T::real(0.0) }
    }

    pub fn variable(re: T) -> Self {
        Dual { re, eps: T::real(1.0) }
    }
}

impl<T: Scalar> Add for Dual<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Dual::new(self.re + o.re, self.eps + o.eps)
    }
}

impl<T: Scalar> Sub for Dual<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Dual::new(self.re - o.re, self.eps - o.eps)
    }
}

impl<T: Scalar> Mul for Dual<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Dual::new(self.re * o.re, self.re * o.eps + self.eps * o.re)
    }
}

impl<T: Scalar> Div for Dual<T> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let inv = o.re.recip();
        let q = self.re * inv;
        Dual::new(q, (self.eps - q * o.eps) * inv)
    }
}

impl<T: Scalar> Neg for Dual<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Dual::new(-self.re, -self.eps)
    }
}

impl<T: Scalar> Mul<f64> for Dual<T> {
    type Output = Self;
    fn mul(self, f: f64) -> Self {
        Dual::new(self.re * f, self.eps * f)
    }
}

impl<T: Scalar> Add<f64> for Dual<T> {
    type Output = Self;
    fn add(self, f: f64) -> Self {
        Dual::new(self.re + f, self.eps)
    }
}

impl<T: Scalar> Sub<f64> for Dual<T> {
    type Output = Self;
    fn sub(self, f: f64) -> Self {
        Dual::new(self.re - f, self.eps)
    }
}

impl<T: Scalar> Scalar for Dual<T> {
    fn cst(c: C64) -> Self {
        Dual::constant(T::cst(c))
    }
    fn value(&self) -> C64 {
        self.re.value()
    }
    fn sqrt(self) -> Self {
        let s = self.re.sqrt();
        Dual::new(s, self.eps / (s * 2.0))
    }
    fn exp(self) -> Self {
        let e = self.re.exp();
        Dual::new(e, self.eps * e)
    }
    fn recip(self) -> Self {
        let inv = self.re.recip();
        Dual::new(inv, -(self.eps * inv * inv))
    }
}

/// Three nested dual levels: enough for two ξ′-derivatives and one τ-derivative.
pub type Dual3 = Dual<Dual<Dual<C64>>>;

/// Seed value `v` with unit perturbations along each selected level.
///
/// Level 1 is the outermost dual, level 3 the innermost.
pub fn seed3(v: C64, d1: C64, d2: C64, d3: C64) -> Dual3 {
    let z = C64::new(0.0, 0.0);
    let inner = |a: C64, b: C64| Dual::new(a, b);
    // innermost level carries d3, middle d2, outermost d1
    let lvl_re = Dual::new(inner(v, d3), inner(d2, z));
    let lvl_eps = Dual::new(inner(d1, z), inner(z, z));
    Dual::new(lvl_re, lvl_eps)
}

/// Derivative components of a [`Dual3`] result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual3Parts {
    pub f: C64,
    pub d1: C64,
    pub d2: C64,
    pub d3: C64,
    pub d12: C64,
    pub d13: C64,
    pub d23: C64,
    pub d123: C64,
}

pub fn parts3(x: &Dual3) -> Dual3Parts {
    Dual3Parts {
        f: x.re.re.re,
        d3: x.re.re.eps,
        d2: x.re.eps.re,
        d23: x.re.eps.eps,
        d1: x.eps.re.re,
        d13: x.eps.re.eps,
        d12: x.eps.eps.re,
        d123: x.eps.eps.eps,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn dual_sqrt_derivative() {
        let x = Dual::variable(c(4.0, 0.0));
        let y = x.sqrt();
        assert!((y.re - c(2.0, 0.0)).norm() < 1e-15);
        assert!((y.eps - c(0.25, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn dual_quotient_and_exp() {
        let z0 = c(0.3, -0.7);
        let x = Dual::variable(z0);
        let y = x.exp() / (x * x + 1.0);
        let f = |z: C64| z.exp() / (z * z + 1.0);
        let h = 1e-6;
        let fd = (f(z0 + h) - f(z0 - h)) / (2.0 * h);
        assert!((y.eps - fd).norm() < 1e-8);
    }

    #[test]
    fn nested_second_derivative() {
        // f(x) = x³ → f'' = 6x
        let x0 = c(1.5, 0.5);
        let x = seed3(x0, c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0));
        let y = x * x * x;
        let p = parts3(&y);
        assert!((p.d12 - x0 * 6.0).norm() < 1e-13);
        assert!((p.d1 - x0 * x0 * 3.0).norm() < 1e-13);
        assert!((p.d2 - x0 * x0 * 3.0).norm() < 1e-13);
    }

    #[test]
    fn mixed_partials() {
        // f(a, b, l) = a² b l → ∂a∂b∂l f = 2a
        let (a0, b0, l0) = (c(0.7, 0.0), c(-1.2, 0.0), c(0.4, 0.9));
        let a = seed3(a0, c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0));
        let b = seed3(b0, c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0));
        let l = seed3(l0, c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0));
        let p = parts3(&(a * a * b * l));
        assert!((p.d123 - a0 * 2.0).norm() < 1e-14);
        assert!((p.d12 - a0 * 2.0 * l0).norm() < 1e-14);
        assert!((p.d23 - a0 * a0).norm() < 1e-14);
        assert!((p.d13 - a0 * 2.0 * b0).norm() < 1e-14);
    }
}
