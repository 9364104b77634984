//! Dense complex solves with a condition guard.

use crate::error::{NskError, Result};
use faer::linalg::solvers::Solve;
use faer::Mat;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

#[derive(Debug, Clone)]
pub struct GuardedSolve {
    pub x: DVector<C64>,
    /// 1-norm condition estimate of the row-equilibrated matrix
    pub cond: f64,
    /// componentwise backward error max_i |r_i| / (Σ_j |a_ij x_j| + |b_i|)
    pub backward_error: f64,
}

fn norm1(a: &DMatrix<C64>) -> f64 {
    a.column_iter().map(|c| c.iter().map(|v| v.norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// Hager's estimate of ‖A⁻¹‖₁ from solves with A and Aᴴ.
fn inverse_norm1_estimate(solve: impl Fn(&DVector<C64>) -> DVector<C64>, solve_adj: impl Fn(&DVector<C64>) -> DVector<C64>, n: usize) -> f64 {
    let mut x = DVector::from_element(n, C64::new(1.0 / n as f64, 0.0));
    let mut est = 0.0;
    let mut last = usize::MAX;
    for _ in 0..5 {
        let y = solve(&x);
        est = y.iter().map(|v| v.norm()).sum::<f64>();
        let s = y.map(|v| if v.norm() > 0.0 { v / v.norm() } else { C64::new(1.0, 0.0) });
        let z = solve_adj(&s);
        let (j, zmax) = z.iter().enumerate().map(|(i, v)| (i, v.norm())).fold((0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
        let zx = z.dotc(&x).re;
        if zmax <= zx || j == last {
            break;
        }
        last = j;
        x = DVector::from_element(n, C64::new(0.0, 0.0));
        x[j] = C64::new(1.0, 0.0);
    }
    est
}

/// Solve A x = b after row equilibration; refuse when the condition
/// estimate exceeds `cond_limit`.
pub fn solve_guarded(mut a: DMatrix<C64>, mut b: DVector<C64>, cond_limit: f64) -> Result<GuardedSolve> {
    let n = a.nrows();
    if a.ncols() != n || b.len() != n {
        return Err(NskError::InvalidParams(format!("system is {}x{} with rhs {}", n, a.ncols(), b.len())));
    }
    for i in 0..n {
        let s = a.row(i).iter().map(|v| v.norm()).fold(0.0, f64::max);
        if s == 0.0 {
            return Err(NskError::IllConditioned { cond: f64::INFINITY, limit: cond_limit });
        }
        a.row_mut(i).iter_mut().for_each(|v| *v /= s);
        b[i] /= s;
    }
    let fa = Mat::<C64>::from_fn(n, n, |i, j| a[(i, j)]);
    let lu = fa.partial_piv_lu();
    let col = |v: &DVector<C64>| Mat::<C64>::from_fn(n, 1, |i, _| v[i]);
    let back = |m: Mat<C64>| DVector::from_fn(n, |i, _| m[(i, 0)]);
    let ainv = inverse_norm1_estimate(|v| back(lu.solve(col(v))), |v| back(lu.solve_adjoint(col(v))), n);
    let cond = norm1(&a) * ainv;
    if !cond.is_finite() || cond > cond_limit {
        return Err(NskError::IllConditioned { cond, limit: cond_limit });
    }
    let x = back(lu.solve(col(&b)));
    if x.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(NskError::IllConditioned { cond: f64::INFINITY, limit: cond_limit });
    }
    let r = &a * &x - &b;
    let mut be: f64 = 0.0;
    for i in 0..n {
        let den: f64 = a.row(i).iter().zip(x.iter()).map(|(aij, xj)| (aij * xj).norm()).sum::<f64>() + b[i].norm();
        if den > 0.0 {
            be = be.max(r[i].norm() / den);
        }
    }
    Ok(GuardedSolve { x, cond, backward_error: be })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_and_estimates() {
        let a = DMatrix::from_row_slice(2, 2, &[C64::new(2.0, 0.0), C64::new(1.0, 1.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0)]);
        let b = DVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(2.0, 0.0)]);
        let s = solve_guarded(a, b, 1e12).unwrap();
        assert!((s.x[1] - C64::new(2.0, 0.0)).norm() < 1e-15);
        assert!((s.x[0] - C64::new(-0.5, -1.0)).norm() < 1e-15);
        assert!(s.cond >= 1.0 && s.cond < 10.0);
    }

    #[test]
    fn condition_estimate_is_sharp_for_small_system() {
        // equilibrated diag(1, 1e-6) with a coupling entry
        let a = DMatrix::from_row_slice(2, 2, &[C64::new(1.0, 0.0), C64::new(0.0, 1.0), C64::new(0.0, 0.0), C64::new(1e-6, 0.0)]);
        let b = DVector::from_element(2, C64::new(1.0, 0.0));
        let s = solve_guarded(a, b, 1e12).unwrap();
        // rows rescaled to unit max: [1, i; 0, 1] has 1-norm condition 4
        assert!((s.cond - 4.0).abs() < 1e-12, "{}", s.cond);
    }

    #[test]
    fn rejects_near_singular() {
        let e = 1e-14;
        let a = DMatrix::from_row_slice(2, 2, &[C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(1.0 + e, 0.0)]);
        let b = DVector::from_element(2, C64::new(1.0, 0.0));
        assert!(matches!(solve_guarded(a, b, 1e12), Err(NskError::IllConditioned { .. })));
    }
}
