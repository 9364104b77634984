//! Chebyshev points, differentiation and barycentric resampling on [−1, 1].

use std::f64::consts::PI;

/// Lobatto points y_j = cos(πj/n), j = 0..=n (descending).
pub fn lobatto(n: usize) -> Vec<f64> {
    (0..=n).map(|j| (PI * j as f64 / n as f64).cos()).collect()
}

/// First-kind points cos(π(2m+1)/(2n)), m = 0..n.
pub fn first_kind(n: usize) -> Vec<f64> {
    (0..n).map(|m| (PI * (2 * m + 1) as f64 / (2 * n) as f64).cos()).collect()
}

fn bary_weights(n: usize) -> Vec<f64> {
    (0..=n)
        .map(|j| {
            let s = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == n {
                0.5 * s
            } else {
                s
            }
        })
        .collect()
}

/// Row-major (n+1)×(n+1) differentiation matrix at the Lobatto points.
pub fn diff_matrix(n: usize) -> Vec<Vec<f64>> {
    let y = lobatto(n);
    let w = bary_weights(n);
    let mut d = vec![vec![0.0; n + 1]; n + 1];
    for i in 0..=n {
        let mut diag = 0.0;
        for j in 0..=n {
            if i != j {
                d[i][j] = (w[j] / w[i]) / (y[i] - y[j]);
                diag -= d[i][j];
            }
        }
        // negative-sum diagonal keeps D·1 = 0 exactly
        d[i][i] = diag;
    }
    d
}

/// Barycentric interpolation weights from the Lobatto points to `targets`;
/// row m gives p(targets[m]) = Σ_j row[j]·v_j.
pub fn interp_matrix(n: usize, targets: &[f64]) -> Vec<Vec<f64>> {
    let y = lobatto(n);
    let w = bary_weights(n);
    targets
        .iter()
        .map(|&t| {
            let mut row = vec![0.0; n + 1];
            if let Some(j) = y.iter().position(|&yj| yj == t) {
                row[j] = 1.0;
                return row;
            }
            let mut s = 0.0;
            for j in 0..=n {
                row[j] = w[j] / (t - y[j]);
                s += row[j];
            }
            row.iter_mut().for_each(|r| *r /= s);
            row
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn differentiates_polynomials_exactly() {
        let n = 12;
        let y = lobatto(n);
        let d = diff_matrix(n);
        for i in 0..=n {
            let v: f64 = (0..=n).map(|j| d[i][j] * y[j].powi(7)).sum();
            assert!((v - 7.0 * y[i].powi(6)).abs() < 1e-11);
        }
    }

    #[test]
    fn resamples_smooth_function() {
        let n = 30;
        let y = lobatto(n);
        let t = first_kind(n);
        let p = interp_matrix(n, &t);
        for (m, &tm) in t.iter().enumerate() {
            let v: f64 = (0..=n).map(|j| p[m][j] * (2.0 * y[j]).sin()).sum();
            assert!((v - (2.0 * tm).sin()).abs() < 1e-13);
        }
    }
}
