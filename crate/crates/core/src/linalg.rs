//! Small dense linear algebra used by the estimators.
//!
//! Problem sizes here are tiny (p rarely above a few dozen), so a
//! partial-pivot LU factorization is plenty and keeps the dependency
//! surface small.

use crate::error::{Error, Result};
use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

/// Solves `a x = b` for square `a` by LU with partial pivoting.
///
/// Returns a degenerate-input error when a pivot falls below
/// `1e-12 * max_abs_entry`, which covers exactly singular and numerically
/// rank-deficient systems at the scales this crate works at.
pub fn solve(a: &ArrayView2<f64>, b: &ArrayView1<f64>) -> Result<Array1<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: a.ncols(),
        });
    }
    if b.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: b.len(),
        });
    }
    let mut lu = a.to_owned();
    let mut x = b.to_owned();
    let scale = lu.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !scale.is_finite() {
        return Err(Error::NonFinite("matrix entries".into()));
    }
    let pivot_tol = 1e-12 * scale.max(1e-300);

    for k in 0..n {
        let mut piv = k;
        let mut piv_val = lu[[k, k]].abs();
        for r in (k + 1)..n {
            let v = lu[[r, k]].abs();
            if v > piv_val {
                piv = r;
                piv_val = v;
            }
        }
        if piv_val <= pivot_tol {
            return Err(Error::Degenerate(format!(
                "singular matrix (pivot {piv_val:.3e} at column {k})"
            )));
        }
        if piv != k {
            for c in 0..n {
                lu.swap([k, c], [piv, c]);
            }
            x.swap(k, piv);
        }
        for r in (k + 1)..n {
            let f = lu[[r, k]] / lu[[k, k]];
            lu[[r, k]] = f;
            for c in (k + 1)..n {
                lu[[r, c]] -= f * lu[[k, c]];
            }
            x[r] -= f * x[k];
        }
    }
    for k in (0..n).rev() {
        let mut s = x[k];
        for c in (k + 1)..n {
            s -= lu[[k, c]] * x[c];
        }
        x[k] = s / lu[[k, k]];
    }
    Ok(x)
}

/// Ordinary least squares coefficients for `x beta ~ y` via normal
/// equations. `x` must have full column rank.
pub fn least_squares(x: &ArrayView2<f64>, y: &ArrayView1<f64>) -> Result<Array1<f64>> {
    weighted_least_squares(x, y, None)
}

/// Weighted least squares: minimizes `sum_i w_i (y_i - x_i beta)^2`.
pub fn weighted_least_squares(
    x: &ArrayView2<f64>,
    y: &ArrayView1<f64>,
    w: Option<&ArrayView1<f64>>,
) -> Result<Array1<f64>> {
    let n = x.nrows();
    let p = x.ncols();
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: y.len(),
        });
    }
    if n < p {
        return Err(Error::InsufficientData(format!(
            "{n} rows for {p} regression coefficients"
        )));
    }
    let mut xtx = Array2::<f64>::zeros((p, p));
    let mut xty = Array1::<f64>::zeros(p);
    for i in 0..n {
        let wi = w.map_or(1.0, |w| w[i]);
        for a in 0..p {
            let xa = x[[i, a]];
            xty[a] += wi * xa * y[i];
            for b in a..p {
                xtx[[a, b]] += wi * xa * x[[i, b]];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            xtx[[a, b]] = xtx[[b, a]];
        }
    }
    solve(&xtx.view(), &xty.view())
}

/// Inverse of a small symmetric positive definite matrix, by solving
/// against the identity. Used for Mahalanobis distances.
pub fn inverse_spd(a: &ArrayView2<f64>) -> Result<Array2<f64>> {
    let n = a.nrows();
    let mut inv = Array2::<f64>::zeros((n, n));
    for j in 0..n {
        let mut e = Array1::<f64>::zeros(n);
        e[j] = 1.0;
        let col = solve(a, &e.view())?;
        inv.column_mut(j).assign(&col);
    }
    Ok(inv)
}

/// Sample mean.
pub fn mean(v: &ArrayView1<f64>) -> f64 {
    v.sum() / v.len() as f64
}

/// Sample standard deviation with the n-1 denominator.
pub fn sample_sd(v: &ArrayView1<f64>) -> f64 {
    let n = v.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(v);
    let ss: f64 = v.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (n as f64 - 1.0)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::array;

    #[test]
    fn solve_known_system() {
        let a = array![[2.0, 1.0], [1.0, 3.0]];
        let b = array![5.0, 10.0];
        let x = solve(&a.view(), &b.view()).unwrap();
        assert_relative_eq!(x[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(x[1], 3.0, epsilon = 1e-12);
    }

    #[test]
    fn solve_rejects_singular() {
        let a = array![[1.0, 2.0], [2.0, 4.0]];
        let b = array![1.0, 2.0];
        assert!(matches!(
            solve(&a.view(), &b.view()),
            Err(crate::error::Error::Degenerate(_))
        ));
    }

    #[test]
    fn least_squares_recovers_exact_line() {
        // y = 3 + 2x fitted without noise.
        let x = array![[1.0, 0.0], [1.0, 1.0], [1.0, 2.0], [1.0, 3.0]];
        let y = array![3.0, 5.0, 7.0, 9.0];
        let beta = least_squares(&x.view(), &y.view()).unwrap();
        assert_relative_eq!(beta[0], 3.0, epsilon = 1e-10);
        assert_relative_eq!(beta[1], 2.0, epsilon = 1e-10);
    }

    #[test]
    fn weighted_least_squares_matches_replication() {
        // Weight 2 on a row must equal duplicating that row.
        let x = array![[1.0, 0.5], [1.0, 1.5], [1.0, 2.5]];
        let y = array![1.0, 2.2, 2.9];
        let w = array![2.0, 1.0, 1.0];
        let bw = weighted_least_squares(&x.view(), &y.view(), Some(&w.view())).unwrap();

        let xr = array![[1.0, 0.5], [1.0, 0.5], [1.0, 1.5], [1.0, 2.5]];
        let yr = array![1.0, 1.0, 2.2, 2.9];
        let br = least_squares(&xr.view(), &yr.view()).unwrap();
        assert_relative_eq!(bw[0], br[0], epsilon = 1e-10);
        assert_relative_eq!(bw[1], br[1], epsilon = 1e-10);
    }

    #[test]
    fn inverse_spd_roundtrip() {
        let a = array![[4.0, 1.0], [1.0, 3.0]];
        let inv = inverse_spd(&a.view()).unwrap();
        let prod = a.dot(&inv);
        assert_relative_eq!(prod[[0, 0]], 1.0, epsilon = 1e-12);
        assert_relative_eq!(prod[[0, 1]], 0.0, epsilon = 1e-12);
        assert_relative_eq!(prod[[1, 0]], 0.0, epsilon = 1e-12);
        assert_relative_eq!(prod[[1, 1]], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn sd_uses_n_minus_one() {
        let v = array![1.0, 2.0, 3.0];
        assert_relative_eq!(sample_sd(&v.view()), 1.0, epsilon = 1e-14);
    }
}
