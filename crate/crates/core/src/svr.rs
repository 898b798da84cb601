//! Linear epsilon-insensitive support vector regression, the hard-tube
//! feasibility test, and the continuous-treatment margin.
//!
//! The SVR dual is solved as a 2n-variable SMO (one alpha+ and one alpha-
//! per subject) with maximum-violating-pair selection, mirroring the
//! binary solver in [`crate::svm`]. Decision values use the regression
//! convention f(z) = w . z + b, so residual_i = T_i - f(Z_i).
//!
//! `hard_tube_exists` answers the exact feasibility question "is there an
//! affine function within epsilon of every dose?" via a Chebyshev
//! (min-max residual) linear program; when the answer is no, the LP duals
//! are converted into a weight-pair witness (u, v) that certifies
//! infeasibility by exhibiting matching covariate mixtures whose doses
//! differ by more than 2 epsilon.

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::simplex::{solve_standard_form, LpOutcome};
use crate::svm::MarginReport;
use ndarray::{Array1, Array2, Axis};
use serde::Serialize;

/// Default tube half-width.
pub const DEFAULT_EPSILON: f64 = 0.1;
/// Default box constraint for the SVR dual.
pub const DEFAULT_REG_C: f64 = 1.0;
/// Default KKT tolerance.
pub const DEFAULT_SVR_TOL: f64 = 1e-6;
/// Slack for the exists verdict: a tube exists when t* <= epsilon + this.
pub const TUBE_BOUNDARY_TOL: f64 = 1e-9;

/// Hyperparameters for [`fit_linear_svr`].
#[derive(Debug, Clone, Serialize)]
pub struct SvrParams {
    pub epsilon: f64,
    pub reg_c: f64,
    pub tol: f64,
    /// Iteration cap; `None` uses 2000 * n + 100_000.
    pub max_passes: Option<usize>,
}

impl Default for SvrParams {
    fn default() -> Self {
        SvrParams {
            epsilon: DEFAULT_EPSILON,
            reg_c: DEFAULT_REG_C,
            tol: DEFAULT_SVR_TOL,
            max_passes: None,
        }
    }
}

/// Fitted linear SVR model for the dose given covariates.
#[derive(Debug, Clone, Serialize)]
pub struct SvrModel {
    pub w: Vec<f64>,
    pub b: f64,
    pub epsilon: f64,
    pub reg_c: f64,
    /// Upper-side dual coefficients; complementary to `alpha_minus`
    /// (elementwise min is exactly 0).
    pub alpha_plus: Vec<f64>,
    pub alpha_minus: Vec<f64>,
    /// residual_i = T_i - (w . Z_i + b).
    pub residuals: Vec<f64>,
    /// Dual objective (maximization form) at the solution.
    pub objective: f64,
    pub iterations: usize,
    pub kkt_residual: f64,
}

impl SvrModel {
    /// f(z) = w . z + b.
    pub fn predict(&self, z: &[f64]) -> Result<f64> {
        if z.len() != self.w.len() {
            return Err(Error::DimensionMismatch {
                expected: self.w.len(),
                actual: z.len(),
            });
        }
        Ok(self
            .w
            .iter()
            .zip(z.iter())
            .map(|(wi, zi)| wi * zi)
            .sum::<f64>()
            + self.b)
    }
}

fn validate_xy(z: &Array2<f64>, t: &Array1<f64>) -> Result<()> {
    if z.nrows() != t.len() {
        return Err(Error::DimensionMismatch {
            expected: z.nrows(),
            actual: t.len(),
        });
    }
    if z.nrows() < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 rows, found {}",
            z.nrows()
        )));
    }
    if z.iter().any(|v| !v.is_finite()) || t.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("svr training data".into()));
    }
    Ok(())
}

/// Fits the SVR on explicit arrays: rows of `z` are covariates, `t` is the
/// dose to regress.
pub fn fit_linear_svr_xy(
    z: &Array2<f64>,
    t: &Array1<f64>,
    params: &SvrParams,
) -> Result<SvrModel> {
    validate_xy(z, t)?;
    if !(params.epsilon >= 0.0) || !params.epsilon.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be non-negative and finite, got {}",
            params.epsilon
        )));
    }
    if !(params.reg_c > 0.0) || !params.reg_c.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "reg_c must be positive and finite, got {}",
            params.reg_c
        )));
    }
    if !(params.tol > 0.0) || !params.tol.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "tol must be positive and finite, got {}",
            params.tol
        )));
    }

    let n = z.nrows();
    let p = z.ncols();
    let cost = params.reg_c;
    let eps = params.epsilon;
    // Variable k < n is alpha+_k (label +1, linear term eps - T_k);
    // variable k >= n is alpha-_{k-n} (label -1, linear term eps + T).
    let idx = |k: usize| if k < n { k } else { k - n };
    let lab = |k: usize| if k < n { 1.0 } else { -1.0 };
    let lin = |k: usize| {
        if k < n {
            eps - t[k]
        } else {
            eps + t[k - n]
        }
    };

    let mut beta = Array1::<f64>::zeros(2 * n);
    let mut w = Array1::<f64>::zeros(p);
    let max_iter = params.max_passes.unwrap_or(2000 * n + 100_000);
    let mut iterations = 0usize;
    let mut residual = f64::INFINITY;
    let mut converged = false;

    for iter in 0..max_iter {
        iterations = iter;
        let scores = z.dot(&w);
        let mut i_up: Option<usize> = None;
        let mut m_up = f64::NEG_INFINITY;
        let mut j_low: Option<usize> = None;
        let mut m_low = f64::INFINITY;
        for k in 0..2 * n {
            let y = lab(k);
            let g = y * scores[idx(k)] + lin(k);
            let v = -y * g;
            let in_up = (y > 0.0 && beta[k] < cost) || (y < 0.0 && beta[k] > 0.0);
            let in_low = (y > 0.0 && beta[k] > 0.0) || (y < 0.0 && beta[k] < cost);
            if in_up && v > m_up {
                m_up = v;
                i_up = Some(k);
            }
            if in_low && v < m_low {
                m_low = v;
                j_low = Some(k);
            }
        }
        let (Some(i), Some(j)) = (i_up, j_low) else {
            residual = 0.0;
            converged = true;
            break;
        };
        residual = m_up - m_low;
        if residual <= params.tol {
            converged = true;
            break;
        }

        let zi = z.row(idx(i));
        let zj = z.row(idx(j));
        let kii = zi.dot(&zi);
        let kjj = zj.dot(&zj);
        let kij = zi.dot(&zj);
        let quad = (kii + kjj - 2.0 * kij).max(1e-12);
        let yi = lab(i);
        let yj = lab(j);
        let gi = yi * scores[idx(i)] + lin(i);
        let gj = yj * scores[idx(j)] + lin(j);
        let old_i = beta[i];
        let old_j = beta[j];

        if yi != yj {
            let delta = (-gi - gj) / quad;
            let diff = old_i - old_j;
            let mut bi = old_i + delta;
            let mut bj = old_j + delta;
            if diff > 0.0 {
                if bj < 0.0 {
                    bj = 0.0;
                    bi = diff;
                }
            } else if bi < 0.0 {
                bi = 0.0;
                bj = -diff;
            }
            if diff > 0.0 {
                if bi > cost {
                    bi = cost;
                    bj = cost - diff;
                }
            } else if bj > cost {
                bj = cost;
                bi = cost + diff;
            }
            beta[i] = bi;
            beta[j] = bj;
        } else {
            let delta = (gi - gj) / quad;
            let sum = old_i + old_j;
            let mut bi = old_i - delta;
            let mut bj = old_j + delta;
            if sum > cost {
                if bi > cost {
                    bi = cost;
                    bj = sum - cost;
                }
            } else if bj < 0.0 {
                bj = 0.0;
                bi = sum;
            }
            if sum > cost {
                if bj > cost {
                    bj = cost;
                    bi = sum - cost;
                }
            } else if bi < 0.0 {
                bi = 0.0;
                bj = sum;
            }
            beta[i] = bi;
            beta[j] = bj;
        }

        w.scaled_add((beta[i] - old_i) * yi, &zi);
        w.scaled_add((beta[j] - old_j) * yj, &zj);
    }

    if !converged {
        return Err(Error::Convergence {
            solver: "svr smo",
            residual,
            iterations,
        });
    }

    // Complementarity cleanup: shifting (alpha+, alpha-) down by their
    // minimum leaves the net coefficient, hence w and every gradient,
    // unchanged, and restores min(alpha+, alpha-) = 0 exactly.
    for k in 0..n {
        let m = beta[k].min(beta[k + n]);
        if m > 0.0 {
            beta[k] -= m;
            beta[k + n] -= m;
        }
    }

    // Fresh w from the cleaned duals.
    w.fill(0.0);
    for k in 0..n {
        let net = beta[k] - beta[k + n];
        if net != 0.0 {
            w.scaled_add(net, &z.row(k));
        }
    }
    let scores = z.dot(&w);

    // Offset: for interior variables -y_k G_k equals b exactly; otherwise
    // take the midpoint of the KKT bounds.
    let mut sum_free = 0.0;
    let mut n_free = 0usize;
    let mut up_max = f64::NEG_INFINITY;
    let mut low_min = f64::INFINITY;
    for k in 0..2 * n {
        let y = lab(k);
        let g = y * scores[idx(k)] + lin(k);
        let v = -y * g;
        if beta[k] > 0.0 && beta[k] < cost {
            sum_free += v;
            n_free += 1;
        }
        let in_up = (y > 0.0 && beta[k] < cost) || (y < 0.0 && beta[k] > 0.0);
        let in_low = (y > 0.0 && beta[k] > 0.0) || (y < 0.0 && beta[k] < cost);
        if in_up {
            up_max = up_max.max(v);
        }
        if in_low {
            low_min = low_min.min(v);
        }
    }
    let b = if n_free > 0 {
        sum_free / n_free as f64
    } else {
        0.5 * (up_max.max(-1e300) + low_min.min(1e300))
    };

    let residuals: Vec<f64> = (0..n).map(|k| t[k] - (scores[k] + b)).collect();
    let alpha_plus: Vec<f64> = beta.iter().take(n).copied().collect();
    let alpha_minus: Vec<f64> = beta.iter().skip(n).copied().collect();
    let sum_all: f64 = beta.sum();
    let net_t: f64 = (0..n).map(|k| t[k] * (alpha_plus[k] - alpha_minus[k])).sum();
    let objective = -0.5 * w.dot(&w) - eps * sum_all + net_t;

    Ok(SvrModel {
        w: w.to_vec(),
        b,
        epsilon: eps,
        reg_c: cost,
        alpha_plus,
        alpha_minus,
        residuals,
        objective,
        iterations,
        kkt_residual: residual,
    })
}

/// Fits the SVR of the continuous treatment on the covariates.
pub fn fit_linear_svr(d: &Dataset, params: &SvrParams) -> Result<SvrModel> {
    let t = d.continuous_treatment()?;
    fit_linear_svr_xy(d.covariates(), t, params)
}

/// Continuous margin subpopulation: tube violators, i.e. subjects with
/// |residual_i| > epsilon + margin_tol (strict).
pub fn continuous_margin_set(model: &SvrModel, margin_tol: f64) -> Result<MarginReport> {
    if !(margin_tol >= 0.0) || !margin_tol.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "margin_tol must be non-negative, got {margin_tol}"
        )));
    }
    let threshold = model.epsilon + margin_tol;
    let kept: Vec<usize> = model
        .residuals
        .iter()
        .enumerate()
        .filter(|(_, r)| r.abs() > threshold)
        .map(|(i, _)| i)
        .collect();
    Ok(MarginReport {
        kept,
        rule: format!("|T_i - (w.z_i + b)| > {:e} + {margin_tol:e}", model.epsilon),
        scores: model.residuals.clone(),
        margin_tol,
    })
}

/// The two lifted point sets whose hull separability is equivalent to
/// hard-tube feasibility: rows (Z_i, T_i + eps) and (Z_i, T_i - eps).
#[derive(Debug, Clone)]
pub struct LiftedPair {
    pub upper: Array2<f64>,
    pub lower: Array2<f64>,
}

/// Builds the lifted datasets by direct construction; the last columns of
/// `upper` and `lower` differ by 2 eps up to one rounding ulp per entry.
pub fn lift_datasets(z: &Array2<f64>, t: &Array1<f64>, epsilon: f64) -> Result<LiftedPair> {
    if z.nrows() != t.len() {
        return Err(Error::DimensionMismatch {
            expected: z.nrows(),
            actual: t.len(),
        });
    }
    if !(epsilon >= 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be non-negative and finite, got {epsilon}"
        )));
    }
    let n = z.nrows();
    let p = z.ncols();
    let mut upper = Array2::<f64>::zeros((n, p + 1));
    let mut lower = Array2::<f64>::zeros((n, p + 1));
    for i in 0..n {
        for j in 0..p {
            upper[[i, j]] = z[[i, j]];
            lower[[i, j]] = z[[i, j]];
        }
        upper[[i, p]] = t[i] + epsilon;
        lower[[i, p]] = t[i] - epsilon;
    }
    Ok(LiftedPair { upper, lower })
}

/// Outcome of the exact hard-tube feasibility test.
#[derive(Debug, Clone, Serialize)]
pub struct TubeCertificate {
    pub exists: bool,
    /// Chebyshev optimum: the smallest achievable max |residual|.
    pub width: f64,
    /// Tube parameters when a tube exists.
    pub w: Option<Vec<f64>>,
    pub b: Option<f64>,
    /// Infeasibility witness when no tube exists: non-negative weights
    /// with sum(u) = sum(v) = 1, Z'u = Z'v, and T'(v - u) > 2 eps.
    pub witness_u: Option<Vec<f64>>,
    pub witness_v: Option<Vec<f64>>,
}

/// Decides whether some affine dose model stays within `epsilon` of every
/// observation: exists iff min_w,b max_i |T_i - w.Z_i - b| <= epsilon
/// (plus [`TUBE_BOUNDARY_TOL`]).
pub fn hard_tube_exists_xy(
    z: &Array2<f64>,
    t: &Array1<f64>,
    epsilon: f64,
) -> Result<TubeCertificate> {
    validate_xy(z, t)?;
    if !(epsilon >= 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be non-negative and finite, got {epsilon}"
        )));
    }
    let n = z.nrows();
    let p = z.ncols();
    // Standard form variables: w+ (p), w- (p), b+, b-, tvar, s1 (n), s2 (n).
    // Row i:      w.z_i + b + tvar - s1_i = T_i   (tvar >= +residual)
    // Row n + i:  w.z_i + b - tvar + s2_i = T_i   (tvar >= -residual)
    let ncols = 2 * p + 3 + 2 * n;
    let col_wp = 0;
    let col_wm = p;
    let col_bp = 2 * p;
    let col_bm = 2 * p + 1;
    let col_t = 2 * p + 2;
    let col_s1 = 2 * p + 3;
    let col_s2 = 2 * p + 3 + n;
    let mut a = Array2::<f64>::zeros((2 * n, ncols));
    let mut rhs = vec![0.0f64; 2 * n];
    for i in 0..n {
        for j in 0..p {
            a[[i, col_wp + j]] = z[[i, j]];
            a[[i, col_wm + j]] = -z[[i, j]];
            a[[n + i, col_wp + j]] = z[[i, j]];
            a[[n + i, col_wm + j]] = -z[[i, j]];
        }
        a[[i, col_bp]] = 1.0;
        a[[i, col_bm]] = -1.0;
        a[[n + i, col_bp]] = 1.0;
        a[[n + i, col_bm]] = -1.0;
        a[[i, col_t]] = 1.0;
        a[[n + i, col_t]] = -1.0;
        a[[i, col_s1 + i]] = -1.0;
        a[[n + i, col_s2 + i]] = 1.0;
        rhs[i] = t[i];
        rhs[n + i] = t[i];
    }
    let mut c = vec![0.0f64; ncols];
    c[col_t] = 1.0;

    let sol = match solve_standard_form(&a, &rhs, &c)? {
        LpOutcome::Optimal(s) => s,
        other => {
            return Err(Error::Degenerate(format!(
                "Chebyshev LP must be solvable, simplex returned {other:?}"
            )))
        }
    };
    let width = sol.objective;
    let exists = width <= epsilon + TUBE_BOUNDARY_TOL;
    if exists {
        let w: Vec<f64> = (0..p)
            .map(|j| sol.x[col_wp + j] - sol.x[col_wm + j])
            .collect();
        let b = sol.x[col_bp] - sol.x[col_bm];
        Ok(TubeCertificate {
            exists,
            width,
            w: Some(w),
            b: Some(b),
            witness_u: None,
            witness_v: None,
        })
    } else {
        // Dual rows 0..n (slack -1) give y1 >= 0, rows n..2n give y2 <= 0.
        // Scaling (2 y1, -2 y2) yields weights summing to 1 each with
        // matching covariate mixtures and dose gap 2 * width > 2 epsilon.
        let v: Vec<f64> = (0..n).map(|i| (2.0 * sol.duals[i]).max(0.0)).collect();
        let u: Vec<f64> = (0..n).map(|i| (-2.0 * sol.duals[n + i]).max(0.0)).collect();
        Ok(TubeCertificate {
            exists,
            width,
            w: None,
            b: None,
            witness_u: Some(u),
            witness_v: Some(v),
        })
    }
}

/// Dataset-level wrapper of [`hard_tube_exists_xy`] for continuous
/// treatments.
pub fn hard_tube_exists(d: &Dataset, epsilon: f64) -> Result<TubeCertificate> {
    let t = d.continuous_treatment()?;
    hard_tube_exists_xy(d.covariates(), t, epsilon)
}

/// Removes rows whose index is not in `rows` from both lifted sets.
pub fn select_lifted(pair: &LiftedPair, rows: &[usize]) -> LiftedPair {
    LiftedPair {
        upper: pair.upper.select(Axis(0), rows),
        lower: pair.lower.select(Axis(0), rows),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::array;

    fn line_data() -> (Array2<f64>, Array1<f64>) {
        // T = 2 z + 1 exactly.
        let z = array![[-1.0], [-0.5], [0.0], [0.5], [1.0], [1.5]];
        let t = array![-1.0, 0.0, 1.0, 2.0, 3.0, 4.0];
        (z, t)
    }

    #[test]
    fn svr_recovers_linear_relation() {
        let (z, t) = line_data();
        let params = SvrParams {
            epsilon: 0.1,
            reg_c: 100.0,
            ..Default::default()
        };
        let m = fit_linear_svr_xy(&z, &t, &params).unwrap();
        assert!((m.w[0] - 2.0).abs() < 0.15, "w={:?}", m.w);
        assert!((m.b - 1.0).abs() < 0.15, "b={}", m.b);
        for r in &m.residuals {
            assert!(r.abs() <= 0.1 + 1e-6, "residual {r}");
        }
    }

    #[test]
    fn svr_dual_invariants() {
        let z = array![[0.2], [1.1], [-0.7], [0.4], [2.0], [-1.5]];
        let t = array![0.5, 2.0, -1.0, 1.2, 3.7, -2.9];
        let params = SvrParams {
            epsilon: 0.3,
            reg_c: 2.0,
            ..Default::default()
        };
        let m = fit_linear_svr_xy(&z, &t, &params).unwrap();
        let mut balance = 0.0;
        for k in 0..z.nrows() {
            let ap = m.alpha_plus[k];
            let am = m.alpha_minus[k];
            assert!((0.0..=2.0 + 1e-12).contains(&ap));
            assert!((0.0..=2.0 + 1e-12).contains(&am));
            // Exact complementarity after cleanup.
            assert_eq!(ap.min(am), 0.0);
            balance += ap - am;
        }
        assert!(balance.abs() < 1e-8, "balance {balance}");
        // w reproduces from the net duals.
        let mut w = 0.0;
        for k in 0..z.nrows() {
            w += (m.alpha_plus[k] - m.alpha_minus[k]) * z[[k, 0]];
        }
        assert_relative_eq!(w, m.w[0], epsilon = 1e-10);
        // Strict insiders carry no dual weight.
        for k in 0..z.nrows() {
            if m.residuals[k].abs() < params.epsilon - 1e-8 {
                assert_eq!(m.alpha_plus[k], 0.0);
                assert_eq!(m.alpha_minus[k], 0.0);
            }
        }
    }

    #[test]
    fn continuous_margin_keeps_tube_violators() {
        let (z, t) = line_data();
        let mut t2 = t.clone();
        t2[2] += 1.0; // push one subject far off the line
        let params = SvrParams {
            epsilon: 0.2,
            reg_c: 50.0,
            ..Default::default()
        };
        let m = fit_linear_svr_xy(&z, &t2, &params).unwrap();
        let rep = continuous_margin_set(&m, 1e-8).unwrap();
        assert!(rep.kept.contains(&2), "kept {:?}", rep.kept);
        assert!(rep.rule.contains('>'));
    }

    #[test]
    fn tube_exists_on_exact_line() {
        let (z, t) = line_data();
        let cert = hard_tube_exists_xy(&z, &t, 0.05).unwrap();
        assert!(cert.exists);
        assert!(cert.width < 1e-9, "width {}", cert.width);
        let w = cert.w.unwrap();
        let b = cert.b.unwrap();
        for i in 0..z.nrows() {
            let r = t[i] - (w[0] * z[[i, 0]] + b);
            assert!(r.abs() <= 0.05 + 1e-7);
        }
    }

    #[test]
    fn tube_witness_certifies_infeasibility() {
        // Same covariate value, doses 1 apart: best width 0.5.
        let z = array![[1.0], [1.0], [0.0]];
        let t = array![0.0, 1.0, 0.5];
        let cert = hard_tube_exists_xy(&z, &t, 0.3).unwrap();
        assert!(!cert.exists);
        assert_relative_eq!(cert.width, 0.5, epsilon = 1e-8);
        let u = cert.witness_u.unwrap();
        let v = cert.witness_v.unwrap();
        let su: f64 = u.iter().sum();
        let sv: f64 = v.iter().sum();
        assert_relative_eq!(su, 1.0, epsilon = 1e-6);
        assert_relative_eq!(sv, 1.0, epsilon = 1e-6);
        let zu: f64 = (0..3).map(|i| u[i] * z[[i, 0]]).sum();
        let zv: f64 = (0..3).map(|i| v[i] * z[[i, 0]]).sum();
        assert_relative_eq!(zu, zv, epsilon = 1e-6);
        let gap: f64 = (0..3).map(|i| t[i] * (v[i] - u[i])).sum();
        assert!(gap > 2.0 * 0.3, "gap {gap}");
        assert_relative_eq!(gap, 2.0 * cert.width, epsilon = 1e-6);
    }

    #[test]
    fn lifted_pair_gap_is_two_epsilon() {
        let (z, t) = line_data();
        let eps = 0.25;
        let pair = lift_datasets(&z, &t, eps).unwrap();
        for i in 0..z.nrows() {
            let gap = pair.upper[[i, 1]] - pair.lower[[i, 1]];
            assert_relative_eq!(gap, 2.0 * eps, epsilon = 1e-15);
            assert_eq!(pair.upper[[i, 0]], z[[i, 0]]);
        }
    }

    #[test]
    fn tube_matches_lifted_hull_separability() {
        use crate::geometry::{default_overlap_delta, hull_closest_pair};
        let z = array![[0.0], [0.5], [1.0], [1.5]];
        let t = array![0.3, 0.1, 0.5, 0.4];
        // Chebyshev width of this cloud around its best line.
        let base = hard_tube_exists_xy(&z, &t, 0.0).unwrap().width;
        for (eps, expect) in [(base + 0.05, true), ((base - 0.05).max(0.01), false)] {
            let cert = hard_tube_exists_xy(&z, &t, eps).unwrap();
            assert_eq!(cert.exists, expect, "eps {eps}");
            let lifted = lift_datasets(&z, &t, eps).unwrap();
            let sol = hull_closest_pair(&lifted.upper, &lifted.lower, 1e-12).unwrap();
            let delta = default_overlap_delta(&lifted.upper, &lifted.lower);
            assert_eq!(sol.distance > delta, expect, "eps {eps}");
        }
    }
}
