//! Linear soft-margin SVM trained in the dual, and the margin
//! subpopulation it defines.
//!
//! The dual is solved by sequential minimal optimization with
//! maximum-violating-pair working set selection: stop when
//! m(alpha) - M(alpha) <= kkt_tol, where m and M are the extreme KKT
//! multiplier bounds over the up/down index sets. The kernel is always
//! linear, so the primal normal w = sum_i alpha_i T_i Z_i is maintained
//! explicitly and each iteration costs O(n p).
//!
//! Decision values use the convention f(z) = w . z - b. A subject is in
//! the margin when T_i * f(Z_i) < 1 - margin_tol (strict), i.e. the kept
//! set excludes subjects exactly on the margin boundary.

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use ndarray::{Array1, Array2};
use serde::Serialize;

/// Default box constraint.
pub const DEFAULT_COST: f64 = 1.0;
/// Default KKT violation tolerance for SMO.
pub const DEFAULT_KKT_TOL: f64 = 1e-6;
/// Default slack for margin membership.
pub const DEFAULT_MARGIN_TOL: f64 = 1e-8;

/// Hyperparameters for [`fit_linear_svm`].
#[derive(Debug, Clone, Serialize)]
pub struct SvmParams {
    pub cost: f64,
    pub kkt_tol: f64,
    /// Iteration cap; `None` uses 2000 * n + 100_000.
    pub max_passes: Option<usize>,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            cost: DEFAULT_COST,
            kkt_tol: DEFAULT_KKT_TOL,
            max_passes: None,
        }
    }
}

/// Fitted linear SVM.
#[derive(Debug, Clone, Serialize)]
pub struct SvmModel {
    pub w: Vec<f64>,
    pub b: f64,
    pub cost: f64,
    /// Dual coefficients alpha_i in [0, cost].
    pub dual_coefs: Vec<f64>,
    /// Indices with alpha_i > 0.
    pub support_indices: Vec<usize>,
    /// Dual objective sum(alpha) - 0.5 ||w||^2 at the solution.
    pub objective: f64,
    pub iterations: usize,
    /// m(alpha) - M(alpha) at exit.
    pub kkt_residual: f64,
}

impl SvmModel {
    /// f(z) = w . z - b.
    pub fn decision_value(&self, z: &[f64]) -> Result<f64> {
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
            - self.b)
    }

    /// Decision values for every row of `z`.
    pub fn decision_values(&self, z: &Array2<f64>) -> Result<Array1<f64>> {
        if z.ncols() != self.w.len() {
            return Err(Error::DimensionMismatch {
                expected: self.w.len(),
                actual: z.ncols(),
            });
        }
        let w = Array1::from(self.w.clone());
        Ok(z.dot(&w) - self.b)
    }
}

pub(crate) struct SmoSolution {
    pub alphas: Array1<f64>,
    pub w: Array1<f64>,
    pub b: f64,
    pub iterations: usize,
    pub kkt_residual: f64,
}

/// SMO with maximum-violating-pair selection on a -1/+1 labeled problem.
pub(crate) fn smo_binary(
    z: &Array2<f64>,
    t: &Array1<f64>,
    cost: f64,
    kkt_tol: f64,
    max_iter: usize,
) -> Result<SmoSolution> {
    let n = z.nrows();
    let p = z.ncols();
    let mut alphas = Array1::<f64>::zeros(n);
    let mut w = Array1::<f64>::zeros(p);
    let mut iterations = 0usize;
    let mut residual = f64::INFINITY;
    let mut converged = false;

    // Gram diagonal, reused by the second-order partner search below.
    let diag: Vec<f64> = (0..n).map(|k| z.row(k).dot(&z.row(k))).collect();

    for iter in 0..max_iter {
        iterations = iter;
        let scores = z.dot(&w);
        // Gradient of 0.5 a'Qa - e'a: G_i = T_i (w . z_i) - 1.
        // Working pair: i maximizes -T G over I_up, j minimizes over I_low.
        let mut i_up: Option<usize> = None;
        let mut m_up = f64::NEG_INFINITY;
        let mut j_low: Option<usize> = None;
        let mut m_low = f64::INFINITY;
        for k in 0..n {
            let g = t[k] * scores[k] - 1.0;
            let v = -t[k] * g;
            let in_up = (t[k] > 0.0 && alphas[k] < cost) || (t[k] < 0.0 && alphas[k] > 0.0);
            let in_low = (t[k] > 0.0 && alphas[k] > 0.0) || (t[k] < 0.0 && alphas[k] < cost);
            if in_up && v > m_up {
                m_up = v;
                i_up = Some(k);
            }
            if in_low && v < m_low {
                m_low = v;
                j_low = Some(k);
            }
        }
        let (Some(i), Some(j_first)) = (i_up, j_low) else {
            // One arm is fully bounded; the dual is at a vertex.
            residual = 0.0;
            converged = true;
            break;
        };
        residual = m_up - m_low;
        if residual <= kkt_tol {
            converged = true;
            break;
        }

        // Partner choice is second order: among I_low entries below m_up,
        // maximize the step gain (m_up - v)^2 / quad along the constraint
        // line. Pure maximum violation stalls on duplicated rows, where
        // the worst pair has near-zero curvature and each step barely
        // moves; the residual above still uses m_low, so the KKT
        // certificate is unchanged.
        let zi = z.row(i);
        let mut j = j_first;
        let mut best_gain = f64::NEG_INFINITY;
        for k in 0..n {
            let in_low = (t[k] > 0.0 && alphas[k] > 0.0) || (t[k] < 0.0 && alphas[k] < cost);
            if !in_low {
                continue;
            }
            let g = t[k] * scores[k] - 1.0;
            let diff = m_up + t[k] * g;
            if diff <= 0.0 {
                continue;
            }
            let quad = (diag[i] + diag[k] - 2.0 * zi.dot(&z.row(k))).max(1e-12);
            let gain = diff * diff / quad;
            if gain > best_gain {
                best_gain = gain;
                j = k;
            }
        }

        // Analytic two-variable step along the equality constraint.
        let zj = z.row(j);
        let kii = diag[i];
        let kjj = diag[j];
        let kij = zi.dot(&zj);
        let gi = t[i] * scores[i] - 1.0;
        let gj = t[j] * scores[j] - 1.0;
        let old_i = alphas[i];
        let old_j = alphas[j];

        // Curvature along the constraint line is ||z_i - z_j||^2 for both
        // label patterns once the label product is folded in.
        let quad = (kii + kjj - 2.0 * kij).max(1e-12);
        if t[i] != t[j] {
            let delta = (-gi - gj) / quad;
            let diff = old_i - old_j;
            let mut ai = old_i + delta;
            let mut aj = old_j + delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > 0.0 {
                if ai > cost {
                    ai = cost;
                    aj = cost - diff;
                }
            } else if aj > cost {
                aj = cost;
                ai = cost + diff;
            }
            alphas[i] = ai;
            alphas[j] = aj;
        } else {
            let delta = (gi - gj) / quad;
            let sum = old_i + old_j;
            let mut ai = old_i - delta;
            let mut aj = old_j + delta;
            if sum > cost {
                if ai > cost {
                    ai = cost;
                    aj = sum - cost;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > cost {
                if aj > cost {
                    aj = cost;
                    ai = sum - cost;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
            alphas[i] = ai;
            alphas[j] = aj;
        }

        let di = (alphas[i] - old_i) * t[i];
        let dj = (alphas[j] - old_j) * t[j];
        w.scaled_add(di, &zi);
        w.scaled_add(dj, &zj);
    }

    if !converged {
        return Err(Error::Convergence {
            solver: "svm smo",
            residual,
            iterations,
        });
    }

    // Recompute w from the duals to clear incremental drift, then the
    // offset: average T_i G_i over interior support vectors, or the
    // midpoint of the KKT bounds when none are interior.
    w.fill(0.0);
    for k in 0..n {
        if alphas[k] != 0.0 {
            w.scaled_add(alphas[k] * t[k], &z.row(k));
        }
    }
    let scores = z.dot(&w);
    let mut sum_free = 0.0;
    let mut n_free = 0usize;
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    for k in 0..n {
        // Candidate offset so that T_k f(z_k) = 1 holds: b = w.z_k - T_k.
        let cand = scores[k] - t[k];
        if alphas[k] > 0.0 && alphas[k] < cost {
            sum_free += cand;
            n_free += 1;
        } else if (alphas[k] <= 0.0 && t[k] > 0.0) || (alphas[k] >= cost && t[k] < 0.0) {
            // b must not exceed this candidate.
            ub = ub.min(cand);
        } else {
            lb = lb.max(cand);
        }
    }
    let b = if n_free > 0 {
        sum_free / n_free as f64
    } else {
        0.5 * (ub.min(1e300) + lb.max(-1e300))
    };

    Ok(SmoSolution {
        alphas,
        w,
        b,
        iterations,
        kkt_residual: residual,
    })
}

/// Fits a linear soft-margin SVM on a binary-treatment dataset, separating
/// the +1 arm from the -1 arm.
pub fn fit_linear_svm(d: &Dataset, params: &SvmParams) -> Result<SvmModel> {
    let t = d.binary_coded()?.clone();
    if !(params.cost > 0.0) || !params.cost.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "cost must be positive and finite, got {}",
            params.cost
        )));
    }
    if !(params.kkt_tol > 0.0) || !params.kkt_tol.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "kkt_tol must be positive and finite, got {}",
            params.kkt_tol
        )));
    }
    let max_iter = params.max_passes.unwrap_or(2000 * d.n() + 100_000);
    let sol = smo_binary(d.covariates(), &t, params.cost, params.kkt_tol, max_iter)?;
    let support_indices: Vec<usize> = (0..d.n()).filter(|&i| sol.alphas[i] > 0.0).collect();
    let objective = sol.alphas.sum() - 0.5 * sol.w.dot(&sol.w);
    Ok(SvmModel {
        w: sol.w.to_vec(),
        b: sol.b,
        cost: params.cost,
        dual_coefs: sol.alphas.to_vec(),
        support_indices,
        objective,
        iterations: sol.iterations,
        kkt_residual: sol.kkt_residual,
    })
}

/// Subjects selected by a margin rule, with the scores that were
/// thresholded and the rule recorded verbatim.
#[derive(Debug, Clone, Serialize)]
pub struct MarginReport {
    pub kept: Vec<usize>,
    pub rule: String,
    pub scores: Vec<f64>,
    pub margin_tol: f64,
}

/// Binary margin subpopulation: subjects with T_i * f(Z_i) < 1 -
/// margin_tol. Support vectors on the margin boundary are excluded by the
/// strict inequality.
pub fn margin_set(model: &SvmModel, d: &Dataset, margin_tol: f64) -> Result<MarginReport> {
    if !(margin_tol >= 0.0) || !margin_tol.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "margin_tol must be non-negative, got {margin_tol}"
        )));
    }
    let t = d.binary_coded()?;
    let f = model.decision_values(d.covariates())?;
    let scores: Vec<f64> = (0..d.n()).map(|i| t[i] * f[i]).collect();
    let kept: Vec<usize> = (0..d.n())
        .filter(|&i| scores[i] < 1.0 - margin_tol)
        .collect();
    Ok(MarginReport {
        kept,
        rule: format!("T_i*(w.z_i - b) < 1 - {margin_tol:e}"),
        scores,
        margin_tol,
    })
}

/// One pairwise margin inside a meta-margin.
#[derive(Debug, Clone, Serialize)]
pub struct PairMargin {
    /// (lower level, higher level); lower level is coded -1.
    pub levels: (usize, usize),
    pub model: SvmModel,
    /// Kept subjects as indices into the full dataset.
    pub kept: Vec<usize>,
}

/// Union of pairwise margins for a categorical treatment.
#[derive(Debug, Clone, Serialize)]
pub struct MetaMargin {
    pub pairs: Vec<PairMargin>,
    /// Sorted union of all pairwise kept sets.
    pub kept: Vec<usize>,
}

/// Fits one SVM per level pair (lower level coded -1, higher +1) and takes
/// the union of the pairwise margins. Pairs are processed in
/// lexicographic order, so the report is deterministic.
pub fn fit_meta_margin(d: &Dataset, params: &SvmParams, margin_tol: f64) -> Result<MetaMargin> {
    let n_levels = match d.treatment() {
        crate::dataset::TreatmentVector::Categorical { n_levels, .. } => *n_levels,
        other => {
            return Err(Error::Schema(format!(
                "meta-margin requires a categorical treatment, found {:?}",
                other.kind()
            )))
        }
    };
    let mut pairs = Vec::new();
    let mut union: Vec<usize> = Vec::new();
    for a in 0..n_levels {
        for blevel in (a + 1)..n_levels {
            let rows_a = d.level_rows(a)?;
            let rows_b = d.level_rows(blevel)?;
            let mut rows: Vec<usize> = rows_a.iter().chain(rows_b.iter()).copied().collect();
            rows.sort_unstable();
            let z = d.covariates().select(ndarray::Axis(0), &rows);
            let t: Array1<f64> = rows
                .iter()
                .map(|r| if rows_a.contains(r) { -1.0 } else { 1.0 })
                .collect();
            let max_iter = params.max_passes.unwrap_or(2000 * rows.len() + 100_000);
            let sol = smo_binary(&z, &t, params.cost, params.kkt_tol, max_iter)?;
            let support: Vec<usize> = (0..rows.len()).filter(|&i| sol.alphas[i] > 0.0).collect();
            let objective = sol.alphas.sum() - 0.5 * sol.w.dot(&sol.w);
            let model = SvmModel {
                w: sol.w.to_vec(),
                b: sol.b,
                cost: params.cost,
                dual_coefs: sol.alphas.to_vec(),
                support_indices: support,
                objective,
                iterations: sol.iterations,
                kkt_residual: sol.kkt_residual,
            };
            let w = Array1::from(model.w.clone());
            let kept: Vec<usize> = rows
                .iter()
                .enumerate()
                .filter(|(local, _)| {
                    let f = z.row(*local).dot(&w) - model.b;
                    t[*local] * f < 1.0 - margin_tol
                })
                .map(|(_, &orig)| orig)
                .collect();
            union.extend_from_slice(&kept);
            pairs.push(PairMargin {
                levels: (a, blevel),
                model,
                kept,
            });
        }
    }
    union.sort_unstable();
    union.dedup();
    Ok(MetaMargin {
        pairs,
        kept: union,
    })
}

/// KKT diagnostics recomputed from scratch (nothing cached from the fit).
#[derive(Debug, Clone, Serialize)]
pub struct KktReport {
    /// m(alpha) - M(alpha) over the up/down sets.
    pub max_violation: f64,
    pub n_at_zero: usize,
    pub n_interior: usize,
    pub n_at_cost: usize,
}

/// Recomputes the KKT state of a fitted model against its training data.
pub fn kkt_report(model: &SvmModel, d: &Dataset) -> Result<KktReport> {
    let t = d.binary_coded()?;
    let n = d.n();
    if model.dual_coefs.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: model.dual_coefs.len(),
        });
    }
    let cost = model.cost;
    // Rebuild w from the duals rather than trusting the stored vector.
    let p = d.p();
    let mut w = Array1::<f64>::zeros(p);
    for i in 0..n {
        if model.dual_coefs[i] != 0.0 {
            w.scaled_add(model.dual_coefs[i] * t[i], &d.covariates().row(i));
        }
    }
    let scores = d.covariates().dot(&w);
    let bound_tol = 1e-12 * cost.max(1.0);
    let mut m_up = f64::NEG_INFINITY;
    let mut m_low = f64::INFINITY;
    let mut n_at_zero = 0;
    let mut n_interior = 0;
    let mut n_at_cost = 0;
    for k in 0..n {
        let a = model.dual_coefs[k];
        if a <= bound_tol {
            n_at_zero += 1;
        } else if a >= cost - bound_tol {
            n_at_cost += 1;
        } else {
            n_interior += 1;
        }
        let g = t[k] * scores[k] - 1.0;
        let v = -t[k] * g;
        let in_up = (t[k] > 0.0 && a < cost - bound_tol) || (t[k] < 0.0 && a > bound_tol);
        let in_low = (t[k] > 0.0 && a > bound_tol) || (t[k] < 0.0 && a < cost - bound_tol);
        if in_up {
            m_up = m_up.max(v);
        }
        if in_low {
            m_low = m_low.min(v);
        }
    }
    let max_violation = if m_up.is_finite() && m_low.is_finite() {
        (m_up - m_low).max(0.0)
    } else {
        0.0
    };
    Ok(KktReport {
        max_violation,
        n_at_zero,
        n_interior,
        n_at_cost,
    })
}
