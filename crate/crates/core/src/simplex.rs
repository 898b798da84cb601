//! Dense two-phase primal simplex for small standard-form LPs:
//! min c'x subject to A x = b, x >= 0.
//!
//! Bland's rule everywhere (lowest eligible index enters, lowest basic
//! index breaks ratio ties), so the pivot sequence is deterministic and
//! cycling is impossible. Problem sizes in this crate are a few hundred
//! rows, which a dense tableau handles comfortably.
//!
//! Solutions come back with the dual multipliers `y` of the equality
//! constraints (read off the artificial columns), which downstream code
//! turns into infeasibility witnesses.

use crate::error::{Error, Result};
use ndarray::Array2;

/// Optimal primal/dual pair.
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// One multiplier per equality constraint, signed for the original
    /// (un-normalized) rows.
    pub duals: Vec<f64>,
}

#[derive(Debug, Clone)]
pub enum LpOutcome {
    Optimal(LpSolution),
    Infeasible,
    Unbounded,
}

const PIVOT_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-7;

/// Solves min c'x s.t. A x = b, x >= 0.
pub fn solve_standard_form(a: &Array2<f64>, b: &[f64], c: &[f64]) -> Result<LpOutcome> {
    let m = a.nrows();
    let n = a.ncols();
    if b.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            actual: b.len(),
        });
    }
    if c.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: c.len(),
        });
    }
    if a.iter().any(|v| !v.is_finite())
        || b.iter().any(|v| !v.is_finite())
        || c.iter().any(|v| !v.is_finite())
    {
        return Err(Error::NonFinite("LP data".into()));
    }

    // Tableau: m constraint rows + 1 objective row; n structural columns,
    // m artificial columns, rhs. Rows with negative b are negated so the
    // all-artificial basis is feasible; row_sign remembers the flip for
    // the dual readout.
    let cols = n + m + 1;
    let rhs = n + m;
    let mut t = vec![vec![0.0f64; cols]; m + 1];
    let mut row_sign = vec![1.0f64; m];
    for i in 0..m {
        let s = if b[i] < 0.0 { -1.0 } else { 1.0 };
        row_sign[i] = s;
        for j in 0..n {
            t[i][j] = s * a[[i, j]];
        }
        t[i][n + i] = 1.0;
        t[i][rhs] = s * b[i];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();

    // Phase-1 objective: min sum of artificials. Reduced costs for the
    // all-artificial basis.
    for j in 0..n {
        let mut s = 0.0;
        for row in t.iter().take(m) {
            s += row[j];
        }
        t[m][j] = -s;
    }
    let mut s = 0.0;
    for row in t.iter().take(m) {
        s += row[rhs];
    }
    t[m][rhs] = -s;

    let max_pivots = 20_000 + 100 * (m + n);
    let mut pivots = 0usize;

    // Phase 1.
    let bounded = run_phase(&mut t, &mut basis, true, n, m, max_pivots, &mut pivots)?;
    let phase1_obj = -t[m][rhs];
    let b_scale = b.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
    if !bounded && phase1_obj > FEAS_TOL * b_scale {
        // Sum of artificials is bounded below by 0, so a ray with the
        // objective still positive is numeric breakdown, not a real
        // certificate. A ray at objective ~0 is just roundoff in the
        // reduced costs of an already feasible basis; fall through.
        return Err(Error::Convergence {
            solver: "simplex phase 1",
            residual: phase1_obj,
            iterations: pivots,
        });
    }
    if phase1_obj > FEAS_TOL * b_scale {
        return Ok(LpOutcome::Infeasible);
    }

    // Drive remaining artificials out of the basis where possible; a row
    // with no structural pivot is a redundant constraint and stays put
    // with value ~0.
    for i in 0..m {
        if basis[i] >= n && t[i][rhs].abs() <= FEAS_TOL {
            if let Some(col) = (0..n).find(|&j| t[i][j].abs() > PIVOT_TOL) {
                pivot(&mut t, &mut basis, i, col, m);
                pivots += 1;
            }
        }
    }

    // Phase 2: rebuild the objective row for c, artificials barred from
    // entering (their columns stay in the tableau for the dual readout).
    t[m].fill(0.0);
    for (j, &cj) in c.iter().enumerate() {
        t[m][j] = cj;
    }
    for i in 0..m {
        if basis[i] < n && c[basis[i]] != 0.0 {
            let f = c[basis[i]];
            // Rows i and m alias the same tableau; zipping them would
            // need split borrows.
            #[allow(clippy::needless_range_loop)]
            for j in 0..cols {
                t[m][j] -= f * t[i][j];
            }
        }
    }
    let bounded = run_phase(&mut t, &mut basis, false, n, m, max_pivots, &mut pivots)?;
    if !bounded {
        return Ok(LpOutcome::Unbounded);
    }

    let mut x = vec![0.0f64; n];
    for i in 0..m {
        if basis[i] < n {
            x[basis[i]] = t[i][rhs];
        }
    }
    // Reduced cost of artificial i is -y_i under the normalized rows.
    let duals: Vec<f64> = (0..m).map(|i| -t[m][n + i] * row_sign[i]).collect();
    let objective = -t[m][rhs];
    Ok(LpOutcome::Optimal(LpSolution {
        x,
        objective,
        duals,
    }))
}

fn pivot(t: &mut [Vec<f64>], basis: &mut [usize], row: usize, col: usize, m: usize) {
    let cols = t[row].len();
    let piv = t[row][col];
    for v in t[row].iter_mut() {
        *v /= piv;
    }
    for r in 0..=m {
        if r != row && t[r][col] != 0.0 {
            let f = t[r][col];
            // Rows r and row alias the same tableau; zipping them would
            // need split borrows.
            #[allow(clippy::needless_range_loop)]
            for j in 0..cols {
                t[r][j] -= f * t[row][j];
            }
            t[r][col] = 0.0;
        }
    }
    basis[row] = col;
}

/// Pivots until no eligible entering column remains. Artificial columns
/// may enter only when `allow_artificial` (phase 1). Returns false when
/// the entering column exposes an unbounded ray.
fn run_phase(
    t: &mut [Vec<f64>],
    basis: &mut [usize],
    allow_artificial: bool,
    n: usize,
    m: usize,
    max_pivots: usize,
    pivots: &mut usize,
) -> Result<bool> {
    let rhs = n + m;
    loop {
        let limit = if allow_artificial { n + m } else { n };
        let Some(col) = t[m][..limit].iter().position(|&v| v < -PIVOT_TOL) else {
            return Ok(true);
        };
        let mut leave: Option<usize> = None;
        let mut best_ratio = f64::INFINITY;
        for i in 0..m {
            if t[i][col] > PIVOT_TOL {
                let ratio = t[i][rhs] / t[i][col];
                let better = match leave {
                    None => true,
                    Some(l) => {
                        ratio < best_ratio - 1e-12
                            || (ratio <= best_ratio + 1e-12 && basis[i] < basis[l])
                    }
                };
                if better {
                    leave = Some(i);
                    best_ratio = ratio;
                }
            }
        }
        let Some(row) = leave else {
            return Ok(false);
        };
        pivot(t, basis, row, col, m);
        *pivots += 1;
        if *pivots > max_pivots {
            return Err(Error::Convergence {
                solver: "simplex",
                residual: -t[m][rhs],
                iterations: *pivots,
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::array;

    #[test]
    fn simple_optimum_with_duals() {
        // min -x1 - 2 x2 s.t. x1 + x2 + s = 4, x2 + u = 3.
        let a = array![[1.0, 1.0, 1.0, 0.0], [0.0, 1.0, 0.0, 1.0]];
        let b = [4.0, 3.0];
        let c = [-1.0, -2.0, 0.0, 0.0];
        match solve_standard_form(&a, &b, &c).unwrap() {
            LpOutcome::Optimal(sol) => {
                assert_relative_eq!(sol.objective, -7.0, epsilon = 1e-9);
                assert_relative_eq!(sol.x[0], 1.0, epsilon = 1e-9);
                assert_relative_eq!(sol.x[1], 3.0, epsilon = 1e-9);
                // Strong duality: y'b = objective.
                let yb = sol.duals[0] * b[0] + sol.duals[1] * b[1];
                assert_relative_eq!(yb, sol.objective, epsilon = 1e-9);
                // Dual feasibility: y'A <= c columnwise.
                for j in 0..4 {
                    let ya = sol.duals[0] * a[[0, j]] + sol.duals[1] * a[[1, j]];
                    assert!(ya <= c[j] + 1e-9, "column {j}");
                }
            }
            other => panic!("expected optimal, got {other:?}"),
        }
    }

    #[test]
    fn detects_infeasible() {
        // x1 + x2 = -1 has no non-negative solution.
        let a = array![[1.0, 1.0]];
        let b = [-1.0];
        let c = [1.0, 1.0];
        assert!(matches!(
            solve_standard_form(&a, &b, &c).unwrap(),
            LpOutcome::Infeasible
        ));
    }

    #[test]
    fn detects_unbounded() {
        // min -x1 s.t. x1 - x2 = 1.
        let a = array![[1.0, -1.0]];
        let b = [1.0];
        let c = [-1.0, 0.0];
        assert!(matches!(
            solve_standard_form(&a, &b, &c).unwrap(),
            LpOutcome::Unbounded
        ));
    }

    #[test]
    fn handles_negative_rhs_rows() {
        // Same feasible set written with a negated row.
        let a = array![[-1.0, -1.0, -1.0, 0.0], [0.0, 1.0, 0.0, 1.0]];
        let b = [-4.0, 3.0];
        let c = [-1.0, -2.0, 0.0, 0.0];
        match solve_standard_form(&a, &b, &c).unwrap() {
            LpOutcome::Optimal(sol) => {
                assert_relative_eq!(sol.objective, -7.0, epsilon = 1e-9);
                let yb = sol.duals[0] * b[0] + sol.duals[1] * b[1];
                assert_relative_eq!(yb, sol.objective, epsilon = 1e-9);
            }
            other => panic!("expected optimal, got {other:?}"),
        }
    }

    #[test]
    fn degenerate_problem_terminates() {
        // Multiple redundant rows force degenerate pivots.
        let a = array![
            [1.0, 1.0, 1.0, 0.0, 0.0],
            [1.0, 1.0, 0.0, 1.0, 0.0],
            [1.0, 1.0, 0.0, 0.0, 1.0]
        ];
        let b = [2.0, 2.0, 2.0];
        let c = [-1.0, -1.0, 0.0, 0.0, 0.0];
        match solve_standard_form(&a, &b, &c).unwrap() {
            LpOutcome::Optimal(sol) => {
                assert_relative_eq!(sol.objective, -2.0, epsilon = 1e-9);
            }
            other => panic!("expected optimal, got {other:?}"),
        }
    }

    #[test]
    fn equality_only_square_system() {
        // Unique feasible point, objective irrelevant.
        let a = array![[1.0, 1.0], [1.0, -1.0]];
        let b = [3.0, 1.0];
        let c = [5.0, 7.0];
        match solve_standard_form(&a, &b, &c).unwrap() {
            LpOutcome::Optimal(sol) => {
                assert_relative_eq!(sol.x[0], 2.0, epsilon = 1e-9);
                assert_relative_eq!(sol.x[1], 1.0, epsilon = 1e-9);
            }
            other => panic!("expected optimal, got {other:?}"),
        }
    }
}
