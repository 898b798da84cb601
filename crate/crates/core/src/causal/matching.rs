//! Optimal 1:1 pair matching by minimum-cost assignment.
//!
//! The assignment is solved exactly with the shortest-augmenting-path
//! (Hungarian) algorithm on the dense cost matrix. Equal-cost optima are
//! canonicalized afterwards so the reported pairing is the
//! lexicographically smallest one: results do not depend on incidental
//! iteration order.

use super::propensity::fit_propensity_logistic;
use super::{CausalEstimate, Estimand};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg;
use ndarray::{Array1, Array2};
use serde::Serialize;

/// Pairwise distance used for matching.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MatchMetric {
    /// |e(Z_t) - e(Z_c)| on propensity scores fitted to the full dataset.
    #[serde(rename = "propensity-absolute-difference")]
    PropensityAbsDiff,
    /// Mahalanobis distance under the pooled covariate covariance of the
    /// kept subjects.
    #[serde(rename = "mahalanobis")]
    Mahalanobis,
}

impl std::str::FromStr for MatchMetric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "propensity-absolute-difference" | "propensity" => {
                Ok(MatchMetric::PropensityAbsDiff)
            }
            "mahalanobis" => Ok(MatchMetric::Mahalanobis),
            other => Err(Error::InvalidArgument(format!(
                "unknown metric {other:?} \
                 (expected propensity-absolute-difference or mahalanobis)"
            ))),
        }
    }
}

/// One matched treated/control pair (original dataset indices).
#[derive(Debug, Clone, Serialize)]
pub struct MatchedPair {
    pub treated: usize,
    pub control: usize,
    pub distance: f64,
}

/// Result of an optimal pair match.
#[derive(Debug, Clone, Serialize)]
pub struct MatchSet {
    pub metric: MatchMetric,
    /// Sorted by treated index.
    pub pairs: Vec<MatchedPair>,
    /// Sum of pair distances; minimal over all 1:1 matchings of this size.
    pub total_distance: f64,
    /// Kept subjects left unmatched (surplus arm), ascending.
    pub unmatched: Vec<usize>,
}

/// Exact minimum-cost assignment of every row to a distinct column
/// (requires nrows <= ncols). Shortest augmenting paths with potentials.
fn min_cost_assignment(cost: &Array2<f64>) -> Vec<usize> {
    let r = cost.nrows();
    let c = cost.ncols();
    debug_assert!(r <= c);
    let mut u = vec![0.0f64; r + 1];
    let mut v = vec![0.0f64; c + 1];
    // p[j] = 1-based row currently matched to column j (0 = free).
    let mut p = vec![0usize; c + 1];
    let mut way = vec![0usize; c + 1];
    for i in 1..=r {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; c + 1];
        let mut used = vec![false; c + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=c {
                if !used[j] {
                    let cur = cost[[i0 - 1, j - 1]] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=c {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![usize::MAX; r];
    for j in 1..=c {
        if p[j] != 0 {
            assign[p[j] - 1] = j - 1;
        }
    }
    assign
}

/// Rewrites an optimal assignment into the lexicographically smallest
/// equal-cost one: swaps column pairs between rows and moves rows to
/// unused columns whenever total cost is exactly preserved.
fn canonicalize_assignment(assign: &mut [usize], cost: &Array2<f64>) {
    let r = assign.len();
    let c = cost.ncols();
    loop {
        let mut changed = false;
        for i1 in 0..r {
            for i2 in (i1 + 1)..r {
                let (j1, j2) = (assign[i1], assign[i2]);
                if j2 < j1
                    && cost[[i1, j2]] + cost[[i2, j1]] == cost[[i1, j1]] + cost[[i2, j2]]
                {
                    assign[i1] = j2;
                    assign[i2] = j1;
                    changed = true;
                }
            }
        }
        let mut used = vec![false; c];
        for &j in assign.iter() {
            used[j] = true;
        }
        for i in 0..r {
            for j in 0..assign[i] {
                if !used[j] && cost[[i, j]] == cost[[i, assign[i]]] {
                    used[assign[i]] = false;
                    used[j] = true;
                    assign[i] = j;
                    changed = true;
                    break;
                }
            }
        }
        if !changed {
            break;
        }
    }
}

fn mahalanobis_inverse(d: &Dataset, keep: &[usize]) -> Result<Array2<f64>> {
    let p = d.p();
    let n = keep.len();
    if n < p + 1 {
        return Err(Error::InsufficientData(format!(
            "{n} kept subjects cannot support a {p}x{p} covariance"
        )));
    }
    let mut means = vec![0.0f64; p];
    for &i in keep {
        for (j, mean) in means.iter_mut().enumerate() {
            *mean += d.covariates()[[i, j]];
        }
    }
    for m in means.iter_mut() {
        *m /= n as f64;
    }
    let mut cov = Array2::<f64>::zeros((p, p));
    for &i in keep {
        for a in 0..p {
            let da = d.covariates()[[i, a]] - means[a];
            for b in a..p {
                let db = d.covariates()[[i, b]] - means[b];
                cov[[a, b]] += da * db;
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            cov[[a, b]] = cov[[b, a]];
        }
    }
    cov.mapv_inplace(|v| v / (n as f64 - 1.0));
    linalg::inverse_spd(&cov.view()).map_err(|_| {
        Error::Degenerate(
            "covariate covariance is singular within the kept subjects".into(),
        )
    })
}

/// Optimal 1:1 matching of treated to control subjects within `keep`.
///
/// Every subject of the smaller arm is matched; the surplus arm's extras
/// are reported as unmatched. Propensity scores are fitted on the full
/// dataset (the restriction to `keep` only selects who is matchable).
pub fn optimal_pair_match(
    d: &Dataset,
    keep: &[usize],
    metric: MatchMetric,
) -> Result<MatchSet> {
    let coded = d.binary_coded()?;
    let mut seen = vec![false; d.n()];
    for &i in keep {
        if i >= d.n() {
            return Err(Error::InvalidArgument(format!(
                "subject index {i} out of range for n={}",
                d.n()
            )));
        }
        if seen[i] {
            return Err(Error::InvalidArgument(format!(
                "subject index {i} listed twice"
            )));
        }
        seen[i] = true;
    }
    let mut treated: Vec<usize> = keep.iter().copied().filter(|&i| coded[i] > 0.0).collect();
    let mut control: Vec<usize> = keep.iter().copied().filter(|&i| coded[i] < 0.0).collect();
    treated.sort_unstable();
    control.sort_unstable();
    if treated.is_empty() || control.is_empty() {
        return Err(Error::InsufficientData(format!(
            "matching needs both arms, found {} treated and {} control",
            treated.len(),
            control.len()
        )));
    }

    enum Distance {
        Propensity(Vec<f64>),
        Mahalanobis(Array2<f64>),
    }
    let dist = match metric {
        MatchMetric::PropensityAbsDiff => {
            let pm = fit_propensity_logistic(d)?;
            Distance::Propensity(pm.fitted)
        }
        MatchMetric::Mahalanobis => Distance::Mahalanobis(mahalanobis_inverse(d, keep)?),
    };
    let pair_distance = |a: usize, b: usize| -> f64 {
        match &dist {
            Distance::Propensity(e) => (e[a] - e[b]).abs(),
            Distance::Mahalanobis(sinv) => {
                let p = d.p();
                let mut diff = Array1::<f64>::zeros(p);
                for j in 0..p {
                    diff[j] = d.covariates()[[a, j]] - d.covariates()[[b, j]];
                }
                let q = diff.dot(&sinv.dot(&diff));
                q.max(0.0).sqrt()
            }
        }
    };

    // Rows are the smaller arm so the assignment is complete on it.
    let treated_rows = treated.len() <= control.len();
    let (rows, cols) = if treated_rows {
        (&treated, &control)
    } else {
        (&control, &treated)
    };
    let mut cost = Array2::<f64>::zeros((rows.len(), cols.len()));
    for (ri, &a) in rows.iter().enumerate() {
        for (ci, &b) in cols.iter().enumerate() {
            cost[[ri, ci]] = pair_distance(a, b);
        }
    }
    let mut assign = min_cost_assignment(&cost);
    canonicalize_assignment(&mut assign, &cost);

    let mut pairs: Vec<MatchedPair> = assign
        .iter()
        .enumerate()
        .map(|(ri, &ci)| {
            let (t, c) = if treated_rows {
                (rows[ri], cols[ci])
            } else {
                (cols[ci], rows[ri])
            };
            MatchedPair {
                treated: t,
                control: c,
                distance: cost[[ri, ci]],
            }
        })
        .collect();
    pairs.sort_by_key(|p| p.treated);
    let total_distance = pairs.iter().map(|p| p.distance).sum();
    let matched: std::collections::HashSet<usize> = pairs
        .iter()
        .flat_map(|p| [p.treated, p.control])
        .collect();
    let mut unmatched: Vec<usize> = keep
        .iter()
        .copied()
        .filter(|i| !matched.contains(i))
        .collect();
    unmatched.sort_unstable();

    Ok(MatchSet {
        metric,
        pairs,
        total_distance,
        unmatched,
    })
}

/// Mean within-pair outcome difference (treated minus control) with the
/// standard error of the paired differences.
pub fn matched_estimate(ms: &MatchSet, y: &Array1<f64>) -> Result<CausalEstimate> {
    let k = ms.pairs.len();
    if k < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 matched pairs for a standard error, found {k}"
        )));
    }
    let mut diffs = Array1::<f64>::zeros(k);
    for (idx, pair) in ms.pairs.iter().enumerate() {
        if pair.treated >= y.len() || pair.control >= y.len() {
            return Err(Error::DimensionMismatch {
                expected: y.len(),
                actual: pair.treated.max(pair.control) + 1,
            });
        }
        diffs[idx] = y[pair.treated] - y[pair.control];
    }
    let point = linalg::mean(&diffs.view());
    let stderr = linalg::sample_sd(&diffs.view()) / (k as f64).sqrt();
    Ok(CausalEstimate {
        estimand: Estimand::AceSubpop,
        method: "matched-pair-difference".into(),
        point,
        stderr,
        n_used: 2 * k,
    })
}

/// Effect among the treated: matches every treated subject in `keep` to a
/// distinct control, so the matched set represents the treated arm.
/// Requires at least as many controls as treated.
pub fn acet_matched_estimate(
    d: &Dataset,
    keep: &[usize],
    metric: MatchMetric,
) -> Result<CausalEstimate> {
    let coded = d.binary_coded()?;
    let nt = keep.iter().filter(|&&i| coded[i] > 0.0).count();
    let nc = keep.len() - nt;
    if nt > nc {
        return Err(Error::InsufficientData(format!(
            "effect among the treated needs a control for every treated subject \
             ({nt} treated, {nc} controls)"
        )));
    }
    let y = d
        .outcome()
        .ok_or_else(|| Error::Schema("outcome column required for estimation".into()))?;
    let ms = optimal_pair_match(d, keep, metric)?;
    let mut est = matched_estimate(&ms, y)?;
    est.estimand = Estimand::Acet;
    est.method = "matched-pair-difference (all treated matched)".into();
    Ok(est)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{TreatmentKind, TreatmentVector};
    use approx::assert_relative_eq;
    use ndarray::array;
    use rand::Rng;

    fn matched_toy() -> Dataset {
        // Controls at 0.0, 1.0, 4.0; treated at 1.1, 3.9.
        let z = array![[0.0], [1.0], [4.0], [1.1], [3.9]];
        let t = TreatmentVector::from_values(
            &[0.0, 0.0, 0.0, 1.0, 1.0],
            TreatmentKind::Binary,
        )
        .unwrap();
        let y = array![1.0, 2.0, 3.0, 4.0, 5.0];
        Dataset::new(z, t, Some(y), vec!["z1".into()]).unwrap()
    }

    #[test]
    fn assignment_solves_small_instance() {
        // Known optimal assignment: (0->1), (1->0), (2->2): cost 1+2+2=5.
        let cost = array![[4.0, 1.0, 3.0], [2.0, 0.0, 5.0], [3.0, 2.0, 2.0]];
        let assign = min_cost_assignment(&cost);
        assert_eq!(assign, vec![1, 0, 2]);
    }

    #[test]
    fn assignment_rectangular() {
        let cost = array![[10.0, 1.0, 10.0, 10.0], [10.0, 10.0, 10.0, 1.0]];
        let assign = min_cost_assignment(&cost);
        assert_eq!(assign, vec![1, 3]);
    }

    #[test]
    fn ties_resolve_lexicographically() {
        // All costs equal: canonical assignment is the identity.
        let cost = Array2::<f64>::ones((3, 5));
        let mut assign = min_cost_assignment(&cost);
        canonicalize_assignment(&mut assign, &cost);
        assert_eq!(assign, vec![0, 1, 2]);
    }

    #[test]
    fn equal_cost_tie_prefers_smaller_column() {
        // Scores 0.2, 0.8 vs 0.25, 0.7, 0.9: both (c2) and (c3) complete
        // the optimum at total 0.15; the canonical pick is c2.
        let cost = array![[0.05, 0.5, 0.7], [0.55, 0.1, 0.1]];
        let mut assign = min_cost_assignment(&cost);
        canonicalize_assignment(&mut assign, &cost);
        assert_eq!(assign, vec![0, 1]);
    }

    fn brute_force_min_cost(cost: &Array2<f64>) -> f64 {
        fn rec(cost: &Array2<f64>, row: usize, used: &mut [bool], acc: f64, best: &mut f64) {
            if row == cost.nrows() {
                if acc < *best {
                    *best = acc;
                }
                return;
            }
            for j in 0..cost.ncols() {
                if !used[j] {
                    used[j] = true;
                    rec(cost, row + 1, used, acc + cost[[row, j]], best);
                    used[j] = false;
                }
            }
        }
        let mut best = f64::INFINITY;
        rec(cost, 0, &mut vec![false; cost.ncols()], 0.0, &mut best);
        best
    }

    #[test]
    fn assignment_matches_exhaustive_enumeration() {
        let mut rng = crate::rng::rng_from_seed(101);
        for _ in 0..60 {
            let r = 1 + (rng.random::<f64>() * 7.0) as usize;
            let extra = (rng.random::<f64>() * (7.0 - r as f64 + 1.0)) as usize;
            let c = r + extra;
            let mut cost = Array2::<f64>::zeros((r, c));
            for v in cost.iter_mut() {
                *v = (rng.random::<f64>() * 8.0).round() / 8.0;
            }
            let assign = min_cost_assignment(&cost);
            let total: f64 = assign.iter().enumerate().map(|(i, &j)| cost[[i, j]]).sum();
            let best = brute_force_min_cost(&cost);
            assert!(
                (total - best).abs() < 1e-9,
                "assignment {total} vs enumeration {best} on {cost:?}"
            );
            let mut seen = vec![false; c];
            for &j in &assign {
                assert!(!seen[j], "column used twice");
                seen[j] = true;
            }
        }
    }

    #[test]
    fn mahalanobis_match_pairs_neighbors() {
        let d = matched_toy();
        let keep: Vec<usize> = (0..5).collect();
        let ms = optimal_pair_match(&d, &keep, MatchMetric::Mahalanobis).unwrap();
        assert_eq!(ms.pairs.len(), 2);
        // 1.1 matches 1.0 and 3.9 matches 4.0.
        assert_eq!(ms.pairs[0].treated, 3);
        assert_eq!(ms.pairs[0].control, 1);
        assert_eq!(ms.pairs[1].treated, 4);
        assert_eq!(ms.pairs[1].control, 2);
        assert_eq!(ms.unmatched, vec![0]);
        let recomputed: f64 = ms.pairs.iter().map(|p| p.distance).sum();
        assert_relative_eq!(ms.total_distance, recomputed, epsilon = 1e-10);
    }

    #[test]
    fn matched_estimate_paired_difference() {
        let d = matched_toy();
        let keep: Vec<usize> = (0..5).collect();
        let ms = optimal_pair_match(&d, &keep, MatchMetric::Mahalanobis).unwrap();
        let est = matched_estimate(&ms, d.outcome().unwrap()).unwrap();
        // Diffs: 4-2=2 and 5-3=2: mean 2, stderr 0.
        assert_relative_eq!(est.point, 2.0, epsilon = 1e-12);
        assert_relative_eq!(est.stderr, 0.0, epsilon = 1e-12);
        assert_eq!(est.n_used, 4);
        assert_eq!(est.estimand, Estimand::AceSubpop);
    }

    #[test]
    fn acet_requires_enough_controls() {
        let z = array![[0.0], [1.0], [2.0], [3.0]];
        let t = TreatmentVector::from_values(
            &[1.0, 1.0, 1.0, 0.0],
            TreatmentKind::Binary,
        )
        .unwrap();
        let y = array![1.0, 2.0, 3.0, 4.0];
        let d = Dataset::new(z, t, Some(y), vec!["z1".into()]).unwrap();
        let keep: Vec<usize> = (0..4).collect();
        assert!(acet_matched_estimate(&d, &keep, MatchMetric::Mahalanobis).is_err());
    }

    #[test]
    fn single_pair_has_no_stderr() {
        let ms = MatchSet {
            metric: MatchMetric::Mahalanobis,
            pairs: vec![MatchedPair {
                treated: 0,
                control: 1,
                distance: 0.0,
            }],
            total_distance: 0.0,
            unmatched: vec![],
        };
        let y = array![1.0, 2.0];
        assert!(matched_estimate(&ms, &y).is_err());
    }
}
