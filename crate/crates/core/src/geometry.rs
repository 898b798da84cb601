//! Closest pair of points between two convex hulls, and the relaxed
//! overlap verdict built on it.
//!
//! The solver minimizes 0.5 * || Z0'alpha - Z1'beta ||^2 over the product
//! of probability simplices with pairwise (drop-step) Frank-Wolfe moves
//! and exact line search. Each iteration picks the block (alpha or beta)
//! whose best single weight transfer most decreases the objective; the sum
//! of the two block gaps bounds the Frank-Wolfe gap, so the stopping rule
//! below certifies the duality gap of the returned iterate.
//!
//! Distance 0 (up to the relaxation delta) means the hulls intersect and
//! the groups satisfy relaxed covariate overlap; positive distance yields
//! an explicit separating hyperplane as the failure certificate.

use crate::error::{Error, Result};
use ndarray::{Array1, Array2};
use serde::Serialize;

/// Default relative duality-gap tolerance for [`hull_closest_pair`].
pub const DEFAULT_GAP_TOL: f64 = 1e-10;

/// Default relaxation: delta = DELTA_SCALE * (1 + joint diameter).
pub const DELTA_SCALE: f64 = 1e-7;

/// Solution of the closest-pair problem between two hulls.
#[derive(Debug, Clone, Serialize)]
pub struct HullPairSolution {
    /// Simplex weights over the rows of Z0; non-negative, sum 1.
    pub alpha: Vec<f64>,
    /// Simplex weights over the rows of Z1; non-negative, sum 1.
    pub beta: Vec<f64>,
    /// Closest point in hull(Z0): Z0'alpha.
    pub p0: Vec<f64>,
    /// Closest point in hull(Z1): Z1'beta.
    pub p1: Vec<f64>,
    /// ||p0 - p1||.
    pub distance: f64,
    /// Frank-Wolfe duality gap at the returned iterate.
    pub duality_gap: f64,
    pub iterations: usize,
}

/// Certified relaxed-overlap verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OverlapVerdict {
    /// Hull distance <= delta: the groups share a (relaxed) common point.
    Overlap,
    /// Hull distance > delta: a separating hyperplane exists.
    Separable,
}

/// Hyperplane certificate for a separable pair.
///
/// `normal` points from group 1 toward group 0: every row of Z0 satisfies
/// normal . z >= offset0 and every row of Z1 satisfies normal . z <=
/// offset1, with offset0 > offset1 for genuinely separated hulls.
#[derive(Debug, Clone, Serialize)]
pub struct SeparatingHyperplane {
    pub normal: Vec<f64>,
    pub offset0: f64,
    pub offset1: f64,
    /// offset0 - offset1; equals distance^2 at the exact solution.
    pub band_width: f64,
}

/// Evidence attached to an overlap verdict.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OverlapCertificate {
    /// Midpoint of the closest pair; within delta of both hulls.
    CommonPoint(Vec<f64>),
    Hyperplane(SeparatingHyperplane),
}

/// Full report of [`relaxed_overlap_check`].
#[derive(Debug, Clone, Serialize)]
pub struct OverlapReport {
    pub verdict: OverlapVerdict,
    pub distance: f64,
    /// Relaxation actually used.
    pub delta: f64,
    pub certificate: OverlapCertificate,
    pub solution: HullPairSolution,
}

fn validate_pair(z0: &Array2<f64>, z1: &Array2<f64>) -> Result<()> {
    if z0.nrows() == 0 || z1.nrows() == 0 {
        return Err(Error::InsufficientData(
            "both groups must be non-empty".into(),
        ));
    }
    if z0.ncols() != z1.ncols() {
        return Err(Error::DimensionMismatch {
            expected: z0.ncols(),
            actual: z1.ncols(),
        });
    }
    if z0.ncols() == 0 {
        return Err(Error::Schema("need at least 1 covariate column".into()));
    }
    if z0.iter().chain(z1.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("hull vertices".into()));
    }
    Ok(())
}

/// Largest pairwise distance within the union of the two point sets.
pub fn joint_diameter(z0: &Array2<f64>, z1: &Array2<f64>) -> f64 {
    let p = z0.ncols();
    let n0 = z0.nrows();
    let n1 = z1.nrows();
    let total = n0 + n1;
    let row = |i: usize| -> ndarray::ArrayView1<f64> {
        if i < n0 {
            z0.row(i)
        } else {
            z1.row(i - n0)
        }
    };
    let mut best = 0.0f64;
    for i in 0..total {
        for j in (i + 1)..total {
            let a = row(i);
            let b = row(j);
            let mut s = 0.0;
            for k in 0..p {
                let d = a[k] - b[k];
                s += d * d;
            }
            best = best.max(s);
        }
    }
    best.sqrt()
}

/// Default relaxation for a pair of point sets.
pub fn default_overlap_delta(z0: &Array2<f64>, z1: &Array2<f64>) -> f64 {
    DELTA_SCALE * (1.0 + joint_diameter(z0, z1))
}

/// Solves min 0.5 * || Z0'alpha - Z1'beta ||^2 over the product of
/// simplices.
///
/// Stops when the Frank-Wolfe gap satisfies
/// `gap <= gap_tol * (1 + ||p0 - p1||^2)`, which bounds the objective
/// suboptimality by the same quantity. Ties in vertex selection go to the
/// lowest index, so the iteration sequence is deterministic.
pub fn hull_closest_pair(
    z0: &Array2<f64>,
    z1: &Array2<f64>,
    gap_tol: f64,
) -> Result<HullPairSolution> {
    validate_pair(z0, z1)?;
    if !(gap_tol > 0.0) || !gap_tol.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "gap_tol must be positive and finite, got {gap_tol}"
        )));
    }
    let n0 = z0.nrows();
    let n1 = z1.nrows();
    let p = z0.ncols();
    let mut alpha = Array1::<f64>::from_elem(n0, 1.0 / n0 as f64);
    let mut beta = Array1::<f64>::from_elem(n1, 1.0 / n1 as f64);
    let max_iter = 50_000 + 200 * (n0 + n1);

    let mut d = Array1::<f64>::zeros(p);
    let mut gap = f64::INFINITY;
    let mut iterations = 0usize;
    let mut converged = false;

    for iter in 0..max_iter {
        iterations = iter;
        // d = Z0'alpha - Z1'beta, recomputed fresh to avoid drift.
        d.fill(0.0);
        for i in 0..n0 {
            let ai = alpha[i];
            if ai != 0.0 {
                d.scaled_add(ai, &z0.row(i));
            }
        }
        for j in 0..n1 {
            let bj = beta[j];
            if bj != 0.0 {
                d.scaled_add(-bj, &z1.row(j));
            }
        }
        let dd = d.dot(&d);

        // Scores: s0_i = z0_i . d (want small), s1_j = z1_j . d (want big).
        let s0 = z0.dot(&d);
        let s1 = z1.dot(&d);

        // Toward vertex and away vertex per block, lowest index on ties.
        let mut i_to = 0usize;
        let mut i_away = usize::MAX;
        for i in 0..n0 {
            if s0[i] < s0[i_to] {
                i_to = i;
            }
            if alpha[i] > 0.0 && (i_away == usize::MAX || s0[i] > s0[i_away]) {
                i_away = i;
            }
        }
        let mut j_to = 0usize;
        let mut j_away = usize::MAX;
        for j in 0..n1 {
            if s1[j] > s1[j_to] {
                j_to = j;
            }
            if beta[j] > 0.0 && (j_away == usize::MAX || s1[j] < s1[j_away]) {
                j_away = j;
            }
        }

        gap = dd - s0[i_to] + s1[j_to];
        if gap <= gap_tol * (1.0 + dd) {
            converged = true;
            break;
        }

        // Block gaps: decrease available from a single weight transfer.
        let gap0 = s0[i_away] - s0[i_to];
        let gap1 = s1[j_to] - s1[j_away];

        // Candidate moves: a transfer within either block, or a joint
        // transfer moving both blocks by a common step. Transfers within
        // one block zigzag without converging when touching hulls force
        // the two weighted points to move together; the joint direction
        // (directional gap gap0 + gap1 >= overall gap) restores progress
        // there. Exact line search on the quadratic, clipped at the
        // departing weight.
        let clipped = |g: f64, denom: f64, cap: f64| -> (f64, f64) {
            if !(g > 0.0) || denom <= 0.0 || cap <= 0.0 {
                return (0.0, 0.0);
            }
            let unclipped = g / denom;
            if unclipped <= cap {
                (0.5 * g * g / denom, unclipped)
            } else {
                (cap * g - 0.5 * cap * cap * denom, cap)
            }
        };
        let mut denom0 = 0.0;
        let mut denom1 = 0.0;
        let mut denom_joint = 0.0;
        for k in 0..p {
            let u0 = z0[[i_to, k]] - z0[[i_away, k]];
            let u1 = z1[[j_to, k]] - z1[[j_away, k]];
            denom0 += u0 * u0;
            denom1 += u1 * u1;
            let uj = u0 - u1;
            denom_joint += uj * uj;
        }
        let (dec0, step0) = clipped(gap0, denom0, alpha[i_away]);
        let (dec1, step1) = clipped(gap1, denom1, beta[j_away]);
        let (dec_joint, step_joint) = clipped(
            gap0 + gap1,
            denom_joint,
            alpha[i_away].min(beta[j_away]),
        );

        let best = dec0.max(dec1).max(dec_joint);
        if best <= 0.0 {
            // No strict descent available: numerically at a vertex of
            // the product domain; report the residual gap honestly.
            break;
        }
        // Largest decrease wins; ties prefer the single-block moves.
        let (alpha_step, beta_step) = if best == dec0 {
            (step0, 0.0)
        } else if best == dec1 {
            (0.0, step1)
        } else {
            (step_joint, step_joint)
        };
        if alpha_step > 0.0 {
            if alpha_step >= alpha[i_away] {
                alpha[i_to] += alpha[i_away];
                alpha[i_away] = 0.0;
            } else {
                alpha[i_to] += alpha_step;
                alpha[i_away] -= alpha_step;
            }
        }
        if beta_step > 0.0 {
            if beta_step >= beta[j_away] {
                beta[j_to] += beta[j_away];
                beta[j_away] = 0.0;
            } else {
                beta[j_to] += beta_step;
                beta[j_away] -= beta_step;
            }
        }
    }

    if !converged {
        return Err(Error::Convergence {
            solver: "hull_closest_pair",
            residual: gap,
            iterations,
        });
    }

    // Clean tiny negative dust and renormalize exactly once.
    for a in alpha.iter_mut() {
        if *a < 0.0 {
            *a = 0.0;
        }
    }
    for b in beta.iter_mut() {
        if *b < 0.0 {
            *b = 0.0;
        }
    }
    let sa = alpha.sum();
    let sb = beta.sum();
    alpha.mapv_inplace(|a| a / sa);
    beta.mapv_inplace(|b| b / sb);

    let p0 = z0.t().dot(&alpha);
    let p1 = z1.t().dot(&beta);
    let diff = &p0 - &p1;
    let distance = diff.dot(&diff).sqrt();

    Ok(HullPairSolution {
        alpha: alpha.to_vec(),
        beta: beta.to_vec(),
        p0: p0.to_vec(),
        p1: p1.to_vec(),
        distance,
        duality_gap: gap,
        iterations,
    })
}

/// Builds the separating hyperplane certificate from a closest-pair
/// solution with positive distance.
///
/// The normal is p0 - p1; offsets are the extreme projections of each
/// group, so the certificate is verifiable by direct inspection.
pub fn separating_hyperplane(
    solution: &HullPairSolution,
    z0: &Array2<f64>,
    z1: &Array2<f64>,
) -> Result<SeparatingHyperplane> {
    validate_pair(z0, z1)?;
    if solution.distance <= 0.0 {
        return Err(Error::Degenerate(
            "cannot build a separating hyperplane at distance 0".into(),
        ));
    }
    let p = z0.ncols();
    if solution.p0.len() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            actual: solution.p0.len(),
        });
    }
    let normal: Array1<f64> = (0..p).map(|k| solution.p0[k] - solution.p1[k]).collect();
    let proj0 = z0.dot(&normal);
    let proj1 = z1.dot(&normal);
    let offset0 = proj0.iter().cloned().fold(f64::INFINITY, f64::min);
    let offset1 = proj1.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(SeparatingHyperplane {
        normal: normal.to_vec(),
        offset0,
        offset1,
        band_width: offset0 - offset1,
    })
}

/// Tests relaxed covariate overlap between two groups.
///
/// `delta = None` uses [`default_overlap_delta`]. The verdict comes with a
/// checkable certificate: a near-common point under overlap, a separating
/// hyperplane otherwise.
pub fn relaxed_overlap_check(
    z0: &Array2<f64>,
    z1: &Array2<f64>,
    delta: Option<f64>,
) -> Result<OverlapReport> {
    validate_pair(z0, z1)?;
    let delta = match delta {
        Some(d) => {
            if !(d >= 0.0) || !d.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "delta must be non-negative and finite, got {d}"
                )));
            }
            d
        }
        None => default_overlap_delta(z0, z1),
    };
    let solution = hull_closest_pair(z0, z1, DEFAULT_GAP_TOL)?;
    if solution.distance <= delta {
        let p = solution.p0.len();
        let mid: Vec<f64> = (0..p)
            .map(|k| 0.5 * (solution.p0[k] + solution.p1[k]))
            .collect();
        Ok(OverlapReport {
            verdict: OverlapVerdict::Overlap,
            distance: solution.distance,
            delta,
            certificate: OverlapCertificate::CommonPoint(mid),
            solution,
        })
    } else {
        let hp = separating_hyperplane(&solution, z0, z1)?;
        Ok(OverlapReport {
            verdict: OverlapVerdict::Separable,
            distance: solution.distance,
            delta,
            certificate: OverlapCertificate::Hyperplane(hp),
            solution,
        })
    }
}

/// Number of weak compositions of `m` into `n` parts, saturating.
fn composition_count(m: usize, n: usize) -> u128 {
    // C(m + n - 1, n - 1)
    let k = n - 1;
    let mut c: u128 = 1;
    for i in 0..k {
        c = c.saturating_mul((m + k - i) as u128) / (i as u128 + 1);
        if c > u128::MAX / 2 {
            return u128::MAX / 2;
        }
    }
    c
}

fn for_each_composition(n: usize, m: usize, f: &mut impl FnMut(&[usize])) {
    let mut buf = vec![0usize; n];
    fn rec(buf: &mut Vec<usize>, idx: usize, left: usize, f: &mut impl FnMut(&[usize])) {
        if idx == buf.len() - 1 {
            buf[idx] = left;
            f(buf);
            return;
        }
        for v in 0..=left {
            buf[idx] = v;
            rec(buf, idx + 1, left - v, f);
        }
    }
    if n == 0 {
        return;
    }
    rec(&mut buf, 0, m, f);
}

/// Compositions of `m` with each part within `radius` of `center`.
fn for_each_composition_near(
    center: &[usize],
    m: usize,
    radius: usize,
    f: &mut impl FnMut(&[usize]),
) {
    let n = center.len();
    let mut buf = vec![0usize; n];
    fn rec(
        buf: &mut Vec<usize>,
        center: &[usize],
        radius: usize,
        idx: usize,
        left: usize,
        f: &mut impl FnMut(&[usize]),
    ) {
        let n = buf.len();
        if idx == n - 1 {
            let lo = center[idx].saturating_sub(radius);
            let hi = center[idx] + radius;
            if left >= lo && left <= hi {
                buf[idx] = left;
                f(buf);
            }
            return;
        }
        let lo = center[idx].saturating_sub(radius);
        let hi = (center[idx] + radius).min(left);
        for v in lo..=hi {
            buf[idx] = v;
            rec(buf, center, radius, idx + 1, left - v, f);
        }
    }
    if n == 0 {
        return;
    }
    rec(&mut buf, center, radius, 0, m, f);
}

struct LatticeState {
    k0: Vec<usize>,
    k1: Vec<usize>,
    m: usize,
}

impl LatticeState {
    fn point_diff(&self, z0: &Array2<f64>, z1: &Array2<f64>) -> Array1<f64> {
        let p = z0.ncols();
        let mut d = Array1::<f64>::zeros(p);
        let mf = self.m as f64;
        for (i, &k) in self.k0.iter().enumerate() {
            if k > 0 {
                d.scaled_add(k as f64 / mf, &z0.row(i));
            }
        }
        for (j, &k) in self.k1.iter().enumerate() {
            if k > 0 {
                d.scaled_add(-(k as f64) / mf, &z1.row(j));
            }
        }
        d
    }

    fn objective(&self, z0: &Array2<f64>, z1: &Array2<f64>) -> f64 {
        let d = self.point_diff(z0, z1);
        d.dot(&d)
    }

    /// Rescales the composition to a finer resolution, preserving the sum.
    fn refine(&self, m_new: usize) -> LatticeState {
        let scale = |k: &[usize]| -> Vec<usize> {
            let mut out: Vec<usize> = k
                .iter()
                .map(|&v| v * m_new / self.m)
                .collect();
            let mut short = m_new - out.iter().sum::<usize>();
            // Distribute the remainder by largest truncated fraction,
            // lowest index first.
            let mut order: Vec<usize> = (0..k.len()).collect();
            order.sort_by(|&a, &b| {
                let fa = k[a] * m_new % self.m;
                let fb = k[b] * m_new % self.m;
                fb.cmp(&fa).then(a.cmp(&b))
            });
            let mut t = 0;
            while short > 0 {
                out[order[t % k.len()]] += 1;
                short -= 1;
                t += 1;
            }
            out
        };
        LatticeState {
            k0: scale(&self.k0),
            k1: scale(&self.k1),
            m: m_new,
        }
    }

    /// Steepest-descent over single-unit weight transfers until no move
    /// improves the objective.
    fn descend(&mut self, z0: &Array2<f64>, z1: &Array2<f64>) {
        let p = z0.ncols();
        let mf = self.m as f64;
        let mut d = self.point_diff(z0, z1);
        let mut f = d.dot(&d);
        loop {
            let mut best_gain = 0.0f64;
            // (block, from, to)
            let mut best_move: Option<(u8, usize, usize)> = None;
            let mut best_delta: Vec<f64> = Vec::new();
            for from in 0..self.k0.len() {
                if self.k0[from] == 0 {
                    continue;
                }
                for to in 0..self.k0.len() {
                    if to == from {
                        continue;
                    }
                    // p0 moves by (z0_to - z0_from)/m.
                    let mut cross = 0.0;
                    let mut norm = 0.0;
                    for c in 0..p {
                        let u = (z0[[to, c]] - z0[[from, c]]) / mf;
                        cross += d[c] * u;
                        norm += u * u;
                    }
                    let new_f = f + 2.0 * cross + norm;
                    if f - new_f > best_gain + 1e-15 * (1.0 + f) {
                        best_gain = f - new_f;
                        best_move = Some((0, from, to));
                        best_delta = (0..p)
                            .map(|c| (z0[[to, c]] - z0[[from, c]]) / mf)
                            .collect();
                    }
                }
            }
            for from in 0..self.k1.len() {
                if self.k1[from] == 0 {
                    continue;
                }
                for to in 0..self.k1.len() {
                    if to == from {
                        continue;
                    }
                    let mut cross = 0.0;
                    let mut norm = 0.0;
                    for c in 0..p {
                        let u = -(z1[[to, c]] - z1[[from, c]]) / mf;
                        cross += d[c] * u;
                        norm += u * u;
                    }
                    let new_f = f + 2.0 * cross + norm;
                    if f - new_f > best_gain + 1e-15 * (1.0 + f) {
                        best_gain = f - new_f;
                        best_move = Some((1, from, to));
                        best_delta = (0..p)
                            .map(|c| -(z1[[to, c]] - z1[[from, c]]) / mf)
                            .collect();
                    }
                }
            }
            match best_move {
                None => break,
                Some((block, from, to)) => {
                    if block == 0 {
                        self.k0[from] -= 1;
                        self.k0[to] += 1;
                    } else {
                        self.k1[from] -= 1;
                        self.k1[to] += 1;
                    }
                    for c in 0..p {
                        d[c] += best_delta[c];
                    }
                    f = d.dot(&d);
                }
            }
        }
    }
}

/// Exhaustive-then-refined grid search for the hull distance. Test oracle
/// for [`hull_closest_pair`]; deliberately independent of it.
///
/// Weights live on the lattice (k/m) with m = ceil(1/grid_step). Small
/// instances are enumerated exhaustively; otherwise the search enumerates a
/// coarse lattice fully, then alternates resolution doubling with
/// steepest-descent weight transfers and a radius-3 neighborhood sweep at
/// the final resolution.
///
/// The result is the objective at a feasible lattice point, so it always
/// upper-bounds the true hull distance; the overshoot is at most
/// 0.5 * grid_step * (n0 * diam0 + n1 * diam1) at a lattice optimum.
pub fn brute_force_hull_distance(
    z0: &Array2<f64>,
    z1: &Array2<f64>,
    grid_step: f64,
) -> Result<f64> {
    validate_pair(z0, z1)?;
    let n0 = z0.nrows();
    let n1 = z1.nrows();
    if n0 > 5 || n1 > 5 {
        return Err(Error::InvalidArgument(format!(
            "grid search supports at most 5 points per group, got {n0} and {n1}"
        )));
    }
    if !(grid_step > 0.0 && grid_step <= 0.5) {
        return Err(Error::InvalidArgument(format!(
            "grid_step must be in (0, 0.5], got {grid_step}"
        )));
    }
    let m_target = (1.0 / grid_step - 1e-9).ceil().max(2.0) as usize;

    const BUDGET: u128 = 4_000_000;
    let mut m_coarse = m_target;
    while m_coarse > 2
        && composition_count(m_coarse, n0).saturating_mul(composition_count(m_coarse, n1))
            > BUDGET
    {
        m_coarse /= 2;
    }

    // Exhaustive scan at the coarse resolution. Materialize the block with
    // fewer lattice points, stream the other.
    let mut best = LatticeState {
        k0: vec![0; n0],
        k1: vec![0; n1],
        m: m_coarse,
    };
    best.k0[0] = m_coarse;
    best.k1[0] = m_coarse;
    let mut best_f = best.objective(z0, z1);
    {
        let lattice_point = |z: &Array2<f64>, k: &[usize]| -> Array1<f64> {
            let mut q = Array1::<f64>::zeros(z.ncols());
            for (j, &kj) in k.iter().enumerate() {
                if kj > 0 {
                    q.scaled_add(kj as f64 / m_coarse as f64, &z.row(j));
                }
            }
            q
        };
        let swap = composition_count(m_coarse, n0) < composition_count(m_coarse, n1);
        let (za, zb) = if swap { (z0, z1) } else { (z1, z0) };
        let mut pts_a: Vec<(Vec<usize>, Array1<f64>)> = Vec::new();
        for_each_composition(za.nrows(), m_coarse, &mut |ka| {
            pts_a.push((ka.to_vec(), lattice_point(za, ka)));
        });
        for_each_composition(zb.nrows(), m_coarse, &mut |kb| {
            let pb = lattice_point(zb, kb);
            for (ka, pa) in &pts_a {
                let mut f = 0.0;
                for c in 0..pb.len() {
                    let dc = pb[c] - pa[c];
                    f += dc * dc;
                }
                if f < best_f {
                    best_f = f;
                    if swap {
                        best.k0 = ka.clone();
                        best.k1 = kb.to_vec();
                    } else {
                        best.k0 = kb.to_vec();
                        best.k1 = ka.clone();
                    }
                }
            }
        });
    }

    // Refine resolution toward the target, descending at each level.
    let mut state = best;
    state.descend(z0, z1);
    while state.m < m_target {
        let m_next = (state.m * 2).min(m_target);
        state = state.refine(m_next);
        state.descend(z0, z1);
    }

    // Final local sweeps around the incumbent, recentering on every
    // improvement. Per-group transfers alone can stall in the narrow
    // valley between nearly-parallel faces; the joint sweep moves both
    // weight vectors at once and the strict decrease over a finite
    // lattice guarantees termination.
    let m = state.m;
    let mut final_best = state.objective(z0, z1);
    loop {
        let mut improved = false;
        let center0 = state.k0.clone();
        let center1 = state.k1.clone();
        let mut near1: Vec<(Vec<usize>, Array1<f64>)> = Vec::new();
        for_each_composition_near(&center1, m, 3, &mut |k1| {
            let mut q = Array1::<f64>::zeros(z1.ncols());
            for (j, &k) in k1.iter().enumerate() {
                if k > 0 {
                    q.scaled_add(k as f64 / m as f64, &z1.row(j));
                }
            }
            near1.push((k1.to_vec(), q));
        });
        for_each_composition_near(&center0, m, 3, &mut |k0| {
            let mut p0 = Array1::<f64>::zeros(z0.ncols());
            for (i, &k) in k0.iter().enumerate() {
                if k > 0 {
                    p0.scaled_add(k as f64 / m as f64, &z0.row(i));
                }
            }
            for (k1, q) in &near1 {
                let mut f = 0.0;
                for c in 0..p0.len() {
                    let dc = p0[c] - q[c];
                    f += dc * dc;
                }
                if f < final_best {
                    final_best = f;
                    state.k0 = k0.to_vec();
                    state.k1 = k1.clone();
                    improved = true;
                }
            }
        });
        if !improved {
            break;
        }
        state.descend(z0, z1);
        let refreshed = state.objective(z0, z1);
        if refreshed < final_best {
            final_best = refreshed;
        }
    }

    Ok(final_best.sqrt())
}
