//! Shared test oracles and instance generators.
//!
//! The oracles deliberately take different algorithmic routes than the
//! library: the QP reference is an accelerated projected-gradient method
//! (the library uses pairwise coordinate updates), and the separability
//! oracle is a linear-programming feasibility test (the library decides
//! overlap through the closest-pair QP).

#![allow(dead_code)]

use marginfit::dataset::{Dataset, TreatmentKind, TreatmentVector};
use marginfit::rng::rng_from_seed;
use marginfit::simplex::{solve_standard_form, LpOutcome};
use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Quadratic program min 0.5 x'Qx + q'x over {0 <= x <= upper, a'x = r}.
pub struct BoxHyperplaneQp {
    pub q_mat: Array2<f64>,
    pub q_vec: Array1<f64>,
    pub a: Array1<f64>,
    pub r: f64,
    pub upper: f64,
}

/// Euclidean projection onto {0 <= x <= upper, a'x = r} by bisection on
/// the hyperplane multiplier. a'clip(v - lambda a) is nonincreasing in
/// lambda, so the root bracket only needs widening until it straddles r.
fn project_box_hyperplane(v: &Array1<f64>, a: &Array1<f64>, upper: f64, r: f64) -> Array1<f64> {
    let clip = |lambda: f64| -> Array1<f64> {
        Array1::from_iter(
            v.iter()
                .zip(a.iter())
                .map(|(&vi, &ai)| (vi - lambda * ai).clamp(0.0, upper)),
        )
    };
    let constraint = |lambda: f64| -> f64 { a.dot(&clip(lambda)) };

    let mut lo = -1.0;
    let mut hi = 1.0;
    for _ in 0..200 {
        if constraint(lo) >= r {
            break;
        }
        lo *= 2.0;
    }
    for _ in 0..200 {
        if constraint(hi) <= r {
            break;
        }
        hi *= 2.0;
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if constraint(mid) >= r {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    clip(0.5 * (lo + hi))
}

/// Accelerated projected gradient (with objective restarts) for
/// [`BoxHyperplaneQp`]. Reference solver for the dual programs; returns
/// the minimizer.
pub fn solve_qp_reference(p: &BoxHyperplaneQp, max_iter: usize) -> Array1<f64> {
    let n = p.q_vec.len();
    // Infinity norm of Q upper-bounds its spectral norm (symmetric Q).
    let lip = (0..n)
        .map(|i| p.q_mat.row(i).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0f64, f64::max)
        .max(1e-12);
    let step = 1.0 / lip;
    let value = |x: &Array1<f64>| 0.5 * x.dot(&p.q_mat.dot(x)) + p.q_vec.dot(x);

    let mut x = project_box_hyperplane(&Array1::zeros(n), &p.a, p.upper, p.r);
    let mut y = x.clone();
    let mut t = 1.0f64;
    let mut fx = value(&x);
    for _ in 0..max_iter {
        let grad = p.q_mat.dot(&y) + &p.q_vec;
        let x_next = project_box_hyperplane(&(&y - &(step * &grad)), &p.a, p.upper, p.r);
        let fx_next = value(&x_next);
        let (t_next, y_next, restarted) = if fx_next > fx {
            // Momentum overshot; restart from the last good iterate.
            (1.0, x.clone(), true)
        } else {
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let y_next = &x_next + &(((t - 1.0) / t_next) * &(&x_next - &x));
            (t_next, y_next, false)
        };
        if !restarted {
            let delta = (&x_next - &x).iter().map(|v| v.abs()).fold(0.0f64, f64::max);
            let scale = x_next.iter().map(|v| v.abs()).fold(1.0f64, f64::max);
            if delta <= 1e-14 * scale {
                // The step came from the momentum point, so a frozen
                // iterate does not certify a fixed point of the projected
                // gradient map; a momentum point beyond a vertex can
                // project straight back onto it. Verify from the iterate
                // itself.
                let g = p.q_mat.dot(&x_next) + &p.q_vec;
                let probe =
                    project_box_hyperplane(&(&x_next - &(step * &g)), &p.a, p.upper, p.r);
                let resid = (&probe - &x_next)
                    .iter()
                    .map(|v| v.abs())
                    .fold(0.0f64, f64::max);
                if resid <= 1e-13 * scale {
                    return x_next;
                }
                // Not stationary: collapse the momentum so the next step
                // leaves from the iterate directly.
                x = x_next;
                fx = fx_next;
                t = 1.0;
                y = x.clone();
                continue;
            }
            x = x_next;
            fx = fx_next;
        }
        t = t_next;
        y = y_next;
    }
    x
}

/// SVM dual as a [`BoxHyperplaneQp`]: Q_ij = T_i T_j z_i.z_j, linear term
/// -1, constraint T'alpha = 0, box [0, cost].
pub fn svm_dual_qp(z: &Array2<f64>, t: &Array1<f64>, cost: f64) -> BoxHyperplaneQp {
    let n = z.nrows();
    let gram = z.dot(&z.t());
    let mut q_mat = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            q_mat[[i, j]] = t[i] * t[j] * gram[[i, j]];
        }
    }
    BoxHyperplaneQp {
        q_mat,
        q_vec: Array1::from_elem(n, -1.0),
        a: t.clone(),
        r: 0.0,
        upper: cost,
    }
}

/// SVM dual objective (maximization form) at `alpha`.
pub fn svm_dual_objective(z: &Array2<f64>, t: &Array1<f64>, alpha: &Array1<f64>) -> f64 {
    let p = z.ncols();
    let mut w = Array1::<f64>::zeros(p);
    for i in 0..z.nrows() {
        w.scaled_add(alpha[i] * t[i], &z.row(i));
    }
    alpha.sum() - 0.5 * w.dot(&w)
}

/// SVR dual over stacked beta = (alpha_plus, alpha_minus):
/// Q = [K, -K; -K, K], linear term (eps - T, eps + T), constraint
/// sum(alpha_plus) - sum(alpha_minus) = 0, box [0, reg_c].
pub fn svr_dual_qp(
    z: &Array2<f64>,
    t: &Array1<f64>,
    epsilon: f64,
    reg_c: f64,
) -> BoxHyperplaneQp {
    let n = z.nrows();
    let gram = z.dot(&z.t());
    let mut q_mat = Array2::zeros((2 * n, 2 * n));
    for i in 0..n {
        for j in 0..n {
            q_mat[[i, j]] = gram[[i, j]];
            q_mat[[i, n + j]] = -gram[[i, j]];
            q_mat[[n + i, j]] = -gram[[i, j]];
            q_mat[[n + i, n + j]] = gram[[i, j]];
        }
    }
    let mut q_vec = Array1::zeros(2 * n);
    let mut a = Array1::zeros(2 * n);
    for i in 0..n {
        q_vec[i] = epsilon - t[i];
        q_vec[n + i] = epsilon + t[i];
        a[i] = 1.0;
        a[n + i] = -1.0;
    }
    BoxHyperplaneQp {
        q_mat,
        q_vec,
        a,
        r: 0.0,
        upper: reg_c,
    }
}

/// SVR dual objective (maximization form) at stacked `beta`.
pub fn svr_dual_objective(
    z: &Array2<f64>,
    t: &Array1<f64>,
    epsilon: f64,
    beta: &Array1<f64>,
) -> f64 {
    let n = z.nrows();
    let p = z.ncols();
    let mut w = Array1::<f64>::zeros(p);
    let mut sum_all = 0.0;
    let mut net_t = 0.0;
    for i in 0..n {
        let diff = beta[i] - beta[n + i];
        w.scaled_add(diff, &z.row(i));
        sum_all += beta[i] + beta[n + i];
        net_t += t[i] * diff;
    }
    -0.5 * w.dot(&w) - epsilon * sum_all + net_t
}

/// LP feasibility oracle: do the hulls of `z0` and `z1` intersect?
///
/// Solves the phase-1 problem for lambda >= 0, mu >= 0 with
/// sum(lambda) = sum(mu) = 1 and Z0'lambda = Z1'mu. Intersection is
/// nonempty iff the system is feasible; strict separability of the
/// compact hulls is exactly infeasibility.
pub fn hulls_intersect_lp(z0: &Array2<f64>, z1: &Array2<f64>) -> bool {
    let n0 = z0.nrows();
    let n1 = z1.nrows();
    let p = z0.ncols();
    assert_eq!(p, z1.ncols());
    let mut a = Array2::<f64>::zeros((p + 2, n0 + n1));
    let mut b = vec![0.0; p + 2];
    for c in 0..p {
        for i in 0..n0 {
            a[[c, i]] = z0[[i, c]];
        }
        for j in 0..n1 {
            a[[c, n0 + j]] = -z1[[j, c]];
        }
    }
    for i in 0..n0 {
        a[[p, i]] = 1.0;
    }
    for j in 0..n1 {
        a[[p + 1, n0 + j]] = 1.0;
    }
    b[p] = 1.0;
    b[p + 1] = 1.0;
    // Any feasible point works; minimize 0.
    let c = vec![0.0; n0 + n1];
    match solve_standard_form(&a, &b, &c).expect("oracle LP must be well formed") {
        LpOutcome::Optimal(_) => true,
        LpOutcome::Infeasible => false,
        LpOutcome::Unbounded => unreachable!("zero objective cannot be unbounded"),
    }
}

/// Two clouds separated by at least `gap` along the first coordinate:
/// group 0 lives in x1 <= -gap/2, group 1 in x1 >= gap/2, other
/// coordinates uniform on [-1, 1].
pub fn separable_instance(
    seed: u64,
    n0: usize,
    n1: usize,
    p: usize,
    gap: f64,
) -> (Array2<f64>, Array2<f64>) {
    let mut rng = rng_from_seed(seed);
    let mut fill = |n: usize, sign: f64| -> Array2<f64> {
        let mut z = Array2::zeros((n, p));
        for i in 0..n {
            z[[i, 0]] = sign * (gap / 2.0 + 0.9 + 0.9 * rng.random::<f64>());
            for c in 1..p {
                z[[i, c]] = rng.random_range(-1.0..1.0);
            }
        }
        z
    };
    let z0 = fill(n0, -1.0);
    let z1 = fill(n1, 1.0);
    (z0, z1)
}

/// Two clouds whose hulls share a point by construction: both contain
/// `q` as the midpoint of two of their vertices.
pub fn overlapping_instance(
    seed: u64,
    n0: usize,
    n1: usize,
    p: usize,
) -> (Array2<f64>, Array2<f64>) {
    assert!(n0 >= 2 && n1 >= 2, "need two points per group to embed q");
    let mut rng = rng_from_seed(seed);
    let q = Array1::from_iter((0..p).map(|_| rng.random_range(-1.0..1.0)));
    let mut fill = |n: usize| -> Array2<f64> {
        let mut z = Array2::zeros((n, p));
        let d = Array1::from_iter((0..p).map(|_| rng.random_range(-1.0..1.0)));
        for c in 0..p {
            z[[0, c]] = q[c] - d[c];
            z[[1, c]] = q[c] + d[c];
        }
        for i in 2..n {
            for c in 0..p {
                z[[i, c]] = rng.random_range(-2.0..2.0);
            }
        }
        z
    };
    let z0 = fill(n0);
    let z1 = fill(n1);
    (z0, z1)
}

/// Stacks two covariate groups into a binary-treatment dataset
/// (group 0 -> label 0, group 1 -> label 1), without outcomes.
pub fn two_group_dataset(z0: &Array2<f64>, z1: &Array2<f64>) -> Dataset {
    let n0 = z0.nrows();
    let n1 = z1.nrows();
    let p = z0.ncols();
    let mut z = Array2::zeros((n0 + n1, p));
    let mut t = vec![0.0; n0 + n1];
    for i in 0..n0 {
        for c in 0..p {
            z[[i, c]] = z0[[i, c]];
        }
    }
    for j in 0..n1 {
        for c in 0..p {
            z[[n0 + j, c]] = z1[[j, c]];
        }
        t[n0 + j] = 1.0;
    }
    let treatment = TreatmentVector::from_values(&t, TreatmentKind::Binary).unwrap();
    let names = (1..=p).map(|c| format!("z{c}")).collect();
    Dataset::new(z, treatment, None, names).unwrap()
}

/// K-level categorical dataset: level k is a Gaussian cloud centered at
/// (k * spacing, 0, ...) so adjacent levels overlap when spacing is
/// small. Outcome = level + covariate trend + noise.
pub fn categorical_dataset(seed: u64, levels: usize, per_level: usize, spacing: f64) -> Dataset {
    let mut rng = rng_from_seed(seed);
    let p = 2;
    let n = levels * per_level;
    let mut z = Array2::zeros((n, p));
    let mut t = vec![0.0; n];
    let mut y = Array1::zeros(n);
    for k in 0..levels {
        for i in 0..per_level {
            let row = k * per_level + i;
            for c in 0..p {
                let center = if c == 0 { k as f64 * spacing } else { 0.0 };
                let e: f64 = StandardNormal.sample(&mut rng);
                z[[row, c]] = center + e;
            }
            t[row] = k as f64;
            let e: f64 = StandardNormal.sample(&mut rng);
            y[row] = k as f64 + 0.5 * z[[row, 0]] + 0.25 * e;
        }
    }
    let treatment = TreatmentVector::from_values(&t, TreatmentKind::Categorical).unwrap();
    Dataset::new(z, treatment, Some(y), vec!["z1".into(), "z2".into()]).unwrap()
}

/// Bivariate two-group Gaussian design with configurable means; the
/// standard benchmark uses (0,0) and (1,1), the separated variant
/// (0,0) and (50,50). No outcome.
pub fn gaussian_two_group(seed: u64, n0: usize, n1: usize, mean0: [f64; 2], mean1: [f64; 2]) -> Dataset {
    let mut rng = rng_from_seed(seed);
    let mut z0 = Array2::zeros((n0, 2));
    let mut z1 = Array2::zeros((n1, 2));
    for i in 0..n0 {
        for c in 0..2 {
            let e: f64 = StandardNormal.sample(&mut rng);
            z0[[i, c]] = mean0[c] + e;
        }
    }
    for i in 0..n1 {
        for c in 0..2 {
            let e: f64 = StandardNormal.sample(&mut rng);
            z1[[i, c]] = mean1[c] + e;
        }
    }
    two_group_dataset(&z0, &z1)
}
