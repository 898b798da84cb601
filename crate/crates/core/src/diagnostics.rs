//! Run-level diagnostics: the bootstrap distribution of the margin size
//! and a small classification tree describing who lands in the margin.

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};
use crate::svm::{fit_linear_svm, margin_set, SvmParams};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

pub const DEFAULT_BOOTSTRAP_B: usize = 200;
pub const DEFAULT_MAX_DEPTH: usize = 3;

/// Default minimum leaf size for [`fit_margin_tree`].
pub fn default_min_leaf(n: usize) -> usize {
    5.max(n / 50)
}

/// Bootstrap distribution of the margin cardinality.
#[derive(Debug, Clone, Serialize)]
pub struct BootstrapMarginDist {
    /// One entry per replicate, in replicate order. `None` marks a skipped
    /// replicate whose resample collapsed a treatment arm.
    pub sizes: Vec<Option<usize>>,
    pub b: usize,
    pub master_seed: u64,
    /// Margin size on the data as given.
    pub observed_size: usize,
}

impl BootstrapMarginDist {
    pub fn skipped(&self) -> usize {
        self.sizes.iter().filter(|s| s.is_none()).count()
    }

    /// (size, count) pairs over completed replicates, ascending by size.
    pub fn histogram(&self) -> Vec<(usize, usize)> {
        let mut counts = std::collections::BTreeMap::new();
        for s in self.sizes.iter().flatten() {
            *counts.entry(*s).or_insert(0usize) += 1;
        }
        counts.into_iter().collect()
    }
}

fn margin_size(d: &Dataset, params: &SvmParams, margin_tol: f64) -> Result<usize> {
    let model = fit_linear_svm(d, params)?;
    Ok(margin_set(&model, d, margin_tol)?.kept.len())
}

/// Seeded rows-with-replacement resampler used by [`bootstrap_margin_size`].
pub fn resample_rows(seed: u64, n: usize) -> Vec<usize> {
    let mut rng = rng_from_seed(seed);
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

/// Refits the margin on `b` row resamples of a binary dataset.
///
/// Replicate r draws its rows from a seed derived from `(master_seed, r)`,
/// so the result is independent of scheduling. The dataset is used exactly
/// as given; standardize first if the margin should be scale-free.
pub fn bootstrap_margin_size(
    d: &Dataset,
    b: usize,
    params: &SvmParams,
    margin_tol: f64,
    master_seed: u64,
) -> Result<BootstrapMarginDist> {
    bootstrap_margin_size_with(d, b, params, margin_tol, master_seed, resample_rows)
}

/// [`bootstrap_margin_size`] with an injectable resampler: `sampler(seed,
/// n)` returns the row multiset of one replicate. Exists so tests can
/// force degenerate or identity resamples.
pub fn bootstrap_margin_size_with(
    d: &Dataset,
    b: usize,
    params: &SvmParams,
    margin_tol: f64,
    master_seed: u64,
    sampler: impl Fn(u64, usize) -> Vec<usize> + Sync,
) -> Result<BootstrapMarginDist> {
    if b == 0 {
        return Err(Error::InvalidArgument(
            "bootstrap needs at least one replicate".into(),
        ));
    }
    d.binary_coded()?;
    let observed_size = margin_size(d, params, margin_tol)?;
    let sizes = (0..b)
        .into_par_iter()
        .map(|r| {
            let rows = sampler(derive_seed(master_seed, r as u64), d.n());
            match d.restrict(&rows) {
                Ok(rep) => margin_size(&rep, params, margin_tol).map(Some),
                // A resample that collapses an arm is skipped, not fatal.
                Err(Error::Schema(_)) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BootstrapMarginDist {
        sizes,
        b,
        master_seed,
        observed_size,
    })
}

/// Binary classification tree over margin membership.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "node", rename_all = "kebab-case")]
pub enum TreeNode {
    /// Rows with `z[feature] < threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        margin_probability: f64,
        count: usize,
    },
}

impl TreeNode {
    /// Indented text rendering; `names` supplies feature labels.
    pub fn render(&self, names: &[String]) -> String {
        let mut out = String::new();
        self.render_into(names, 0, &mut out);
        out
    }

    fn render_into(&self, names: &[String], depth: usize, out: &mut String) {
        use std::fmt::Write;
        let pad = "  ".repeat(depth);
        match self {
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                let name = names
                    .get(*feature)
                    .cloned()
                    .unwrap_or_else(|| format!("x{feature}"));
                writeln!(out, "{pad}if {name} < {threshold}:").unwrap();
                left.render_into(names, depth + 1, out);
                writeln!(out, "{pad}else:").unwrap();
                right.render_into(names, depth + 1, out);
            }
            TreeNode::Leaf {
                margin_probability,
                count,
            } => {
                writeln!(
                    out,
                    "{pad}margin probability {margin_probability:.3} ({count} subjects)"
                )
                .unwrap();
            }
        }
    }
}

fn gini(p: f64) -> f64 {
    2.0 * p * (1.0 - p)
}

fn make_leaf(in_margin: &[bool], rows: &[usize]) -> TreeNode {
    let k = rows.iter().filter(|&&i| in_margin[i]).count();
    TreeNode::Leaf {
        margin_probability: k as f64 / rows.len() as f64,
        count: rows.len(),
    }
}

fn grow(
    d: &Dataset,
    in_margin: &[bool],
    rows: &[usize],
    depth_left: usize,
    min_leaf: usize,
) -> TreeNode {
    let n = rows.len();
    let k = rows.iter().filter(|&&i| in_margin[i]).count();
    if depth_left == 0 || k == 0 || k == n || n < 2 * min_leaf {
        return make_leaf(in_margin, rows);
    }
    let parent = gini(k as f64 / n as f64);
    // (feature, threshold, decrease); strict improvement keeps the first
    // (lowest-feature, lowest-threshold) maximizer.
    let mut best: Option<(usize, f64, f64)> = None;
    for j in 0..d.p() {
        let mut vals: Vec<(f64, bool)> = rows
            .iter()
            .map(|&i| (d.covariates()[[i, j]], in_margin[i]))
            .collect();
        vals.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut left_n = 0usize;
        let mut left_k = 0usize;
        for idx in 0..n - 1 {
            left_n += 1;
            if vals[idx].1 {
                left_k += 1;
            }
            if vals[idx].0 == vals[idx + 1].0 {
                continue;
            }
            let thr = 0.5 * (vals[idx].0 + vals[idx + 1].0);
            // A midpoint that rounds onto a neighbor cannot realize the
            // split as `z < thr`; skip it.
            if !(vals[idx].0 < thr && thr <= vals[idx + 1].0) {
                continue;
            }
            let right_n = n - left_n;
            if left_n < min_leaf || right_n < min_leaf {
                continue;
            }
            let right_k = k - left_k;
            let dec = parent
                - (left_n as f64 / n as f64) * gini(left_k as f64 / left_n as f64)
                - (right_n as f64 / n as f64) * gini(right_k as f64 / right_n as f64);
            if dec > 1e-12 && best.is_none_or(|(_, _, cur)| dec > cur) {
                best = Some((j, thr, dec));
            }
        }
    }
    match best {
        None => make_leaf(in_margin, rows),
        Some((feature, threshold, _)) => {
            let left_rows: Vec<usize> = rows
                .iter()
                .copied()
                .filter(|&i| d.covariates()[[i, feature]] < threshold)
                .collect();
            let right_rows: Vec<usize> = rows
                .iter()
                .copied()
                .filter(|&i| d.covariates()[[i, feature]] >= threshold)
                .collect();
            TreeNode::Split {
                feature,
                threshold,
                left: Box::new(grow(d, in_margin, &left_rows, depth_left - 1, min_leaf)),
                right: Box::new(grow(d, in_margin, &right_rows, depth_left - 1, min_leaf)),
            }
        }
    }
}

/// Greedy Gini tree for margin membership. Single-class labels give a
/// single leaf. Ties break to the lowest feature index, then the lowest
/// threshold, so the tree is deterministic.
pub fn fit_margin_tree(
    d: &Dataset,
    in_margin: &[bool],
    max_depth: usize,
    min_leaf: usize,
) -> Result<TreeNode> {
    if in_margin.len() != d.n() {
        return Err(Error::DimensionMismatch {
            expected: d.n(),
            actual: in_margin.len(),
        });
    }
    if max_depth < 1 {
        return Err(Error::InvalidArgument(format!(
            "max_depth must be at least 1, got {max_depth}"
        )));
    }
    if min_leaf < 1 {
        return Err(Error::InvalidArgument(format!(
            "min_leaf must be at least 1, got {min_leaf}"
        )));
    }
    let rows: Vec<usize> = (0..d.n()).collect();
    Ok(grow(d, in_margin, &rows, max_depth, min_leaf))
}

/// Probability of the leaf `z` reaches.
pub fn predict_tree(tree: &TreeNode, z: &[f64]) -> Result<f64> {
    match tree {
        TreeNode::Leaf {
            margin_probability, ..
        } => Ok(*margin_probability),
        TreeNode::Split {
            feature,
            threshold,
            left,
            right,
        } => {
            if *feature >= z.len() {
                return Err(Error::DimensionMismatch {
                    expected: *feature + 1,
                    actual: z.len(),
                });
            }
            if z[*feature] < *threshold {
                predict_tree(left, z)
            } else {
                predict_tree(right, z)
            }
        }
    }
}
