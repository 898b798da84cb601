//! Margin-based overlap diagnostics and causal effect estimation.
//!
//! This crate tests relaxed covariate overlap between treatment groups by
//! solving the closest-pair problem between convex hulls, extracts the
//! maximum-margin (support vector) subpopulation where groups genuinely
//! overlap, and estimates average causal effects on that subpopulation.
//! Binary, multi-level, and continuous treatments are supported; for
//! continuous treatments the margin comes from an epsilon-insensitive
//! regression and effects are estimated with stabilized weights.
//!
//! Entry points:
//! - [`dataset`]: validated study data, CSV loading, standardization,
//!   simulation families.
//! - [`geometry`]: convex hull closest pair, separation certificates,
//!   relaxed overlap verdicts.
//! - [`svm`] / [`svr`]: linear maximum-margin solvers and margin
//!   subpopulation extraction.
//! - [`causal`]: effect estimators (naive, trimmed, matched, weighted)
//!   and the end-to-end [`causal::margin_pipeline`].
//! - [`diagnostics`]: bootstrap stability of the margin size and a
//!   decision-tree description of who is in the margin.

// Validation sites use `!(x >= 0.0)` and friends on purpose: the negated
// form also rejects NaN, which `x < 0.0` silently accepts.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod causal;
pub mod dataset;
pub mod diagnostics;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod rng;
pub mod simplex;
pub mod svm;
pub mod svr;

pub mod cli;

pub use error::{Error, Result};

/// Library version embedded in every CLI output record.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
