//! Causal effect estimators and the margin-based analysis pipeline.
//!
//! Every estimator returns a [`CausalEstimate`] tagged with the estimand
//! it targets: effects computed on a margin or trimmed subpopulation are
//! labeled as subpopulation estimands, never as the full-population
//! effect.

mod matching;
mod pipeline;
mod propensity;
mod weights;

pub use matching::{
    acet_matched_estimate, matched_estimate, optimal_pair_match, MatchMetric, MatchSet,
    MatchedPair,
};
pub use pipeline::{margin_pipeline, PipelineConfig, PipelineDetail, PipelineResult};
pub use propensity::{crump_trim, fit_propensity_logistic, PropensityModel};
pub use weights::{
    stabilized_weights, weighted_outcome_regression, StabilizedWeights, TreatmentModel,
};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg;
use ndarray::Array1;
use serde::Serialize;

/// What a point estimate is an estimate of.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimand {
    /// Average causal effect over the full sample.
    Ace,
    /// Average causal effect over an explicit subpopulation (margin,
    /// trimmed set, or matched set).
    AceSubpop,
    /// Average causal effect among the treated.
    Acet,
    /// Slope of the outcome in the dose for continuous treatments.
    DoseSlope,
}

/// A point estimate with its standard error and provenance.
#[derive(Debug, Clone, Serialize)]
pub struct CausalEstimate {
    pub estimand: Estimand,
    pub method: String,
    pub point: f64,
    pub stderr: f64,
    /// Number of subjects the estimate actually uses.
    pub n_used: usize,
}

/// Difference in mean outcomes over the rows listed in `keep`.
fn diff_in_means(d: &Dataset, keep: &[usize]) -> Result<(f64, f64, usize)> {
    let y = d
        .outcome()
        .ok_or_else(|| Error::Schema("outcome column required for estimation".into()))?;
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
    let y0: Array1<f64> = keep
        .iter()
        .filter(|&&i| coded[i] < 0.0)
        .map(|&i| y[i])
        .collect();
    let y1: Array1<f64> = keep
        .iter()
        .filter(|&&i| coded[i] > 0.0)
        .map(|&i| y[i])
        .collect();
    if y0.len() < 2 || y1.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 subjects per arm, found {} control and {} treated",
            y0.len(),
            y1.len()
        )));
    }
    let m0 = linalg::mean(&y0.view());
    let m1 = linalg::mean(&y1.view());
    let s0 = linalg::sample_sd(&y0.view());
    let s1 = linalg::sample_sd(&y1.view());
    let point = m1 - m0;
    let stderr =
        (s1 * s1 / y1.len() as f64 + s0 * s0 / y0.len() as f64).sqrt();
    Ok((point, stderr, keep.len()))
}

/// Unadjusted difference in means over the full sample. Biased whenever
/// treatment assignment depends on the covariates; reported as a baseline.
pub fn naive_ace(d: &Dataset) -> Result<CausalEstimate> {
    let all: Vec<usize> = (0..d.n()).collect();
    let (point, stderr, n_used) = diff_in_means(d, &all)?;
    Ok(CausalEstimate {
        estimand: Estimand::Ace,
        method: "difference-in-means".into(),
        point,
        stderr,
        n_used,
    })
}

/// Difference in means restricted to `keep`. Same computation as
/// [`naive_ace`], so passing every index reproduces it bit for bit; the
/// estimand tag records the restriction.
pub fn subpopulation_ace(d: &Dataset, keep: &[usize]) -> Result<CausalEstimate> {
    let (point, stderr, n_used) = diff_in_means(d, keep)?;
    Ok(CausalEstimate {
        estimand: Estimand::AceSubpop,
        method: "difference-in-means".into(),
        point,
        stderr,
        n_used,
    })
}
