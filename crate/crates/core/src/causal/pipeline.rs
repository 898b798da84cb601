//! The three-step margin workflow as a single call: fit the treatment
//! assignment model, extract the margin subpopulation, estimate the
//! effect on it. The branch is selected by the treatment kind; every
//! intermediate artifact is returned so callers can audit the run.

use super::matching::{matched_estimate, optimal_pair_match, MatchMetric, MatchSet};
use super::weights::{
    stabilized_weights, weighted_outcome_regression, StabilizedWeights, TreatmentModel,
};
use super::{CausalEstimate, Estimand};
use crate::dataset::{self, Dataset, StandardizationRecord, TreatmentVector};
use crate::error::{Error, Result};
use crate::linalg;
use crate::svm::{self, KktReport, MarginReport, MetaMargin, SvmModel, SvmParams};
use crate::svr::{self, SvrModel, SvrParams};
use ndarray::{Array1, Axis};
use serde::Serialize;

/// Everything the pipeline needs beyond the data.
#[derive(Debug, Clone, Serialize)]
pub struct PipelineConfig {
    pub svm: SvmParams,
    pub svr: SvrParams,
    pub margin_tol: f64,
    /// Matching distance for the binary branch.
    pub metric: MatchMetric,
    /// Dose model for the continuous branch's weight denominator.
    pub dose_model: TreatmentModel,
    /// Center and scale covariates before fitting (recommended; margin
    /// membership is scale-sensitive).
    pub standardize: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            svm: SvmParams::default(),
            svr: SvrParams::default(),
            margin_tol: svm::DEFAULT_MARGIN_TOL,
            metric: MatchMetric::PropensityAbsDiff,
            dose_model: TreatmentModel::LinearLeastSquares,
            standardize: true,
        }
    }
}

/// Branch-specific artifacts.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "branch", rename_all = "kebab-case")]
pub enum PipelineDetail {
    Binary {
        svm: SvmModel,
        kkt: KktReport,
        matches: MatchSet,
    },
    Categorical {
        meta: MetaMargin,
    },
    Continuous {
        svr: SvrModel,
        weights: StabilizedWeights,
    },
}

/// Output of [`margin_pipeline`].
#[derive(Debug, Clone, Serialize)]
pub struct PipelineResult {
    /// The margin subpopulation. For categorical treatments this is the
    /// union over level pairs; per-pair scores live in the detail.
    pub margin: MarginReport,
    /// One estimate for binary/continuous; one per usable level pair for
    /// categorical.
    pub estimates: Vec<CausalEstimate>,
    /// Present when the covariates were standardized.
    pub standardization: Option<StandardizationRecord>,
    pub detail: PipelineDetail,
}

/// Runs assignment-model fit, margin extraction, and estimation.
///
/// Estimation always uses the original (unstandardized) outcome and dose;
/// standardization only affects the covariates the models see.
pub fn margin_pipeline(d: &Dataset, config: &PipelineConfig) -> Result<PipelineResult> {
    let y = d
        .outcome()
        .ok_or_else(|| Error::Schema("outcome column required for the pipeline".into()))?;
    if !(config.margin_tol >= 0.0) || !config.margin_tol.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "margin_tol must be non-negative, got {}",
            config.margin_tol
        )));
    }
    let (work, standardization) = if config.standardize {
        let (w, record) = dataset::standardize(d)?;
        (w, Some(record))
    } else {
        (d.clone(), None)
    };

    match d.treatment() {
        TreatmentVector::Binary { .. } => {
            let model = svm::fit_linear_svm(&work, &config.svm)?;
            let margin = svm::margin_set(&model, &work, config.margin_tol)?;
            if margin.kept.is_empty() {
                return Err(Error::EmptyMargin("margin_set".into()));
            }
            let kkt = svm::kkt_report(&model, &work)?;
            let matches = optimal_pair_match(&work, &margin.kept, config.metric)?;
            let estimate = matched_estimate(&matches, y)?;
            Ok(PipelineResult {
                margin,
                estimates: vec![estimate],
                standardization,
                detail: PipelineDetail::Binary {
                    svm: model,
                    kkt,
                    matches,
                },
            })
        }
        TreatmentVector::Categorical { levels, .. } => {
            let meta = svm::fit_meta_margin(&work, &config.svm, config.margin_tol)?;
            if meta.kept.is_empty() {
                return Err(Error::EmptyMargin("meta_margin".into()));
            }
            let mut estimates = Vec::new();
            for pair in &meta.pairs {
                let (lo, hi) = pair.levels;
                let y_lo: Array1<f64> = pair
                    .kept
                    .iter()
                    .filter(|&&i| levels[i] == lo)
                    .map(|&i| y[i])
                    .collect();
                let y_hi: Array1<f64> = pair
                    .kept
                    .iter()
                    .filter(|&&i| levels[i] == hi)
                    .map(|&i| y[i])
                    .collect();
                if y_lo.len() < 2 || y_hi.len() < 2 {
                    continue;
                }
                let s_lo = linalg::sample_sd(&y_lo.view());
                let s_hi = linalg::sample_sd(&y_hi.view());
                let stderr = (s_hi * s_hi / y_hi.len() as f64
                    + s_lo * s_lo / y_lo.len() as f64)
                    .sqrt();
                estimates.push(CausalEstimate {
                    estimand: Estimand::AceSubpop,
                    method: format!("difference-in-means (level {hi} vs level {lo})"),
                    point: linalg::mean(&y_hi.view()) - linalg::mean(&y_lo.view()),
                    stderr,
                    n_used: y_lo.len() + y_hi.len(),
                });
            }
            if estimates.is_empty() {
                return Err(Error::InsufficientData(
                    "every level pair had fewer than 2 margin subjects on a side".into(),
                ));
            }
            let margin = MarginReport {
                kept: meta.kept.clone(),
                rule: format!(
                    "union over level pairs of T_i*(w.z_i - b) < 1 - {:e}",
                    config.margin_tol
                ),
                scores: Vec::new(),
                margin_tol: config.margin_tol,
            };
            Ok(PipelineResult {
                margin,
                estimates,
                standardization,
                detail: PipelineDetail::Categorical { meta },
            })
        }
        TreatmentVector::Continuous(doses) => {
            let model = svr::fit_linear_svr(&work, &config.svr)?;
            let margin = svr::continuous_margin_set(&model, config.margin_tol)?;
            if margin.kept.is_empty() {
                return Err(Error::EmptyMargin("continuous_margin_set".into()));
            }
            let zk = work.covariates().select(Axis(0), &margin.kept);
            let tk: Array1<f64> = margin.kept.iter().map(|&i| doses[i]).collect();
            let yk: Array1<f64> = margin.kept.iter().map(|&i| y[i]).collect();
            let weights = stabilized_weights(&zk, &tk, &config.dose_model)?;
            let estimate = weighted_outcome_regression(&yk, &tk, &weights.weights)?;
            Ok(PipelineResult {
                margin,
                estimates: vec![estimate],
                standardization,
                detail: PipelineDetail::Continuous {
                    svr: model,
                    weights,
                },
            })
        }
    }
}
