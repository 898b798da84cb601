//! Stabilized density-ratio weights for continuous treatments, and the
//! weighted outcome regression that consumes them.
//!
//! The weight for subject i is f(T_i) / f(T_i | Z_i) with normal residual
//! models on both sides: the numerator uses the intercept-only model, the
//! denominator a covariate model for the dose. Weighting the margin
//! subpopulation this way removes the dose-covariate association that the
//! margin selection would otherwise leave in the outcome regression.

use super::{CausalEstimate, Estimand};
use crate::error::{Error, Result};
use crate::linalg;
use crate::svr::{fit_linear_svr_xy, SvrParams};
use ndarray::{Array1, Array2};
use serde::Serialize;

/// Model for the dose given covariates (the weight denominator).
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TreatmentModel {
    /// T ~ intercept + Z by ordinary least squares.
    LinearLeastSquares,
    /// T ~ w . Z + b by epsilon-insensitive support vector regression.
    Svr(SvrParams),
}

/// Stabilized weights with the residual diagnostics behind them.
#[derive(Debug, Clone, Serialize)]
pub struct StabilizedWeights {
    pub weights: Vec<f64>,
    /// Residual scale of the covariate (denominator) model.
    pub sigma_hat: f64,
    /// T_i minus the covariate-model fit.
    pub residuals: Vec<f64>,
    /// Residual scale of the intercept-only (numerator) model.
    pub null_sigma_hat: f64,
    pub null_residuals: Vec<f64>,
    /// Human-readable description of the denominator model.
    pub model: String,
}

/// Sample standard deviation (n-1 denominator) of a residual vector.
fn residual_sd(v: &[f64]) -> f64 {
    let arr = Array1::from(v.to_vec());
    linalg::sample_sd(&arr.view())
}

/// Fits both dose models and forms w_i = f(T_i) / f(T_i | Z_i).
///
/// With no covariates the two models coincide and every weight is
/// exactly 1.0, so downstream estimates reduce to their unweighted
/// versions bit for bit.
pub fn stabilized_weights(
    z: &Array2<f64>,
    t: &Array1<f64>,
    model: &TreatmentModel,
) -> Result<StabilizedWeights> {
    let n = z.nrows();
    let p = z.ncols();
    if t.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: t.len(),
        });
    }
    if n < p + 3 {
        return Err(Error::InsufficientData(format!(
            "{n} subjects cannot support a {p}-covariate dose model plus a residual scale"
        )));
    }
    if z.iter().any(|v| !v.is_finite()) || t.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("covariates or doses".into()));
    }

    let t_bar = linalg::mean(&t.view());
    let null_residuals: Vec<f64> = t.iter().map(|v| v - t_bar).collect();
    let null_sigma_hat = residual_sd(&null_residuals);
    if null_sigma_hat <= 1e-12 {
        return Err(Error::Degenerate(
            "dose is constant; density-ratio weights are undefined".into(),
        ));
    }

    if p == 0 {
        return Ok(StabilizedWeights {
            weights: vec![1.0; n],
            sigma_hat: null_sigma_hat,
            residuals: null_residuals.clone(),
            null_sigma_hat,
            null_residuals,
            model: "intercept-only (no covariates)".into(),
        });
    }

    let (residuals, label) = match model {
        TreatmentModel::LinearLeastSquares => {
            let mut x = Array2::<f64>::ones((n, p + 1));
            for i in 0..n {
                for j in 0..p {
                    x[[i, j + 1]] = z[[i, j]];
                }
            }
            let beta = linalg::least_squares(&x.view(), &t.view())?;
            let fitted = x.dot(&beta);
            let r: Vec<f64> = (0..n).map(|i| t[i] - fitted[i]).collect();
            (r, "linear-least-squares".to_string())
        }
        TreatmentModel::Svr(params) => {
            let m = fit_linear_svr_xy(z, t, params)?;
            let label = format!("svr(epsilon={}, reg_c={})", m.epsilon, m.reg_c);
            (m.residuals, label)
        }
    };
    let sigma_hat = residual_sd(&residuals);
    if sigma_hat <= 1e-12 {
        return Err(Error::Degenerate(
            "dose model fits the dose exactly; density-ratio weights are unbounded".into(),
        ));
    }

    let weights: Vec<f64> = (0..n)
        .map(|i| {
            let num = null_residuals[i] * null_residuals[i]
                / (2.0 * null_sigma_hat * null_sigma_hat);
            let den = residuals[i] * residuals[i] / (2.0 * sigma_hat * sigma_hat);
            (sigma_hat / null_sigma_hat) * (den - num).exp()
        })
        .collect();
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::NonFinite("stabilized weights overflowed".into()));
    }

    Ok(StabilizedWeights {
        weights,
        sigma_hat,
        residuals,
        null_sigma_hat,
        null_residuals,
        model: label,
    })
}

/// Weighted regression of the outcome on (1, dose) with an HC0 sandwich
/// standard error for the dose slope.
pub fn weighted_outcome_regression(
    y: &Array1<f64>,
    t: &Array1<f64>,
    weights: &[f64],
) -> Result<CausalEstimate> {
    let n = y.len();
    if t.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: t.len(),
        });
    }
    if weights.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: weights.len(),
        });
    }
    if n < 3 {
        return Err(Error::InsufficientData(format!(
            "weighted regression needs at least 3 subjects, found {n}"
        )));
    }
    if y.iter().any(|v| !v.is_finite()) || t.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("outcomes or doses".into()));
    }
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::NonFinite("weights".into()));
    }
    if let Some(w) = weights.iter().find(|&&w| w <= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "weights must be strictly positive, found {w}"
        )));
    }
    if linalg::sample_sd(&t.view()) <= 1e-12 {
        return Err(Error::Degenerate(
            "dose has no variation among the regressed subjects".into(),
        ));
    }

    let mut x = Array2::<f64>::ones((n, 2));
    for i in 0..n {
        x[[i, 1]] = t[i];
    }
    let w = Array1::from(weights.to_vec());
    let beta = linalg::weighted_least_squares(&x.view(), &y.view(), Some(&w.view()))?;
    let fitted = x.dot(&beta);

    // Sandwich: A^{-1} B A^{-1} with A = X' W X and B = sum w_i^2 e_i^2 x_i x_i'.
    let mut a = Array2::<f64>::zeros((2, 2));
    let mut bmat = Array2::<f64>::zeros((2, 2));
    for i in 0..n {
        let e = y[i] - fitted[i];
        let we2 = weights[i] * weights[i] * e * e;
        for r in 0..2 {
            for c in 0..2 {
                let xx = x[[i, r]] * x[[i, c]];
                a[[r, c]] += weights[i] * xx;
                bmat[[r, c]] += we2 * xx;
            }
        }
    }
    let a_inv = linalg::inverse_spd(&a.view())?;
    let var = a_inv.dot(&bmat).dot(&a_inv);
    let stderr = var[[1, 1]].max(0.0).sqrt();

    Ok(CausalEstimate {
        estimand: Estimand::DoseSlope,
        method: "weighted-least-squares (HC0)".into(),
        point: beta[1],
        stderr,
        n_used: n,
    })
}
