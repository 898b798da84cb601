//! Logistic propensity score model fitted by iteratively reweighted least
//! squares, and overlap trimming on the fitted scores.

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg;
use ndarray::{Array1, Array2};
use serde::Serialize;

/// Fitted probabilities are clipped into [CLIP, 1 - CLIP].
const CLIP: f64 = 1e-12;
/// Convergence: max absolute coefficient update.
const COEF_TOL: f64 = 1e-8;
const MAX_ITER: usize = 100;
/// |linear predictor| beyond this with perfect sign classification is
/// treated as separation.
const SEPARATION_ETA: f64 = 30.0;

/// Logistic regression of treatment on covariates (with intercept).
#[derive(Debug, Clone, Serialize)]
pub struct PropensityModel {
    /// Intercept first, then one coefficient per covariate column.
    pub coefficients: Vec<f64>,
    /// P(T = 1 | Z_i), clipped into the open unit interval.
    pub fitted: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// True when the data are (quasi-)separated: the likelihood has no
    /// finite maximizer and `fitted` should be treated with suspicion.
    pub separation_flag: bool,
    /// How many fitted values the clipping touched.
    pub n_clipped: usize,
}

fn log_likelihood(eta: &Array1<f64>, y01: &Array1<f64>) -> f64 {
    let mut ll = 0.0;
    for (e, y) in eta.iter().zip(y01.iter()) {
        // log(1 + exp(e)) computed stably.
        let softplus = e.max(0.0) + (-e.abs()).exp().ln_1p();
        ll += y * e - softplus;
    }
    ll
}

/// Fits P(T = 1 | Z) by Newton steps with halving. Detects separation
/// (diverging coefficients that classify perfectly) instead of looping;
/// in that case `converged` is false and the flag is set.
pub fn fit_propensity_logistic(d: &Dataset) -> Result<PropensityModel> {
    let coded = d.binary_coded()?;
    let n = d.n();
    let p = d.p();
    let y01: Array1<f64> = coded.iter().map(|&c| if c > 0.0 { 1.0 } else { 0.0 }).collect();
    let mut x = Array2::<f64>::zeros((n, p + 1));
    for i in 0..n {
        x[[i, 0]] = 1.0;
        for j in 0..p {
            x[[i, j + 1]] = d.covariates()[[i, j]];
        }
    }

    let mut beta = Array1::<f64>::zeros(p + 1);
    let mut eta = x.dot(&beta);
    let mut ll = log_likelihood(&eta, &y01);
    let mut converged = false;
    let mut separation = false;
    let mut iterations = 0usize;

    for iter in 1..=MAX_ITER {
        iterations = iter;
        let mu: Array1<f64> = eta.iter().map(|&e| 1.0 / (1.0 + (-e).exp())).collect();
        let wts: Array1<f64> = mu.iter().map(|&m| (m * (1.0 - m)).max(1e-10)).collect();
        // Newton step: (X'WX) delta = X'(y - mu).
        let mut xtwx = Array2::<f64>::zeros((p + 1, p + 1));
        let mut grad = Array1::<f64>::zeros(p + 1);
        for i in 0..n {
            let r = y01[i] - mu[i];
            for a in 0..p + 1 {
                grad[a] += x[[i, a]] * r;
                for b in a..p + 1 {
                    xtwx[[a, b]] += wts[i] * x[[i, a]] * x[[i, b]];
                }
            }
        }
        for a in 0..p + 1 {
            for b in 0..a {
                xtwx[[a, b]] = xtwx[[b, a]];
            }
        }
        let delta = linalg::solve(&xtwx.view(), &grad.view())?;

        // Halve the step until the likelihood does not decrease.
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..12 {
            let cand = &beta + &(&delta * step);
            let cand_eta = x.dot(&cand);
            let cand_ll = log_likelihood(&cand_eta, &y01);
            if cand_ll >= ll - 1e-12 {
                beta = cand;
                eta = cand_eta;
                ll = cand_ll;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            // Step direction not usable; treat as converged at the
            // current point.
            converged = true;
            break;
        }

        // Separation check: perfect sign classification with a diverging
        // linear predictor.
        let max_eta = eta.iter().fold(0.0f64, |m, e| m.max(e.abs()));
        if max_eta > SEPARATION_ETA {
            let perfect = (0..n).all(|i| {
                (y01[i] > 0.5 && eta[i] > 0.0) || (y01[i] < 0.5 && eta[i] < 0.0)
            });
            if perfect {
                separation = true;
                break;
            }
        }

        let max_delta = delta.iter().fold(0.0f64, |m, v| m.max((v * step).abs()));
        if max_delta <= COEF_TOL {
            converged = true;
            break;
        }
    }

    let mut n_clipped = 0usize;
    let fitted: Vec<f64> = eta
        .iter()
        .map(|&e| {
            let mu = 1.0 / (1.0 + (-e).exp());
            if mu < CLIP {
                n_clipped += 1;
                CLIP
            } else if mu > 1.0 - CLIP {
                n_clipped += 1;
                1.0 - CLIP
            } else {
                mu
            }
        })
        .collect();

    Ok(PropensityModel {
        coefficients: beta.to_vec(),
        fitted,
        converged: converged && !separation,
        iterations,
        separation_flag: separation,
        n_clipped,
    })
}

/// Subjects whose fitted propensity lies in [c, 1 - c]. `c` in [0, 0.5).
pub fn crump_trim(model: &PropensityModel, c: f64) -> Result<Vec<usize>> {
    if !(0.0..0.5).contains(&c) {
        return Err(Error::InvalidArgument(format!(
            "trim threshold must be in [0, 0.5), got {c}"
        )));
    }
    Ok(model
        .fitted
        .iter()
        .enumerate()
        .filter(|(_, &e)| e >= c && e <= 1.0 - c)
        .map(|(i, _)| i)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{TreatmentKind, TreatmentVector};
    use ndarray::array;

    fn logistic_dataset() -> Dataset {
        // Assignment probability increasing in z; overlapping groups.
        let z = array![
            [-2.0],
            [-1.5],
            [-1.0],
            [-0.5],
            [0.0],
            [0.3],
            [0.5],
            [1.0],
            [1.5],
            [2.0],
            [-0.3],
            [0.8]
        ];
        let t = vec![0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.0];
        let tv = TreatmentVector::from_values(&t, TreatmentKind::Binary).unwrap();
        Dataset::new(z, tv, None, vec!["z1".into()]).unwrap()
    }

    #[test]
    fn fits_monotone_probabilities() {
        let m = fit_propensity_logistic(&logistic_dataset()).unwrap();
        assert!(m.converged);
        assert!(!m.separation_flag);
        assert!(m.coefficients[1] > 0.0);
        // Probabilities in the open interval and monotone in z.
        for f in &m.fitted {
            assert!(*f > 0.0 && *f < 1.0);
        }
        assert!(m.fitted[0] < m.fitted[9]);
    }

    #[test]
    fn detects_separation() {
        let z = array![[-2.0], [-1.0], [-0.5], [0.5], [1.0], [2.0]];
        let t = vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0];
        let tv = TreatmentVector::from_values(&t, TreatmentKind::Binary).unwrap();
        let d = Dataset::new(z, tv, None, vec!["z1".into()]).unwrap();
        let m = fit_propensity_logistic(&d).unwrap();
        assert!(m.separation_flag);
        assert!(!m.converged);
    }

    #[test]
    fn trim_keeps_moderate_scores() {
        let m = PropensityModel {
            coefficients: vec![],
            fitted: vec![0.05, 0.2, 0.5, 0.8, 0.95, 0.1],
            converged: true,
            iterations: 1,
            separation_flag: false,
            n_clipped: 0,
        };
        assert_eq!(crump_trim(&m, 0.1).unwrap(), vec![1, 2, 3, 5]);
        assert_eq!(crump_trim(&m, 0.0).unwrap(), vec![0, 1, 2, 3, 4, 5]);
        assert!(crump_trim(&m, 0.5).is_err());
        assert!(crump_trim(&m, -0.1).is_err());
    }
}
