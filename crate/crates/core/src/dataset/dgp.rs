//! Synthetic data generating processes used by the simulation studies and
//! the test suite.
//!
//! Each family is fully determined by its parameters and the seed. Draws
//! come from a ChaCha8 stream in a fixed documented order, so datasets are
//! reproducible across platforms and runs.

use super::{Dataset, TreatmentKind, TreatmentVector};
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;
use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Parameterized data generating process.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum DgpSpec {
    /// One covariate, two well-separated normal groups. Draw order:
    /// all control z's, then all treated z's.
    Fig1Univariate {
        n: usize,
        mean0: f64,
        mean1: f64,
        seed: u64,
    },
    /// Two covariates, identity covariance within group. Draw order:
    /// control rows then treated rows, (z1, z2) within a row.
    Fig2Bivariate {
        n0: usize,
        n1: usize,
        mean0: [f64; 2],
        mean1: [f64; 2],
        seed: u64,
    },
    /// Uniform covariates with deterministic treatment outside
    /// [0.1, 0.9] on the first covariate and logistic assignment inside.
    /// Y = tau*T + Z'gamma + N(0,1). Draw order per row: z's, assignment
    /// uniform (only when 0.1 <= z1 <= 0.9), outcome noise.
    PositivityViolation {
        n: usize,
        p: usize,
        tau: f64,
        gamma: Vec<f64>,
        slope: f64,
        seed: u64,
    },
    /// Continuous dose: Z uniform on [0,1]^p, T = Z'delta + N(0, sigma_t^2),
    /// Y = tau*T + Z'gamma + N(0,1). Draw order per row: z's, dose noise,
    /// outcome noise. Bounded covariates keep the stabilized density
    /// ratios square-integrable; Gaussian covariates would not.
    ContinuousTreatment {
        n: usize,
        p: usize,
        tau: f64,
        delta: Vec<f64>,
        gamma: Vec<f64>,
        sigma_t: f64,
        seed: u64,
    },
}

impl DgpSpec {
    /// Well-separated univariate groups (means -2 and 2).
    pub fn fig1(n: usize, seed: u64) -> Self {
        DgpSpec::Fig1Univariate {
            n,
            mean0: -2.0,
            mean1: 2.0,
            seed,
        }
    }

    /// Overlapping bivariate groups (means (0,0) and (1,1)).
    pub fn fig2(n0: usize, n1: usize, seed: u64) -> Self {
        DgpSpec::Fig2Bivariate {
            n0,
            n1,
            mean0: [0.0, 0.0],
            mean1: [1.0, 1.0],
            seed,
        }
    }

    /// Two uniform covariates, deterministic tails on z1, confounded
    /// outcome with effect `tau`.
    pub fn positivity(n: usize, tau: f64, seed: u64) -> Self {
        DgpSpec::PositivityViolation {
            n,
            p: 2,
            tau,
            gamma: vec![3.0, 1.0],
            slope: 4.0,
            seed,
        }
    }

    /// Two uniform covariates confounding a continuous dose with effect
    /// `tau` per unit dose.
    pub fn continuous(n: usize, tau: f64, seed: u64) -> Self {
        DgpSpec::ContinuousTreatment {
            n,
            p: 2,
            tau,
            delta: vec![1.0, 1.0],
            gamma: vec![1.0, 1.0],
            sigma_t: 1.0,
            seed,
        }
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            DgpSpec::Fig1Univariate { .. } => "fig1-univariate",
            DgpSpec::Fig2Bivariate { .. } => "fig2-bivariate",
            DgpSpec::PositivityViolation { .. } => "positivity-violation",
            DgpSpec::ContinuousTreatment { .. } => "continuous-treatment",
        }
    }

    pub fn seed(&self) -> u64 {
        match *self {
            DgpSpec::Fig1Univariate { seed, .. }
            | DgpSpec::Fig2Bivariate { seed, .. }
            | DgpSpec::PositivityViolation { seed, .. }
            | DgpSpec::ContinuousTreatment { seed, .. } => seed,
        }
    }
}

fn expit(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn check_len(name: &str, v: &[f64], p: usize) -> Result<()> {
    if v.len() != p {
        return Err(Error::InvalidArgument(format!(
            "{name} must have length p={p}, found {}",
            v.len()
        )));
    }
    Ok(())
}

/// Generates a dataset from `spec`.
pub fn generate(spec: &DgpSpec) -> Result<Dataset> {
    match spec {
        DgpSpec::Fig1Univariate {
            n,
            mean0,
            mean1,
            seed,
        } => {
            let n0 = n / 2;
            let n1 = n - n0;
            if n0 < 2 || n1 < 2 {
                return Err(Error::InsufficientData(format!(
                    "need at least 2 per group, got n0={n0}, n1={n1}"
                )));
            }
            let mut rng = rng_from_seed(*seed);
            let mut z = Array2::<f64>::zeros((n0 + n1, 1));
            let mut t = Vec::with_capacity(n0 + n1);
            for i in 0..n0 {
                let e: f64 = StandardNormal.sample(&mut rng);
                z[[i, 0]] = mean0 + e;
                t.push(0.0);
            }
            for i in 0..n1 {
                let e: f64 = StandardNormal.sample(&mut rng);
                z[[n0 + i, 0]] = mean1 + e;
                t.push(1.0);
            }
            let treatment = TreatmentVector::from_values(&t, TreatmentKind::Binary)?;
            Dataset::new(z, treatment, None, vec!["z1".into()])
        }
        DgpSpec::Fig2Bivariate {
            n0,
            n1,
            mean0,
            mean1,
            seed,
        } => {
            if *n0 < 2 || *n1 < 2 {
                return Err(Error::InsufficientData(format!(
                    "need at least 2 per group, got n0={n0}, n1={n1}"
                )));
            }
            let mut rng = rng_from_seed(*seed);
            let n = n0 + n1;
            let mut z = Array2::<f64>::zeros((n, 2));
            let mut t = Vec::with_capacity(n);
            for i in 0..n {
                let mean = if i < *n0 { mean0 } else { mean1 };
                for j in 0..2 {
                    let e: f64 = StandardNormal.sample(&mut rng);
                    z[[i, j]] = mean[j] + e;
                }
                t.push(if i < *n0 { 0.0 } else { 1.0 });
            }
            let treatment = TreatmentVector::from_values(&t, TreatmentKind::Binary)?;
            Dataset::new(z, treatment, None, vec!["z1".into(), "z2".into()])
        }
        DgpSpec::PositivityViolation {
            n,
            p,
            tau,
            gamma,
            slope,
            seed,
        } => {
            if *p < 1 {
                return Err(Error::InvalidArgument("p must be at least 1".into()));
            }
            check_len("gamma", gamma, *p)?;
            let mut rng = rng_from_seed(*seed);
            let mut z = Array2::<f64>::zeros((*n, *p));
            let mut t = Vec::with_capacity(*n);
            let mut y = Array1::<f64>::zeros(*n);
            for i in 0..*n {
                for j in 0..*p {
                    z[[i, j]] = rng.random::<f64>();
                }
                let z1 = z[[i, 0]];
                let ti = if z1 > 0.9 {
                    1.0
                } else if z1 < 0.1 {
                    0.0
                } else {
                    let pr = expit(slope * (z1 - 0.5));
                    if rng.random::<f64>() < pr {
                        1.0
                    } else {
                        0.0
                    }
                };
                let noise: f64 = StandardNormal.sample(&mut rng);
                let zg: f64 = (0..*p).map(|j| z[[i, j]] * gamma[j]).sum();
                y[i] = tau * ti + zg + noise;
                t.push(ti);
            }
            let treatment = TreatmentVector::from_values(&t, TreatmentKind::Binary)?;
            let names = (1..=*p).map(|j| format!("z{j}")).collect();
            Dataset::new(z, treatment, Some(y), names)
        }
        DgpSpec::ContinuousTreatment {
            n,
            p,
            tau,
            delta,
            gamma,
            sigma_t,
            seed,
        } => {
            if *p < 1 {
                return Err(Error::InvalidArgument("p must be at least 1".into()));
            }
            if !(*sigma_t > 0.0) {
                return Err(Error::InvalidArgument("sigma_t must be positive".into()));
            }
            check_len("delta", delta, *p)?;
            check_len("gamma", gamma, *p)?;
            let mut rng = rng_from_seed(*seed);
            let mut z = Array2::<f64>::zeros((*n, *p));
            let mut t = Vec::with_capacity(*n);
            let mut y = Array1::<f64>::zeros(*n);
            for i in 0..*n {
                for j in 0..*p {
                    z[[i, j]] = rng.random::<f64>();
                }
                let zd: f64 = (0..*p).map(|j| z[[i, j]] * delta[j]).sum();
                let te: f64 = StandardNormal.sample(&mut rng);
                let ti = zd + sigma_t * te;
                let ye: f64 = StandardNormal.sample(&mut rng);
                let zg: f64 = (0..*p).map(|j| z[[i, j]] * gamma[j]).sum();
                y[i] = tau * ti + zg + ye;
                t.push(ti);
            }
            let treatment = TreatmentVector::from_values(&t, TreatmentKind::Continuous)?;
            let names = (1..=*p).map(|j| format!("z{j}")).collect();
            Dataset::new(z, treatment, Some(y), names)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_data() {
        let a = generate(&DgpSpec::fig2(20, 25, 99)).unwrap();
        let b = generate(&DgpSpec::fig2(20, 25, 99)).unwrap();
        assert_eq!(a.covariates(), b.covariates());
        let c = generate(&DgpSpec::fig2(20, 25, 100)).unwrap();
        assert_ne!(a.covariates(), c.covariates());
    }

    #[test]
    fn fig1_group_means_are_separated() {
        let d = generate(&DgpSpec::fig1(400, 7)).unwrap();
        let z0 = d.group_covariates(-1.0).unwrap();
        let z1 = d.group_covariates(1.0).unwrap();
        let m0 = z0.column(0).sum() / z0.nrows() as f64;
        let m1 = z1.column(0).sum() / z1.nrows() as f64;
        assert!(m0 < -1.5 && m0 > -2.5, "m0={m0}");
        assert!(m1 > 1.5 && m1 < 2.5, "m1={m1}");
    }

    #[test]
    fn positivity_tails_are_deterministic() {
        let d = generate(&DgpSpec::positivity(500, 2.0, 3)).unwrap();
        let coded = d.binary_coded().unwrap();
        for i in 0..d.n() {
            let z1 = d.covariates()[[i, 0]];
            if z1 > 0.9 {
                assert_eq!(coded[i], 1.0);
            }
            if z1 < 0.1 {
                assert_eq!(coded[i], -1.0);
            }
        }
        assert!(d.outcome().is_some());
    }

    #[test]
    fn continuous_dose_tracks_covariates() {
        let d = generate(&DgpSpec::continuous(2000, 2.0, 5)).unwrap();
        let t = d.continuous_treatment().unwrap();
        // corr(T, z1 + z2) = sqrt(var(z1+z2) / (var(z1+z2) + 1)) with
        // var(z1+z2) = 1/6 under the uniform design: about 0.378.
        let zsum: Vec<f64> = (0..d.n())
            .map(|i| d.covariates()[[i, 0]] + d.covariates()[[i, 1]])
            .collect();
        let mt = t.sum() / t.len() as f64;
        let mz = zsum.iter().sum::<f64>() / zsum.len() as f64;
        let mut num = 0.0;
        let mut vt = 0.0;
        let mut vz = 0.0;
        for i in 0..d.n() {
            num += (t[i] - mt) * (zsum[i] - mz);
            vt += (t[i] - mt).powi(2);
            vz += (zsum[i] - mz).powi(2);
        }
        let corr = num / (vt.sqrt() * vz.sqrt());
        assert!(corr > 0.3, "corr={corr}");
        assert!(corr < 0.5, "corr={corr}");
    }

    #[test]
    fn gamma_length_is_validated() {
        let spec = DgpSpec::PositivityViolation {
            n: 50,
            p: 3,
            tau: 1.0,
            gamma: vec![1.0, 2.0],
            slope: 4.0,
            seed: 1,
        };
        assert!(generate(&spec).is_err());
    }
}
