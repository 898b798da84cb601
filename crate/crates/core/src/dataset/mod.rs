//! Study data: covariates, treatment, optional outcome.
//!
//! A [`Dataset`] is validated on construction, so downstream numerical code
//! can assume finite covariates, matching lengths, and a well-formed
//! treatment vector. Binary treatments are recoded to -1/+1 at the door
//! (lower original label maps to -1) and the original labels are kept for
//! reporting.

mod csv_io;
mod dgp;

pub use csv_io::{load_csv, CsvSchema, LoadReport};
pub use dgp::{generate, DgpSpec};

use crate::error::{Error, Result};
use crate::linalg;
use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

/// Declared treatment type; drives which margin construction applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TreatmentKind {
    Binary,
    Categorical,
    Continuous,
}

impl std::str::FromStr for TreatmentKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binary" => Ok(TreatmentKind::Binary),
            "categorical" => Ok(TreatmentKind::Categorical),
            "continuous" => Ok(TreatmentKind::Continuous),
            other => Err(Error::InvalidArgument(format!(
                "unknown treatment kind {other:?} (expected binary, categorical, or continuous)"
            ))),
        }
    }
}

/// Original labels behind a -1/+1 binary coding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinaryLabels {
    /// Original value recoded to -1.
    pub negative: f64,
    /// Original value recoded to +1.
    pub positive: f64,
}

/// Validated treatment assignment.
#[derive(Debug, Clone, PartialEq)]
pub enum TreatmentVector {
    /// Coded values are exactly -1.0 or +1.0; both arms are non-empty.
    Binary {
        coded: Array1<f64>,
        labels: BinaryLabels,
    },
    /// Levels are 0..n_levels with n_levels >= 3 and every level present.
    Categorical {
        levels: Array1<usize>,
        n_levels: usize,
    },
    /// Finite doses with at least 3 distinct values.
    Continuous(Array1<f64>),
}

impl TreatmentVector {
    /// Builds and validates a treatment vector from raw values.
    pub fn from_values(values: &[f64], kind: TreatmentKind) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("treatment values".into()));
        }
        match kind {
            TreatmentKind::Binary => {
                let mut distinct: Vec<f64> = Vec::new();
                for &v in values {
                    if !distinct.contains(&v) {
                        distinct.push(v);
                    }
                }
                if distinct.len() != 2 {
                    return Err(Error::Schema(format!(
                        "binary treatment must take exactly 2 distinct values, found {}",
                        distinct.len()
                    )));
                }
                distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let labels = BinaryLabels {
                    negative: distinct[0],
                    positive: distinct[1],
                };
                let coded = values
                    .iter()
                    .map(|&v| if v == labels.negative { -1.0 } else { 1.0 })
                    .collect::<Array1<f64>>();
                Ok(TreatmentVector::Binary { coded, labels })
            }
            TreatmentKind::Categorical => {
                let mut levels = Vec::with_capacity(values.len());
                for &v in values {
                    if v < 0.0 || v.fract() != 0.0 || v > usize::MAX as f64 {
                        return Err(Error::Schema(format!(
                            "categorical treatment levels must be non-negative integers, found {v}"
                        )));
                    }
                    levels.push(v as usize);
                }
                let n_levels = levels.iter().copied().max().map_or(0, |m| m + 1);
                if n_levels < 3 {
                    return Err(Error::Schema(format!(
                        "categorical treatment needs at least 3 levels, found {n_levels} \
                         (use binary for 2-level treatments)"
                    )));
                }
                for k in 0..n_levels {
                    if !levels.contains(&k) {
                        return Err(Error::Schema(format!(
                            "categorical treatment level {k} is absent \
                             (levels must cover 0..{n_levels})"
                        )));
                    }
                }
                Ok(TreatmentVector::Categorical {
                    levels: Array1::from(levels),
                    n_levels,
                })
            }
            TreatmentKind::Continuous => {
                let mut distinct: Vec<f64> = Vec::new();
                for &v in values {
                    if !distinct.contains(&v) {
                        distinct.push(v);
                        if distinct.len() >= 3 {
                            break;
                        }
                    }
                }
                if distinct.len() < 3 {
                    return Err(Error::Schema(format!(
                        "continuous treatment needs at least 3 distinct values, found {}",
                        distinct.len()
                    )));
                }
                Ok(TreatmentVector::Continuous(Array1::from(values.to_vec())))
            }
        }
    }

    pub fn kind(&self) -> TreatmentKind {
        match self {
            TreatmentVector::Binary { .. } => TreatmentKind::Binary,
            TreatmentVector::Categorical { .. } => TreatmentKind::Categorical,
            TreatmentVector::Continuous(_) => TreatmentKind::Continuous,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            TreatmentVector::Binary { coded, .. } => coded.len(),
            TreatmentVector::Categorical { levels, .. } => levels.len(),
            TreatmentVector::Continuous(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Treatment as raw numeric values (original labels for binary).
    pub fn raw_values(&self) -> Array1<f64> {
        match self {
            TreatmentVector::Binary { coded, labels } => coded
                .iter()
                .map(|&c| if c < 0.0 { labels.negative } else { labels.positive })
                .collect(),
            TreatmentVector::Categorical { levels, .. } => {
                levels.iter().map(|&l| l as f64).collect()
            }
            TreatmentVector::Continuous(v) => v.clone(),
        }
    }
}

/// A validated study dataset.
#[derive(Debug, Clone)]
pub struct Dataset {
    covariates: Array2<f64>,
    treatment: TreatmentVector,
    outcome: Option<Array1<f64>>,
    covariate_names: Vec<String>,
}

impl Dataset {
    /// Validates and assembles a dataset.
    ///
    /// Requires n >= 2 rows, p >= 1 covariates, finite entries, and
    /// length agreement between all components. Binary treatments must
    /// have both arms non-empty (guaranteed by the coding rule).
    pub fn new(
        covariates: Array2<f64>,
        treatment: TreatmentVector,
        outcome: Option<Array1<f64>>,
        covariate_names: Vec<String>,
    ) -> Result<Self> {
        let n = covariates.nrows();
        let p = covariates.ncols();
        if n < 2 {
            return Err(Error::InsufficientData(format!(
                "need at least 2 rows, found {n}"
            )));
        }
        if p < 1 {
            return Err(Error::Schema("need at least 1 covariate column".into()));
        }
        if covariates.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("covariates".into()));
        }
        if treatment.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: treatment.len(),
            });
        }
        if let Some(y) = &outcome {
            if y.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: y.len(),
                });
            }
            if y.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("outcome".into()));
            }
        }
        if covariate_names.len() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                actual: covariate_names.len(),
            });
        }
        Ok(Dataset {
            covariates,
            treatment,
            outcome,
            covariate_names,
        })
    }

    pub fn n(&self) -> usize {
        self.covariates.nrows()
    }

    pub fn p(&self) -> usize {
        self.covariates.ncols()
    }

    pub fn covariates(&self) -> &Array2<f64> {
        &self.covariates
    }

    pub fn treatment(&self) -> &TreatmentVector {
        &self.treatment
    }

    pub fn outcome(&self) -> Option<&Array1<f64>> {
        self.outcome.as_ref()
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    /// -1/+1 coded treatment; schema error for non-binary treatments.
    pub fn binary_coded(&self) -> Result<&Array1<f64>> {
        match &self.treatment {
            TreatmentVector::Binary { coded, .. } => Ok(coded),
            other => Err(Error::Schema(format!(
                "expected binary treatment, found {:?}",
                other.kind()
            ))),
        }
    }

    /// Continuous doses; schema error otherwise.
    pub fn continuous_treatment(&self) -> Result<&Array1<f64>> {
        match &self.treatment {
            TreatmentVector::Continuous(v) => Ok(v),
            other => Err(Error::Schema(format!(
                "expected continuous treatment, found {:?}",
                other.kind()
            ))),
        }
    }

    /// Row indices with coded treatment equal to `sign` (-1.0 or +1.0).
    pub fn group_rows(&self, sign: f64) -> Result<Vec<usize>> {
        let coded = self.binary_coded()?;
        Ok(coded
            .iter()
            .enumerate()
            .filter(|(_, &c)| c == sign)
            .map(|(i, _)| i)
            .collect())
    }

    /// Covariate rows for one arm of a binary treatment.
    pub fn group_covariates(&self, sign: f64) -> Result<Array2<f64>> {
        let rows = self.group_rows(sign)?;
        Ok(self.covariates.select(Axis(0), &rows))
    }

    /// Row indices at a categorical level.
    pub fn level_rows(&self, level: usize) -> Result<Vec<usize>> {
        match &self.treatment {
            TreatmentVector::Categorical { levels, .. } => Ok(levels
                .iter()
                .enumerate()
                .filter(|(_, &l)| l == level)
                .map(|(i, _)| i)
                .collect()),
            other => Err(Error::Schema(format!(
                "expected categorical treatment, found {:?}",
                other.kind()
            ))),
        }
    }

    /// Dataset restricted to `rows` (in the given order). Fails when the
    /// restriction breaks an invariant, e.g. a binary arm becomes empty.
    pub fn restrict(&self, rows: &[usize]) -> Result<Dataset> {
        for &r in rows {
            if r >= self.n() {
                return Err(Error::InvalidArgument(format!(
                    "row index {r} out of range for n={}",
                    self.n()
                )));
            }
        }
        let covariates = self.covariates.select(Axis(0), rows);
        let raw = self.treatment.raw_values();
        let tvals: Vec<f64> = rows.iter().map(|&r| raw[r]).collect();
        let treatment = TreatmentVector::from_values(&tvals, self.treatment.kind())?;
        let outcome = self
            .outcome
            .as_ref()
            .map(|y| rows.iter().map(|&r| y[r]).collect::<Array1<f64>>());
        Dataset::new(covariates, treatment, outcome, self.covariate_names.clone())
    }
}

/// Mean and standard deviation of one retained column.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ColumnScale {
    pub name: String,
    /// Index in the original covariate matrix.
    pub original_index: usize,
    pub mean: f64,
    pub sd: f64,
}

/// What [`standardize`] did: which columns survived and their scales.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StandardizationRecord {
    pub retained: Vec<ColumnScale>,
    pub dropped: Vec<String>,
}

/// Columns with sample sd below this (absolute) are treated as constant.
const CONSTANT_SD_TOL: f64 = 1e-12;

/// Centers and scales each covariate column to mean 0, sd 1 (n-1
/// denominator). Constant columns carry no information for separation and
/// are dropped; the record lists them. Errors when every column is constant.
pub fn standardize(d: &Dataset) -> Result<(Dataset, StandardizationRecord)> {
    let n = d.n();
    let p = d.p();
    let mut retained = Vec::new();
    let mut dropped = Vec::new();
    let mut keep_cols = Vec::new();
    for j in 0..p {
        let col = d.covariates.column(j);
        let m = linalg::mean(&col);
        let s = linalg::sample_sd(&col);
        if s <= CONSTANT_SD_TOL {
            dropped.push(d.covariate_names[j].clone());
        } else {
            retained.push(ColumnScale {
                name: d.covariate_names[j].clone(),
                original_index: j,
                mean: m,
                sd: s,
            });
            keep_cols.push(j);
        }
    }
    if retained.is_empty() {
        return Err(Error::Degenerate(
            "all covariate columns are constant; nothing to standardize".into(),
        ));
    }
    let mut z = Array2::<f64>::zeros((n, retained.len()));
    for (jj, scale) in retained.iter().enumerate() {
        let col = d.covariates.column(scale.original_index);
        for i in 0..n {
            z[[i, jj]] = (col[i] - scale.mean) / scale.sd;
        }
    }
    let names = retained.iter().map(|c| c.name.clone()).collect();
    let out = Dataset::new(z, d.treatment.clone(), d.outcome.clone(), names)?;
    Ok((out, StandardizationRecord { retained, dropped }))
}
