//! CSV loading against a declared schema.
//!
//! Cells equal to `NA` or the empty string (after trimming) are missing;
//! a row with a missing cell in any used column is rejected and counted.
//! A non-missing cell that fails to parse in a used column is a hard parse
//! error with its 1-based data row and column name.

use super::{Dataset, TreatmentKind, TreatmentVector};
use crate::error::{Error, Result};
use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Column roles for [`load_csv`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CsvSchema {
    pub treatment_col: String,
    pub treatment_kind: TreatmentKind,
    pub outcome_col: Option<String>,
    /// Covariate columns in order. `None` selects every remaining column
    /// whose non-missing cells are all numeric.
    pub covariate_cols: Option<Vec<String>>,
}

/// Row accounting from a load.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LoadReport {
    pub rows_read: usize,
    pub rejected_rows: usize,
}

fn is_missing(cell: &str) -> bool {
    let t = cell.trim();
    t.is_empty() || t == "NA"
}

fn parse_cell(cell: &str, row: usize, column: &str) -> Result<f64> {
    cell.trim().parse::<f64>().map_err(|_| Error::Parse {
        row,
        column: column.to_string(),
        message: format!("cannot parse {:?} as a number", cell.trim()),
    })
}

/// Loads a dataset from `path` under `schema`.
pub fn load_csv<P: AsRef<Path>>(path: P, schema: &CsvSchema) -> Result<(Dataset, LoadReport)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_path(path.as_ref())?;
    let headers: Vec<String> = reader.headers()?.iter().map(|h| h.to_string()).collect();
    let col_index = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("column {name:?} not found in header")))
    };

    let t_idx = col_index(&schema.treatment_col)?;
    let y_idx = match &schema.outcome_col {
        Some(c) => Some(col_index(c)?),
        None => None,
    };

    let records: Vec<csv::StringRecord> = reader.records().collect::<std::result::Result<_, _>>()?;

    let cov_idx: Vec<usize> = match &schema.covariate_cols {
        Some(cols) => {
            let mut idx = Vec::with_capacity(cols.len());
            for c in cols {
                let j = col_index(c)?;
                if j == t_idx || Some(j) == y_idx {
                    return Err(Error::Schema(format!(
                        "column {c:?} is already used as treatment or outcome"
                    )));
                }
                if idx.contains(&j) {
                    return Err(Error::Schema(format!("duplicate covariate column {c:?}")));
                }
                idx.push(j);
            }
            idx
        }
        None => {
            // A remaining column qualifies when every non-missing cell is
            // numeric and at least one cell is non-missing.
            let mut idx = Vec::new();
            for j in 0..headers.len() {
                if j == t_idx || Some(j) == y_idx {
                    continue;
                }
                let mut numeric = 0usize;
                let mut ok = true;
                for rec in &records {
                    let cell = rec.get(j).unwrap_or("");
                    if is_missing(cell) {
                        continue;
                    }
                    if cell.trim().parse::<f64>().is_ok() {
                        numeric += 1;
                    } else {
                        ok = false;
                        break;
                    }
                }
                if ok && numeric > 0 {
                    idx.push(j);
                }
            }
            idx
        }
    };
    if cov_idx.is_empty() {
        return Err(Error::Schema("no covariate columns selected".into()));
    }

    let mut tvals = Vec::new();
    let mut yvals = Vec::new();
    let mut zrows: Vec<Vec<f64>> = Vec::new();
    let mut rejected = 0usize;
    for (i, rec) in records.iter().enumerate() {
        let row_no = i + 1;
        let mut used: Vec<usize> = Vec::with_capacity(cov_idx.len() + 2);
        used.push(t_idx);
        if let Some(j) = y_idx {
            used.push(j);
        }
        used.extend_from_slice(&cov_idx);
        if used
            .iter()
            .any(|&j| is_missing(rec.get(j).unwrap_or("")))
        {
            rejected += 1;
            continue;
        }
        tvals.push(parse_cell(
            rec.get(t_idx).unwrap_or(""),
            row_no,
            &headers[t_idx],
        )?);
        if let Some(j) = y_idx {
            yvals.push(parse_cell(rec.get(j).unwrap_or(""), row_no, &headers[j])?);
        }
        let mut zrow = Vec::with_capacity(cov_idx.len());
        for &j in &cov_idx {
            zrow.push(parse_cell(rec.get(j).unwrap_or(""), row_no, &headers[j])?);
        }
        zrows.push(zrow);
    }

    let n = zrows.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "{n} usable rows after rejecting {rejected} (need at least 2)"
        )));
    }
    let p = cov_idx.len();
    let mut z = Array2::<f64>::zeros((n, p));
    for (i, row) in zrows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            z[[i, j]] = v;
        }
    }
    let treatment = TreatmentVector::from_values(&tvals, schema.treatment_kind)?;
    let outcome = y_idx.map(|_| Array1::from(yvals));
    let names = cov_idx.iter().map(|&j| headers[j].clone()).collect();
    let d = Dataset::new(z, treatment, outcome, names)?;
    Ok((
        d,
        LoadReport {
            rows_read: records.len(),
            rejected_rows: rejected,
        },
    ))
}
