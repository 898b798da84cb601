//! Crate-wide error type.
//!
//! Every fallible operation in this crate returns [`Result`]. Numerical
//! routines never panic on bad input; they classify the failure instead so
//! callers (including the CLI and the C ABI layer) can map it to an exit
//! code or status code.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input data violates the declared schema (missing column, wrong
    /// treatment coding, mismatched lengths).
    #[error("schema error: {0}")]
    Schema(String),

    /// A cell failed to parse. Row numbers are 1-based data rows (the
    /// header is row 0).
    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    /// Not enough rows, groups, or pairs to compute the requested quantity.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// An argument is outside its documented domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    /// A non-finite value (NaN or infinity) reached a numerical routine.
    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// An iterative solver hit its iteration cap before reaching tolerance.
    /// `residual` is the convergence measure at the last iterate.
    #[error("{solver} did not converge: residual {residual:.6e} after {iterations} iterations")]
    Convergence {
        solver: &'static str,
        residual: f64,
        iterations: usize,
    },

    /// The problem is degenerate (singular matrix, zero variance, collapsed
    /// group) and the quantity is undefined.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// The margin subpopulation came out empty at the named pipeline step.
    #[error("empty margin at step {0}")]
    EmptyMargin(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Stable machine-readable kind tag, used by the CLI error records and
    /// the C ABI status codes.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Schema(_) => "schema",
            Error::Parse { .. } => "parse",
            Error::InsufficientData(_) => "insufficient-data",
            Error::InvalidArgument(_) => "invalid-argument",
            Error::DimensionMismatch { .. } => "dimension-mismatch",
            Error::NonFinite(_) => "non-finite",
            Error::Convergence { .. } => "convergence",
            Error::Degenerate(_) => "degenerate",
            Error::EmptyMargin(_) => "empty-margin",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
        }
    }
}
