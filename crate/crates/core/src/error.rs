//! Error types shared across the toolkit.

use thiserror::Error;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// All errors the toolkit can produce.
///
/// Variants are grouped by how a frontend should treat them: invalid
/// arguments, broken input data, numeric failures, and I/O.
#[derive(Debug, Error)]
pub enum Error {
    /// Schema file or schema/data mismatch problems.
    #[error("schema error: {0}")]
    Schema(String),

    /// A value in the data violates the schema (unknown category, bad token).
    #[error("value error at row {row}, column '{column}': {message}")]
    Value {
        row: usize,
        column: String,
        message: String,
    },

    /// A numeric column could not be parsed.
    #[error("parse error at row {row}, column '{column}': '{token}' is not numeric")]
    Parse {
        row: usize,
        column: String,
        token: String,
    },

    /// Encoding failed (e.g. zero-variance numeric column).
    #[error("encoding error: {0}")]
    Encoding(String),

    /// An argument is outside its documented domain.
    #[error("argument error: {0}")]
    Argument(String),

    /// Pair construction could not satisfy its contract.
    #[error("pairing error: {0}")]
    Pairing(String),

    /// A protected attribute carries no signal to fit against.
    #[error("degenerate attribute '{0}': only one value present")]
    DegenerateAttribute(String),

    /// An iterative fit stopped before reaching its tolerance.
    #[error("convergence error: gradient norm {grad_norm:.3e} after {iterations} iterations (tolerance {tolerance:.1e})")]
    Convergence {
        iterations: usize,
        grad_norm: f64,
        tolerance: f64,
    },

    /// Training loss became non-finite.
    #[error("divergence error: non-finite loss at {context}")]
    Divergence { context: String },

    /// A gradient or objective evaluated to a non-finite value.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// A fairness metric could not be computed (empty group or cell).
    #[error("metric error: {0}")]
    Metric(String),

    /// A row selector matched no rows or selectors overlap.
    #[error("selector error: {0}")]
    Selector(String),

    /// A lookup table is missing a key and has no fallback entry.
    #[error("lookup error: no entry for '{key}' in {table} table and no 'unknown' fallback")]
    Lookup { table: String, key: String },

    /// Evidence tables multiplied to a zero posterior.
    #[error("degenerate evidence: posterior normalizer is zero")]
    DegenerateEvidence,

    /// An audit had no usable inputs (e.g. all sampled pairs degenerate).
    #[error("audit error: {0}")]
    Audit(String),

    /// Invalid run configuration.
    #[error("config error: {0}")]
    Config(String),

    /// Filesystem or serialization failure.
    #[error("I/O error: {0}")]
    Io(String),
}

impl Error {
    /// Coarse category used by frontends to pick exit codes.
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Schema(_)
            | Error::Value { .. }
            | Error::Parse { .. }
            | Error::Encoding(_)
            | Error::Argument(_)
            | Error::Pairing(_)
            | Error::DegenerateAttribute(_)
            | Error::Metric(_)
            | Error::Selector(_)
            | Error::Lookup { .. }
            | Error::Audit(_)
            | Error::Config(_) => ErrorCategory::Data,
            Error::Convergence { .. }
            | Error::Divergence { .. }
            | Error::Numeric(_)
            | Error::DegenerateEvidence => ErrorCategory::Numeric,
            Error::Io(_) => ErrorCategory::Io,
        }
    }
}

/// Coarse error class; maps one-to-one onto CLI exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    /// Data or validation problem.
    Data,
    /// Numeric failure or divergence.
    Numeric,
    /// Filesystem problem.
    Io,
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}
