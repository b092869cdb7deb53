use std::path::PathBuf;

use chrono::NaiveDate;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: malformed record: {message}")]
    MalformedLine { line: usize, message: String },

    #[error("line {line}: missing field `{field}`")]
    MissingField { line: usize, field: String },

    #[error("line {line}: invalid timestamp `{value}`")]
    BadTimestamp { line: usize, value: String },

    #[error("{path}: {message}")]
    Csv { path: String, message: String },

    #[error("unknown ticker `{ticker}` in {context}")]
    UnknownTicker { ticker: String, context: String },

    #[error("duplicate record for ({ticker}, {date})")]
    DuplicateRecord { ticker: String, date: NaiveDate },

    #[error("non-positive open price for ({ticker}, {date})")]
    NonPositiveOpen { ticker: String, date: NaiveDate },

    #[error("factor series is missing trading date {0}")]
    MissingFactorDate(NaiveDate),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("design matrix is rank deficient at column `{column}`")]
    RankDeficient { column: String },

    #[error("degenerate clustering: only one {dimension} cluster")]
    DegenerateClustering { dimension: &'static str },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("insufficient support: {0}")]
    InsufficientSupport(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Stable short identifier used in machine-readable error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::MalformedLine { .. } => "malformed_line",
            Error::MissingField { .. } => "missing_field",
            Error::BadTimestamp { .. } => "bad_timestamp",
            Error::Csv { .. } => "csv",
            Error::UnknownTicker { .. } => "unknown_ticker",
            Error::DuplicateRecord { .. } => "duplicate_record",
            Error::NonPositiveOpen { .. } => "non_positive_open",
            Error::MissingFactorDate(_) => "missing_factor_date",
            Error::Config(_) => "config",
            Error::RankDeficient { .. } => "rank_deficient",
            Error::DegenerateClustering { .. } => "degenerate_clustering",
            Error::InvalidInput(_) => "invalid_input",
            Error::InsufficientSupport(_) => "insufficient_support",
        }
    }
}
