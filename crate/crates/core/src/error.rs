//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by dataset handling, training, auditing, and generation.
#[derive(Debug, Error)]
pub enum Error {
    /// A declared column or feature is missing, duplicated, or inconsistent.
    #[error("schema error: {0}")]
    Schema(String),

    /// A cell could not be parsed as a number.
    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    /// A label value is outside the expected class range.
    #[error("label error at row {row}: {message}")]
    Label { row: usize, message: String },

    /// An operation received fewer rows than it needs.
    #[error("size error: {0}")]
    Size(String),

    /// A group filter matched no rows.
    #[error("empty selection: group {0:?} not present")]
    EmptySelection(String),

    /// A class has no weight, or a report has no mass to normalize.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// A numeric value is non-finite or out of domain.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Tree fitting received unusable input.
    #[error("fit error: {0}")]
    Fit(String),

    /// A test-time transform hit an invalid value.
    #[error("transform domain error at row {row}, feature {feature:?}: {message}")]
    TransformDomain {
        row: usize,
        feature: String,
        message: String,
    },

    /// Generator intercept calibration did not reach its targets.
    #[error("calibration error: {0}")]
    Calibration(String),

    /// Two artifacts cannot be combined.
    #[error("incompatible inputs: {0}")]
    Incompatible(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
