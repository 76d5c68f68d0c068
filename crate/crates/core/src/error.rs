use std::io;

use thiserror::Error;

/// Errors surfaced by index construction, search, persistence and the CLI.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("capacity exhausted: {requested} slots requested, {available} available (capacity {capacity})")]
    CapacityExhausted {
        requested: usize,
        available: usize,
        capacity: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid record: {0}")]
    InvalidRecord(String),

    #[error("parse error at byte offset {offset}: {message}")]
    Parse { offset: u64, message: String },

    #[error("invalid index container: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Short machine-readable tag used in CLI error payloads.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::CapacityExhausted { .. } => "capacity_exhausted",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::InvalidRecord(_) => "invalid_record",
            Error::Parse { .. } => "parse_error",
            Error::Format(_) => "format_error",
            Error::Io(_) => "io_error",
            Error::Json(_) => "json_error",
            Error::Csv(_) => "csv_error",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
