use thiserror::Error;

/// Errors produced by ingestion, solving, and evaluation.
#[derive(Error, Debug)]
pub enum TvnetError {
    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, TvnetError>;
