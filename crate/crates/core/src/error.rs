use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("degenerate threshold: {0}")]
    DegenerateThreshold(String),

    #[error("predicate error: {0}")]
    Predicate(String),

    #[error("alignment error: table has {expected} rows but {actual} predictions were given")]
    Alignment { expected: usize, actual: usize },

    #[error("invalid predictions: {0}")]
    Predictions(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("encoding error: {0}")]
    Encoding(String),

    #[error("privilege extraction failed: {0}")]
    Extraction(String),

    #[error("training failed: {0}")]
    Training(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
