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

    #[error("{path}: line {line}: expected {expected} columns, found {found}")]
    RowWidth {
        path: PathBuf,
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("{path}: line {line}, column {column}: {token:?} is not a finite number")]
    BadNumber {
        path: PathBuf,
        line: usize,
        column: usize,
        token: String,
    },

    #[error("{path}: line {line}: label is missing")]
    MissingLabel { path: PathBuf, line: usize },

    #[error("malformed dataset file: {0}")]
    Format(String),

    #[error("invalid schema: {0}")]
    Schema(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("split would leave an empty {0} partition")]
    EmptyPartition(&'static str),

    #[error("no complete cases available")]
    NoCompleteCases,

    #[error(
        "pre-existing categorical missing fraction {existing:.6} already exceeds target delta {delta:.6}"
    )]
    ExcessMissingness { existing: f64, delta: f64 },

    #[error("feature {feature:?}: {message}")]
    Feature { feature: String, message: String },

    #[error("category index {index} is not in the encoder map of feature {feature:?}")]
    UnknownCategory { feature: String, index: usize },

    #[error("matrix width {found} does not match model width {expected}")]
    WidthMismatch { expected: usize, found: usize },

    #[error("training diverged: {0}")]
    Diverged(String),

    #[error("every grid point failed: {0}")]
    SearchFailed(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn feature(feature: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Feature {
            feature: feature.into(),
            message: message.into(),
        }
    }
}
