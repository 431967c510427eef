use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, SpeError>;

#[derive(Debug, Error)]
pub enum SpeError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("dimension mismatch: expected {expected} features, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("out of range: {0}")]
    Range(String),

    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: String, reason: String },

    #[error("parse error at row {row}, column `{column}`: {reason}")]
    Parse {
        row: usize,
        column: String,
        reason: String,
    },

    #[error("label error: {0}")]
    Label(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("iteration {iteration}: {source}")]
    Training {
        iteration: usize,
        #[source]
        source: Box<SpeError>,
    },
}

impl SpeError {
    pub(crate) fn param(name: &str, reason: impl Into<String>) -> Self {
        SpeError::Parameter {
            name: name.to_string(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SpeError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn at_iteration(self, iteration: usize) -> Self {
        SpeError::Training {
            iteration,
            source: Box::new(self),
        }
    }

    /// Short machine-readable category, used in CLI error JSON and FFI status codes.
    pub fn kind(&self) -> &'static str {
        match self {
            SpeError::InvalidInput(_) => "invalid_input",
            SpeError::InvalidModel(_) => "invalid_model",
            SpeError::Dimension { .. } => "dimension",
            SpeError::Range(_) => "range",
            SpeError::Parameter { .. } => "parameter",
            SpeError::Parse { .. } => "parse",
            SpeError::Label(_) => "label",
            SpeError::Io { .. } => "io",
            SpeError::Csv(_) => "csv",
            SpeError::Json(_) => "json",
            SpeError::Training { source, .. } => source.kind(),
        }
    }
}
