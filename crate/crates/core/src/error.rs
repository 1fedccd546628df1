use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, PrroError>;

#[derive(Debug, Error)]
pub enum PrroError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error in {path}: {message}")]
    Csv { path: PathBuf, message: String },

    #[error("invalid schema: {0}")]
    Schema(String),

    #[error("header/schema mismatch: {0}")]
    HeaderMismatch(String),

    #[error("row {row}, column '{column}': cannot parse '{value}' as a number")]
    NumericParse {
        row: usize,
        column: String,
        value: String,
    },

    #[error("row {row}, column '{column}': {message}")]
    Cell {
        row: usize,
        column: String,
        message: String,
    },

    #[error("invalid split: {0}")]
    Split(String),

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("unknown label '{0}'")]
    UnknownLabel(String),

    #[error("pruning: {0}")]
    Pruning(String),

    #[error("undersampling: {0}")]
    Undersample(String),

    #[error("reordering: {0}")]
    Reorder(String),

    #[error("corpus rejected: {0}")]
    Corpus(String),

    #[error("generator: {0}")]
    Generator(String),

    #[error("bridge: {0}")]
    Bridge(String),

    #[error("training {kind}: {message}")]
    Training { kind: String, message: String },

    #[error("metrics: {0}")]
    Metrics(String),

    #[error("{scenario}/{kind}: {source}")]
    Scenario {
        scenario: String,
        kind: String,
        #[source]
        source: Box<PrroError>,
    },

    #[error("config: {0}")]
    Config(String),

    #[error("stage '{stage}' failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<PrroError>,
    },
}

impl PrroError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        PrroError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 1 = usage/config, 2 = data validation, 3 = stage failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            PrroError::Config(_) => 1,
            PrroError::Csv { .. }
            | PrroError::Schema(_)
            | PrroError::HeaderMismatch(_)
            | PrroError::NumericParse { .. }
            | PrroError::Cell { .. }
            | PrroError::Split(_)
            | PrroError::SchemaMismatch(_)
            | PrroError::UnknownLabel(_) => 2,
            PrroError::Stage { source, .. } | PrroError::Scenario { source, .. } => {
                source.exit_code()
            }
            _ => 3,
        }
    }
}
