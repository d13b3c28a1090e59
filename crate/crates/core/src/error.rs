use std::path::PathBuf;

/// Errors produced anywhere in the clustering engine.
#[derive(Debug, thiserror::Error)]
pub enum ShadeError {
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("insufficient points for μ: need at least {needed} points, got {got}")]
    InsufficientPoints { needed: usize, got: usize },

    #[error("invalid parameter `{name}`: {message}")]
    InvalidParameter { name: &'static str, message: String },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("index {index} out of range for {len} points")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("edge set does not span all {n} points ({components} components remain)")]
    Disconnected { n: usize, components: usize },

    #[error("non-finite gradient in parameter block `{block}`")]
    NonFiniteGradient { block: String },

    #[error("non-finite parameter in block `{block}` after update")]
    NonFiniteParameter { block: String },

    #[error("no clusters to assign to")]
    NoClusters,

    #[error("{path}: row {row}, column {col}: {message}")]
    Csv {
        path: PathBuf,
        row: usize,
        col: usize,
        message: String,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<ShadeError>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl ShadeError {
    pub(crate) fn invalid(name: &'static str, message: impl Into<String>) -> Self {
        ShadeError::InvalidParameter {
            name,
            message: message.into(),
        }
    }

    /// Wraps an error with the name of the pipeline stage that produced it.
    pub fn in_stage(self, stage: &'static str) -> Self {
        ShadeError::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub type Result<T, E = ShadeError> = std::result::Result<T, E>;
