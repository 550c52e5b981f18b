use thiserror::Error;

/// Errors produced by volume loading, preprocessing, and phantom generation.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("i/o error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed header in {path}: {reason}")]
    MalformedHeader { path: String, reason: String },
    #[error("unsupported file format: {0}")]
    UnsupportedFormat(String),
    #[error("invalid orientation code {0:?}: expected 3 letters covering L/R, P/A, S/I")]
    InvalidOrientation(String),
    #[error("invalid spacing {0:?}: all components must be positive and finite")]
    InvalidSpacing(Vec<f64>),
    #[error("axis {axis} collapsed to zero extent after resampling")]
    ZeroExtentAxis { axis: usize },
    #[error("invalid phantom spec: {0}")]
    InvalidPhantomSpec(String),
    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    ShapeMismatch {
        expected: Vec<usize>,
        got: Vec<usize>,
    },
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;
