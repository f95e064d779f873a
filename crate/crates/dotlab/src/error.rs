//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DotlabError {
    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),
    #[error("level {level} too coarse: {reason}")]
    LevelTooCoarse { level: u32, reason: String },
    #[error("ambient dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("level mismatch: {0}")]
    LevelMismatch(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("degenerate curve: min |det| = {min_abs_det}")]
    DegenerateCurve { min_abs_det: f64 },
    #[error("empty input: {0}")]
    Empty(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, DotlabError>;

impl From<serde_json::Error> for DotlabError {
    fn from(e: serde_json::Error) -> Self {
        DotlabError::Format(e.to_string())
    }
}
