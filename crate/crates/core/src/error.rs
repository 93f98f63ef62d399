use thiserror::Error;

use crate::mnn::MatrixShape;

pub type Result<T> = std::result::Result<T, MnnError>;

#[derive(Debug, Error)]
pub enum MnnError {
    #[error("layer {layer}: expected input of shape {expected}, got {actual}")]
    ShapeMismatch {
        layer: usize,
        expected: MatrixShape,
        actual: MatrixShape,
    },

    #[error("incompatible networks: {0}")]
    Incompatible(String),

    #[error("invalid sparse map: {0}")]
    InvalidMap(String),

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("scaling the output layer by {0} is degenerate")]
    DegenerateScale(f64),

    #[error("matrix is singular or ill-conditioned: pivot {pivot:e} at column {column} (threshold {threshold:e})")]
    Singular {
        column: usize,
        pivot: f64,
        threshold: f64,
    },

    #[error("malformed network file: {0}")]
    NetworkFile(String),

    #[error("malformed matrix file: {0}")]
    MatrixFile(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl MnnError {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        MnnError::InvalidParameter(msg.into())
    }
}
