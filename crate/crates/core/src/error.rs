use thiserror::Error;

/// Errors raised by the geometry layer.
#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid intrinsics: {0}")]
    InvalidIntrinsics(String),

    #[error("homography is not invertible (|det| = {det:.3e})")]
    SingularHomography { det: f64 },

    #[error("invalid depth data: {0}")]
    InvalidDepth(String),

    #[error("no points: {0}")]
    EmptyCloud(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("registration failed: {0}")]
    Registration(String),
}
