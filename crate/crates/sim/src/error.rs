use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("model error: {0}")]
    Model(String),
    #[error("solver failed to converge: {message} (relative residual {residual:.3e} after {iterations} iterations)")]
    Solver {
        message: String,
        residual: f64,
        iterations: usize,
    },
    #[error("out of range: {0}")]
    Range(String),
    #[error("scene error: {0}")]
    Scene(String),
    #[error("strain measurement error: {0}")]
    Measurement(String),
    #[error(transparent)]
    Geometry(#[from] contact_core::GeometryError),
    #[error(transparent)]
    Format(#[from] contact_core::io::FormatError),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
