use contact_core::GeometryError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FusionError {
    #[error("fusion config: {0}")]
    Config(String),

    #[error(transparent)]
    Geometry(#[from] GeometryError),

    #[error("config parse: {0}")]
    Parse(#[from] toml::de::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
