use contact_core::GeometryError;
use membrane_sim::SimError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("baseline config: {0}")]
    Config(String),
    #[error("observation: {0}")]
    Observation(String),
    #[error("inverse solve: {0}")]
    Solver(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Sim(#[from] SimError),
}
