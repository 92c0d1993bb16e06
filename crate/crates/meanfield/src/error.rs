use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter {field}: {reason}")]
    InvalidParams { field: String, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("simulation diverged at step {step} (t = {time}), neuron {neuron}")]
    SimulationDiverged { step: usize, time: f64, neuron: usize },

    #[error("numerical instability: {0}")]
    NumericalInstability(String),

    #[error("no root converged: {0}")]
    NoConvergedRoot(String),

    #[error("shooting bracket not found: {0}")]
    BracketNotFound(String),

    #[error("not a gradient system: off-diagonal disorder is non-zero")]
    NotAGradientSystem,

    #[error("statistics error: {0}")]
    Stats(String),

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(field: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParams { field: field.to_string(), reason: reason.into() }
    }
}
