use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Malformed parameters or configuration values.
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("state {x} outside the domain [0, {b}]")]
    Domain { x: f64, b: f64 },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("not an Allee map: {0}")]
    NotAnAlleeMap(String),

    #[error("not a unimodal map: {0}")]
    NotUnimodal(String),

    /// The inputs do not fit the setting of the requested check.
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("estimate unavailable: all {censored} trials were censored")]
    EstimateUnavailable { censored: u64 },

    #[error("serialization: {0}")]
    Serialization(String),
}
