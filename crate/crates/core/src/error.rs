use thiserror::Error;

/// Errors raised by the analytics, network generators and simulation engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter lies outside the range where the model is defined.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// The quantity is not defined for the given arguments (e.g. the
    /// cooperator payoff in a population with no cooperators).
    #[error("outside domain: {0}")]
    Domain(String),

    /// A matrix handed to the stationary-distribution solver is not
    /// row-stochastic.
    #[error("not a stochastic matrix: {0}")]
    NotStochastic(String),

    /// The chain has more than one closed communicating class.
    #[error("reducible chain with {classes} closed classes has no unique stationary distribution")]
    Reducible { classes: usize },

    /// Edge-list text could not be parsed.
    #[error("edge list line {line}: {reason}")]
    EdgeList { line: usize, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
