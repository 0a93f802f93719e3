use thiserror::Error;

/// Failure modes shared by every solver in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    /// An input lies outside the domain of the model or operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A structural hypothesis required by the operation does not hold
    /// (e.g. increasing returns for the takeoff threshold).
    #[error("precondition failed: {0}")]
    Precondition(String),

    /// A numerical routine failed: no bracket, non-finite values, no
    /// convergence.
    #[error("numerical error: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, ModelError>;

pub(crate) fn domain(msg: impl Into<String>) -> ModelError {
    ModelError::Domain(msg.into())
}

pub(crate) fn precondition(msg: impl Into<String>) -> ModelError {
    ModelError::Precondition(msg.into())
}

pub(crate) fn numerical(msg: impl Into<String>) -> ModelError {
    ModelError::Numerical(msg.into())
}
