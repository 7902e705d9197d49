use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("operation requires dimension {expected}, found {found}")]
    WrongDimension { expected: usize, found: usize },
    #[error("invalid probability vector: {0}")]
    InvalidState(String),
    #[error("invalid stochastic matrix: {0}")]
    InvalidMatrix(String),
    #[error("invalid channel: {0}")]
    InvalidChannel(String),
    #[error("invalid dilation: {0}")]
    InvalidDilation(String),
    #[error("pushforward of the prior is singular (minimum {min:e})")]
    SingularPushforward { min: f64 },
    #[error("fixed point iteration did not converge")]
    NoConvergence,
    #[error("coordinates outside the realizable domain: {0}")]
    DomainError(String),
    #[error("invalid absorbing blocks: {0}")]
    InvalidBlocks(String),
    #[error("parameter out of range: {0}")]
    InvalidParameter(String),
    #[error("rejection sampling gave up after {attempts} attempts")]
    RejectionLimit { attempts: usize },
}
