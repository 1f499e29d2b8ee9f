use thiserror::Error;

/// Error type shared by every kernel operation.
#[derive(Debug, Error)]
pub enum KernelError {
    /// Tensor or kernel shapes do not line up for the requested operation.
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    /// A parameter violates its documented constraint (even kernel size,
    /// non-positive scale, channel plumbing, ...).
    #[error("invalid parameter: {0}")]
    Parameter(String),
    /// A scalar input lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
}

pub type Result<T> = std::result::Result<T, KernelError>;
