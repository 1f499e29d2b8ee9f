use thiserror::Error;

/// Errors for domain validation, controller configuration, and event parsing.
#[derive(Debug, Error)]
pub enum ControlError {
    /// A numeric value violates its documented range or ordering constraint.
    #[error("domain error: {0}")]
    Domain(String),
    /// An operation was asked of a mobility group that does not support it.
    #[error("group {0} has no {1}")]
    UnsupportedGroup(&'static str, &'static str),
    /// A polygon failed validation (too few vertices, self-intersection,
    /// zero area, or duplicate adjacent vertices).
    #[error("invalid polygon: {0}")]
    InvalidPolygon(String),
    /// Controller or scenario configuration is inconsistent.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    /// A frame referenced a camera with no configured zone.
    #[error("unknown camera id {0}")]
    UnknownCamera(u32),
    /// Frame timestamps must be non-decreasing.
    #[error("out-of-order timestamp: {got} ms after {last} ms")]
    OutOfOrder { last: u64, got: u64 },
    /// A line-delimited event record failed to parse or validate.
    #[error("event line {line}: {reason}")]
    EventLine { line: usize, reason: String },
}

pub type Result<T> = std::result::Result<T, ControlError>;
