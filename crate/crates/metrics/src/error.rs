use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("{file}:{line}: {reason}")]
    Parse {
        file: String,
        line: usize,
        reason: String,
    },
    #[error("names file: {0}")]
    Names(String),
    #[error("invalid record: {0}")]
    InvalidRecord(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("oracle refuses instance: {0}")]
    OracleTooLarge(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, MetricsError>;
