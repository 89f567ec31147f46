use thiserror::Error;

/// Errors produced by the confidence-sequence library.
#[derive(Debug, Error)]
pub enum CsError {
    /// An argument fell outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A configuration value failed validation.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A documented precondition of an operation was violated.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// An iterative numerical routine failed to converge.
    #[error("numerical failure: {0}")]
    Convergence(String),

    /// The requested distribution is not supported by this operation.
    #[error("unsupported distribution: {0}")]
    Unsupported(String),

    /// A data file could not be parsed.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// A data value violated a range or shape constraint.
    #[error("data error at line {line}: {msg}")]
    Data { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CsError>;
