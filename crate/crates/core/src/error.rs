use thiserror::Error;

/// Error type shared by all library modules.
#[derive(Debug, Error)]
pub enum CoreError {
    /// Matrix or vector dimensions do not match the spec.
    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: String, got: String },

    /// A norm or ball specification is invalid (e.g. non-symmetric polygon).
    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    /// A field, set, or partition is geometrically invalid.
    #[error("invalid field: {0}")]
    InvalidField(String),

    /// An operation was called on data it does not support.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// An iterative routine failed to reach its tolerance.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;
