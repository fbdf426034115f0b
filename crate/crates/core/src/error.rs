use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("resource limit: {0}")]
    Resource(String),

    /// The rotation enclosure could not decide `floor(m*theta + beta)`.
    #[error("precision insufficient to resolve the interval endpoint at site {site}")]
    Precision { site: i64 },

    /// Matrix or solution entries left the representable range.
    #[error("numeric range exceeded at index {index}: {context}")]
    NumericRange { index: usize, context: String },

    #[error("internal consistency violated: {0}")]
    Internal(String),

    #[error("validation failed at block {block}: {reason}")]
    Validation { block: usize, reason: String },

    #[error("refinement required: {0}")]
    Refinement(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
