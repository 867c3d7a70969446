use thiserror::Error;

/// Errors surfaced by the toolkit, grouped by how a caller should react.
#[derive(Debug, Error)]
pub enum Error {
    /// The request itself is malformed: bad dimensions, mismatched
    /// configuration sizes, out-of-range parameters.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The request is well-formed but exceeds a solver cap (site count,
    /// strip width, state-collection limit).
    #[error("resource cap exceeded: {0}")]
    ResourceCap(String),

    /// An internal cross-check failed; indicates a defect, not bad input.
    #[error("self-check failed: {0}")]
    SelfCheck(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn cap(msg: impl Into<String>) -> Self {
        Error::ResourceCap(msg.into())
    }
}
