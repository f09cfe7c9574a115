use thiserror::Error;

/// Errors raised by the model and the analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of a formula.
    #[error("domain error: {0}")]
    Domain(String),

    /// A system parameter violates its invariant.
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParam { field: String, reason: String },

    /// Node placement that produces a zero-length link.
    #[error("degenerate geometry: {0}")]
    Geometry(String),

    /// A selector that needs at least one candidate received none.
    #[error("candidate list is empty")]
    EmptyCandidates,

    /// Name collision or lookup failure in the selector registry.
    #[error("selector registry: {0}")]
    Registry(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn invalid(field: &str, reason: impl Into<String>) -> Error {
    Error::InvalidParam {
        field: field.to_string(),
        reason: reason.into(),
    }
}
