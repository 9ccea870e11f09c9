use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument `{key}`: {reason}")]
    InvalidArgument { key: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite iterate in round {round}")]
    Diverged { round: usize },

    #[error("missing data: {0}")]
    MissingData(&'static str),

    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),

    #[error("every configuration diverged")]
    AllDiverged,
}

impl Error {
    pub(crate) fn invalid(key: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            key,
            reason: reason.into(),
        }
    }

    /// Name of the offending parameter, when the error is tied to one.
    pub fn key(&self) -> Option<&'static str> {
        match self {
            Error::InvalidArgument { key, .. } => Some(key),
            _ => None,
        }
    }
}
