use thiserror::Error;

/// Errors produced by the purity engines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An input violated a documented precondition.
    #[error("invalid input: {0}")]
    Invalid(String),

    /// A computation would exceed a configured size limit.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// A numerical routine failed or produced a result violating an invariant.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Self::Invalid(msg.into())
    }

    pub(crate) fn capacity(msg: impl Into<String>) -> Self {
        Self::Capacity(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Self::Numerical(msg.into())
    }

    /// Prefixes the message, keeping the variant.
    pub fn context(self, ctx: impl std::fmt::Display) -> Self {
        match self {
            Self::Invalid(m) => Self::Invalid(format!("{ctx}: {m}")),
            Self::Capacity(m) => Self::Capacity(format!("{ctx}: {m}")),
            Self::Numerical(m) => Self::Numerical(format!("{ctx}: {m}")),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
