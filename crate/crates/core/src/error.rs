use thiserror::Error;

/// Errors produced by the planning library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The transform is the identity, so no screw axis is defined.
    #[error("identity transform has no screw axis")]
    NoScrew,

    #[error("contact mismatch: {0}")]
    ContactMismatch(String),

    #[error("{path}: {message}")]
    Io { path: String, message: String },

    #[error("no feasible back-and-forth solution up to k = {max_k}: {diagnostics}")]
    Infeasible { max_k: usize, diagnostics: String },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
