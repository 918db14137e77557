use thiserror::Error;

/// Errors raised by the self-testing library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("matrix is not Hermitian (max |M - M^dagger| = {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("Bloch vector norm {norm} exceeds 1")]
    InvalidBloch { norm: f64 },

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("strategy is not self-testable: anticommutator norm {anticommutator:e} for sender {sender}")]
    NotSelfTestable { sender: usize, anticommutator: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
