//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Tensor or graph shape disagreement. `context` names the offending node
    /// or argument.
    #[error("shape mismatch at {context}: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        context: String,
        expected: Vec<usize>,
        found: Vec<usize>,
    },

    /// Invalid argument or state, described in prose.
    #[error("{0}")]
    Invalid(String),

    /// NaN or infinity showed up where the contract requires finite values.
    #[error("non-finite value in {0}")]
    NonFinite(String),

    /// Dataset ingestion failure (bad magic, truncation, empty corpus, ...).
    #[error("data error: {0}")]
    Data(String),

    /// Configuration file problem.
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// A training run hit a NaN loss. Carries enough context for the CLI to
    /// exit with the dedicated divergence status.
    #[error("training diverged at iteration {iteration} (loss {loss})")]
    Divergence { iteration: u64, loss: f64 },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
