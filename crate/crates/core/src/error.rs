//! Error taxonomy shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Tensor or layer shapes do not line up.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// A non-finite value appeared where finite arithmetic was expected.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Parameter/gradient/optimizer bookkeeping went out of sync.
    #[error("consistency error: {0}")]
    Consistency(String),

    /// An agent acted out of turn.
    #[error("ordering error: {0}")]
    Ordering(String),

    /// An input value is outside its legal domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// An operation was issued in an illegal lifecycle state (e.g. step after done).
    #[error("lifecycle error: {0}")]
    Lifecycle(String),

    /// Configuration file could not be parsed.
    #[error("config parse error: {0}")]
    ConfigParse(String),

    /// Configuration value failed validation; names the offending key.
    #[error("config validation error: {0}")]
    ConfigValidation(String),

    /// A stage is missing an artifact a previous stage should have produced.
    #[error("dependency error: {0}")]
    Dependency(String),

    /// A CSV or checkpoint file does not match the expected schema.
    #[error("schema error: {0}")]
    Schema(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the CLI: 2 config, 3 dependency, 4 numeric, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::ConfigParse(_) | Error::ConfigValidation(_) => 2,
            Error::Dependency(_) => 3,
            Error::Numeric(_) => 4,
            _ => 1,
        }
    }
}
