use thiserror::Error;

/// Errors raised by configuration, generation and I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error at position {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("tuple count overflows the platform integer width")]
    Overflow,

    #[error("non-finite position value {0}")]
    NonFinite(f64),

    #[error("not enough samples for the rank-sum normal approximation: need at least {min}, got {got}")]
    InsufficientSamples { min: usize, got: usize },

    #[error("verification failed: {0}")]
    Verification(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn config_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}
