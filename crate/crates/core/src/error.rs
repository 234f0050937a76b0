//! Error type shared across the toolkit.
//!
//! Variants separate configuration problems (bad hyper-parameters, shape
//! mismatches, malformed config files) from data problems (unreadable or
//! malformed datasets, vocabularies, model files) because the command-line
//! frontend maps them to distinct exit codes.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration: rejected hyper-parameters, inconsistent
    /// network shapes, malformed config keys.
    #[error("config error: {0}")]
    Config(String),

    /// Invalid or unreadable input data: datasets, vocabulary files,
    /// model files, prediction files.
    #[error("data error: {0}")]
    Data(String),

    /// Training failure at runtime, e.g. the objective became non-finite.
    #[error("training error: {0}")]
    Train(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub fn train(msg: impl Into<String>) -> Self {
        Error::Train(msg.into())
    }
}
