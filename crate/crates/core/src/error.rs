//! Error type shared across the library.

use std::path::PathBuf;
use thiserror::Error;

/// Errors produced by any stage of the pipeline.
///
/// Variants are grouped so a front end can map them onto coarse exit
/// classes: configuration/usage problems, data problems, and training
/// failures.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Invalid configuration value or artifact/config file content.
    #[error("config error: {0}")]
    Config(String),

    /// Malformed or inconsistent input data.
    #[error("data error: {0}")]
    Data(String),

    /// Schema or vocabulary mismatch between components.
    #[error("schema error: {0}")]
    Schema(String),

    /// Model misuse (shape mismatch, id out of range, missing context).
    #[error("model error: {0}")]
    Model(String),

    /// Training aborted with a non-finite loss.
    #[error("training diverged: {0}")]
    Divergence(String),

    /// Sampling could not produce the requested rows.
    #[error("sampling error: {0}")]
    Sampling(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
