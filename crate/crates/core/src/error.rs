use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Configuration problems, always naming the offending key.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid configuration: {0}")]
    Parse(String),
    #[error("invalid value for `{key}`: {constraint}")]
    Invalid { key: String, constraint: String },
}

impl ConfigError {
    pub fn invalid(key: impl Into<String>, constraint: impl Into<String>) -> Self {
        ConfigError::Invalid {
            key: key.into(),
            constraint: constraint.into(),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ControlError {
    #[error("service {0} appears more than once in the demand set")]
    DuplicateService(usize),
    #[error("service {0} has a negative or undefined demand")]
    NegativeDemand(usize),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Control(#[from] ControlError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
