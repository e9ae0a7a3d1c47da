use std::path::PathBuf;

use thiserror::Error;

use crate::model::RegionKey;

pub type Result<T, E = PqmError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum PqmError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path} at {location}: {message}")]
    Parse {
        path: PathBuf,
        /// Human readable position, e.g. `line 12` or `byte 4096`.
        location: String,
        message: String,
    },

    #[error("{0} point cloud is empty")]
    EmptyCloud(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid configuration `{field}`: {message}")]
    InvalidConfig {
        field: &'static str,
        message: String,
    },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("{metric} is undefined: {reason}")]
    UndefinedMetric {
        metric: &'static str,
        reason: String,
    },

    #[error("earth mover's distance needs a bijection, got {left} and {right} points")]
    Bijectivity { left: usize, right: usize },

    #[error("instance of {points} points exceeds the exact solver cap of {max}")]
    InstanceTooLarge { points: usize, max: usize },

    #[error("operation produced an empty result: {0}")]
    EmptyResult(String),

    #[error("configuration mismatch: {0}")]
    Config(String),

    #[error("{} region task(s) failed: {}", .failures.len(), describe_failures(.failures))]
    RegionTasks { failures: Vec<(RegionKey, String)> },
}

fn describe_failures(failures: &[(RegionKey, String)]) -> String {
    failures
        .iter()
        .map(|(key, msg)| format!("region {key}: {msg}"))
        .collect::<Vec<_>>()
        .join("; ")
}

impl PqmError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        PqmError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(
        path: impl Into<PathBuf>,
        location: impl Into<String>,
        message: impl Into<String>,
    ) -> Self {
        PqmError::Parse {
            path: path.into(),
            location: location.into(),
            message: message.into(),
        }
    }

    pub(crate) fn undefined(metric: &'static str, reason: impl Into<String>) -> Self {
        PqmError::UndefinedMetric {
            metric,
            reason: reason.into(),
        }
    }
}
