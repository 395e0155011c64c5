use std::path::PathBuf;

use thiserror::Error;

use crate::kinematics::RodError;

/// Errors raised above the rod engine: configuration, I/O and API misuse.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Rod(#[from] RodError),
    /// `path` is the dotted location of the offending field, empty for the
    /// document root.
    #[error("config error{}: {message}", if path.is_empty() { String::new() } else { format!(" at {path}") })]
    Config { path: String, message: String },
    #[error("dimension error: expected {expected} values, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("non-finite action value at index {index}")]
    NonFiniteAction { index: usize },
    #[error("episode is over; call reset first")]
    EpisodeOver,
    #[error("policy error: {0}")]
    Policy(String),
    #[error("trajectory file: {0}")]
    Trajectory(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config { path: path.into(), message: message.into() }
    }
}
