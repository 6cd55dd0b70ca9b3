use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed scenario document: {0}")]
    Malformed(String),

    #[error("probability out of range: {what} = {value} (expected a value in [0, 1])")]
    ProbabilityOutOfRange { what: String, value: f64 },

    #[error("missing self-loop weight for node {node} at time {time}")]
    MissingSelfLoop { node: usize, time: usize },

    #[error("{what} index {index} out of range (size {size})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        size: usize,
    },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("state space too large: n = {n} exceeds the cap of {cap} nodes for {what}")]
    CapExceeded {
        what: &'static str,
        n: usize,
        cap: usize,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Errors caused by bad input rather than by a failure while running.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Malformed(_)
                | Error::ProbabilityOutOfRange { .. }
                | Error::MissingSelfLoop { .. }
                | Error::IndexOutOfRange { .. }
                | Error::Dimension(_)
                | Error::InvalidParameter(_)
                | Error::Parse { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
