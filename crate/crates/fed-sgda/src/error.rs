//! Error type shared across the simulator.
//!
//! Configuration problems (bad dimensions, invalid hyperparameters) are
//! separated from protocol violations (non-finite values crossing a
//! server/client boundary, broken invariants detected at runtime) so callers
//! can tell "you asked for something impossible" apart from "the run blew up".

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// The requested run cannot be set up: inconsistent dimensions,
    /// out-of-range hyperparameters, malformed inputs.
    #[error("configuration error: {0}")]
    Config(String),

    /// A runtime invariant of the round protocol failed, e.g. a non-finite
    /// coordinate reached a server/client exchange or an estimator was fed
    /// gradients for a point it did not request.
    #[error("protocol violation: {0}")]
    Protocol(String),

    /// An iterative oracle (numeric inner maximization, plateau search)
    /// exhausted its iteration budget before reaching its tolerance.
    #[error("oracle did not converge: {what} (residual {residual:e})")]
    NonConvergence { what: String, residual: f64 },

    /// Reading or writing datasets / experiment outputs failed.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// A text payload (dataset file, config file) could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn protocol(msg: impl Into<String>) -> Self {
        Error::Protocol(msg.into())
    }

    pub fn parse(msg: impl Into<String>) -> Self {
        Error::Parse(msg.into())
    }
}
