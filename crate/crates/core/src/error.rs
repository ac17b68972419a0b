use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the planner and simulator.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of a formula (non-positive distance, negative load, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A path-loss model was asked to run outside its validity window in strict mode.
    #[error("{model} is valid for {min_mhz}-{max_mhz} MHz, got {got_mhz:.1} MHz")]
    Validity {
        model: &'static str,
        min_mhz: f64,
        max_mhz: f64,
        got_mhz: f64,
    },

    /// Inconsistent or incomplete configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// A bistatic-only call received an RCS tag or vice versa.
    #[error("mode error: {0}")]
    Mode(String),

    /// Array dimensions disagree.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Not enough samples to form a decision.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Records handed to the CSV writer do not share one column set.
    #[error("schema error: {0}")]
    Schema(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
