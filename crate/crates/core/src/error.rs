use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A predictor or task configuration violates one of its documented bounds.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("unsupported variant: {0}")]
    Unsupported(String),

    /// Every mixture component assigns zero likelihood to the observed prompt.
    #[error("degenerate posterior: all component evidences are -inf")]
    DegeneratePosterior,

    #[error("support of {size} points exceeds the enumeration limit of {limit}; use the MCMC sampler")]
    Capacity { size: u128, limit: u128 },

    #[error("infeasible constraints (phase-one residual {residual:e})")]
    Infeasible { residual: f64 },

    #[error("grid of {m} points cannot resolve {required} coefficients")]
    UnderResolved { m: usize, required: usize },

    #[error("predictor `{name}` failed: {message}")]
    Predictor { name: String, message: String },

    #[error("misaligned inputs: {0}")]
    Alignment(String),

    #[error("{failed} of {total} evaluations failed: {first}")]
    Partial {
        failed: usize,
        total: usize,
        first: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
