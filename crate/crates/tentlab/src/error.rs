//! Crate-wide error type.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{name} = {value} is outside the allowed range ({min}, {max}]")]
    ParamRange {
        name: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("{what} = {value} lies outside [-1, 1]")]
    Domain { what: &'static str, value: f64 },

    #[error("bin counts differ: {left} vs {right}")]
    ShapeMismatch { left: usize, right: usize },

    #[error("power iteration residual {residual:.3e} still above tolerance after {maxiter} iterations")]
    NonConvergence { residual: f64, maxiter: usize },

    #[error("critical orbit at t = {t} shows no revisit within depth {depth}; map is not Markov at this tolerance")]
    NotMarkov { t: f64, depth: usize },

    #[error("plane point ({u}, {v}) lies outside the radius-2 disk")]
    OutsideDisk { u: f64, v: f64 },

    #[error("thread mismatch: {0}")]
    ThreadMismatch(&'static str),

    #[error("all {depth} thread entries lie on I; indistinguishable from an attractor point at this depth")]
    AllOnInterval { depth: usize },

    #[error("{path}:{line}: {msg}")]
    ConfigParse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("config key `{key}`: {msg}")]
    ConfigRange { key: String, msg: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
