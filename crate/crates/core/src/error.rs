use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("invalid parameter `{name}`: {reason}")]
    Param { name: &'static str, reason: String },

    #[error("numerical failure at t = {t:.6e} s: {reason}")]
    Numerical { t: f64, reason: String },

    #[error("step size reached dt_min at t = {t:.6e} s with local error {err:.3e} above tolerance {tol:.3e}")]
    Stiff { t: f64, err: f64, tol: f64 },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("read voltage {v_read} V exceeds disturb ceiling {ceiling} V")]
    DisturbRisk { v_read: f64, ceiling: f64 },

    #[error("configuration error at `{path}`: {reason}")]
    Config { path: String, reason: String },

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Param {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn config(path: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
