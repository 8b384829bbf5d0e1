use std::path::PathBuf;

use thiserror::Error;

/// Which standing assumption on the coefficients a check refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Assumption {
    /// Non-negative cross sections.
    A1,
    /// Bounded (finite) cross sections and kernels.
    A2,
    /// Angular integral of the scattering kernel bounded by the configured constant.
    A3,
    /// Strictly positive, continuous stopping power on the energy range.
    A4,
}

impl std::fmt::Display for Assumption {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Assumption::A1 => "A1",
            Assumption::A2 => "A2",
            Assumption::A3 => "A3",
            Assumption::A4 => "A4",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("config key `{key}`: {message}")]
    ConfigKey { key: String, message: String },

    #[error("assumption {assumption} violated: {detail}")]
    Assumption { assumption: Assumption, detail: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("phantom {path}: {message}")]
    Phantom { path: PathBuf, message: String },

    #[error("parse error in {path} line {line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },

    #[error("source iteration did not converge after {iterations} iterations (relative change {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("line search failed at iteration {iteration}: step {step:.3e} below minimum (objective {objective:.6e})")]
    LineSearch { iteration: usize, step: f64, objective: f64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::NonConvergence { .. } | Error::LineSearch { .. } | Error::Domain(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
