use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("domain error in {func}: {reason}")]
    Domain { func: &'static str, reason: String },

    #[error("capacity error: {0}")]
    Capacity(String),

    /// Adaptive quadrature ran out of depth or evaluations. The best
    /// available estimate is kept so callers can decide what to do with it.
    #[error("quadrature did not converge: estimate {estimate:e}, error bound {error_bound:e}")]
    Quadrature { estimate: f64, error_bound: f64 },

    #[error("no blocklength up to {cap} carries {k_bits} bits at eps = {eps:e}")]
    Infeasible { k_bits: f64, eps: f64, cap: u64 },

    #[error("invalid configuration: {0}")]
    Configuration(String),

    #[error("unsupported model: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn domain(func: &'static str, reason: impl Into<String>) -> Self {
        Error::Domain {
            func,
            reason: reason.into(),
        }
    }

    /// True for errors caused by user input rather than numerical trouble.
    pub fn is_configuration(&self) -> bool {
        matches!(
            self,
            Error::Configuration(_) | Error::Config(_) | Error::Io { .. } | Error::Unsupported(_)
        )
    }
}

/// Problems found while reading an experiment configuration file.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Missing {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed entry {text:?} (expected `key = value`)")]
    Malformed { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: cannot parse value for `{key}`: {value:?}")]
    BadValue { line: usize, key: String, value: String },
    #[error("line {line}: `{key}` out of range: {reason}")]
    OutOfRange { line: usize, key: String, reason: String },
}
