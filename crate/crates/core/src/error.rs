use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the core numerical and domain routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse {what}: {source}")]
    Parse {
        what: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("argument out of domain: {0}")]
    Domain(String),
    #[error("kappa is undefined: no alpha_k equals 1 for k <= n-1")]
    KappaUndefined,
    #[error("operation requires the {expected} regime, chain is {actual}")]
    Regime { expected: &'static str, actual: String },
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("cycle is unstable: loop exponents decay without reaching 1")]
    UnstableCycle,
}

pub type Result<T> = std::result::Result<T, Error>;
