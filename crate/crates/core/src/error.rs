use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("state has no support on the energy grid ({0})")]
    EmptySupport(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("outcome impossible at grid resolution: likelihood {likelihood:e} at tau = {tau}")]
    ImpossibleOutcome { tau: f64, likelihood: f64 },

    #[error("density has zero mass")]
    ZeroMass,

    #[error("clock does not fit the energy lattice: {0}")]
    ClockUnresolved(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{0}: malformed table ({1})")]
    Table(PathBuf, String),
}

pub type Result<T> = std::result::Result<T, Error>;
