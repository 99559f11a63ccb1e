use std::path::PathBuf;

use crate::basis::Basis;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("expected a {expected:?}-basis operand, got {found:?}")]
    BasisMismatch { expected: Basis, found: Basis },

    #[error("operand sizes differ: {left} sites vs {right} sites")]
    SiteMismatch { left: usize, right: usize },

    #[error("site count {0} is outside the supported range 1..=30")]
    SiteCount(usize),

    #[error("band index {b} out of range for L = {sites} (max {max})")]
    BandOutOfRange { b: usize, sites: usize, max: usize },

    #[error("invalid model parameter: {0}")]
    InvalidParams(String),

    #[error("dense matrices are limited to L <= {limit}, got L = {sites}")]
    DenseTooLarge { sites: usize, limit: usize },

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("{what}: no crossing within the time horizon t = {horizon}")]
    NoCrossing { what: &'static str, horizon: f64 },

    #[error("Chebyshev expansion did not converge below order {max_order} (a*dt = {scaled_step})")]
    ChebyshevOrder { max_order: usize, scaled_step: f64 },

    #[error("norm drift {drift:e} exceeds {limit:e} at t = {time}")]
    NormDrift { drift: f64, limit: f64, time: f64 },

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("estimate undefined: {0}")]
    Estimate(String),

    #[error("config error{}: {message}", line.map(|l| format!(" (line {l})")).unwrap_or_default())]
    Config { line: Option<usize>, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn config(message: impl Into<String>) -> Self {
        Error::Config {
            line: None,
            message: message.into(),
        }
    }

    /// Errors caused by numerics rather than by user input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::ChebyshevOrder { .. }
                | Error::NormDrift { .. }
                | Error::NoCrossing { .. }
                | Error::NotSymmetric(_)
                | Error::Estimate(_)
        )
    }
}
