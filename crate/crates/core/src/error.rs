use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid measurement strength (t={t}, r={r}): {reason}")]
    InvalidStrength { t: f64, r: f64, reason: &'static str },

    #[error("value {value} outside the domain [{lo}, {hi}]")]
    Domain { value: f64, lo: f64, hi: f64 },

    #[error("invalid bench configuration: {0}")]
    Config(String),

    #[error("input state does not match the waveplate preparation (overlap {overlap})")]
    PreparationMismatch { overlap: f64 },

    #[error("row {label} has no counts")]
    EmptyRow { label: String },

    #[error("non-positive channel efficiency {0}")]
    Efficiency(f64),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: u64, msg: String },

    #[error("cannot aggregate runs taken at different settings ({a} deg vs {b} deg)")]
    MismatchedPhi { a: f64, b: f64 },

    #[error("nothing to aggregate")]
    NoRuns,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
