use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },

    #[error("time grid must start at 0 and be strictly increasing (offending index {index})")]
    BadTimeGrid { index: usize },

    #[error("Fock truncation {n} is below the minimum of 2")]
    TruncationTooSmall { n: usize },

    #[error("coherent state |alpha|={alpha_abs} leaks probability {leaked:e} beyond N={n}")]
    TruncationLeakage { alpha_abs: f64, n: usize, leaked: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unknown operator kind `{0}`")]
    UnknownOperatorKind(String),

    #[error("unknown method `{0}`")]
    UnknownMethod(String),

    #[error("method `{method}` is not handled by {handler}")]
    WrongMethod { method: String, handler: &'static str },

    #[error("density matrix lost positivity at t={t}: smallest eigenvalue {min_eig:e}")]
    PositivityViolation { t: f64, min_eig: f64 },

    #[error("non-finite amplitudes at t={t}")]
    NonFinite { t: f64 },

    #[error("truncation sweep did not converge (last difference {last_diff:e} at N={n})")]
    NotConverged { n: usize, last_diff: f64 },

    #[error("collapse model {model} is missing `{field}`")]
    MissingField { model: &'static str, field: &'static str },
}

pub(crate) fn positive(name: &'static str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::InvalidParam { name, reason: format!("must be finite and > 0, got {v}") })
    }
}

pub(crate) fn non_negative(name: &'static str, v: f64) -> Result<f64> {
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(Error::InvalidParam { name, reason: format!("must be finite and >= 0, got {v}") })
    }
}
