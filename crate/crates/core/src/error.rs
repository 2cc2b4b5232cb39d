use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("bandwidth error: {0}")]
    Bandwidth(String),
    #[error("Hermitian symmetry violated at n = {n} (defect {defect:e})")]
    SymmetryViolation { n: i64, defect: f64 },
    #[error("invalid symbol: {0}")]
    InvalidSymbol(String),
    #[error("symbol class check failed ({property}): {detail}")]
    SymbolClass { property: &'static str, detail: String },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("blow-up after t = {last_good_time}: {reason}")]
    BlowUp { last_good_time: f64, reason: String },
    #[error("calibration required: {0}")]
    CalibrationRequired(String),
    #[error("resolution error: {0}")]
    Resolution(String),
    #[error("undefined envelope: {0}")]
    UndefinedEnvelope(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
