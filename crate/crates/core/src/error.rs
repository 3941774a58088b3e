use chrono::NaiveDate;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("insufficient data: need at least {needed}, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("non-finite value at index {index}: {message}")]
    Numerical { index: usize, message: String },

    #[error("insufficient history for proposal adaptation: need {needed} rows, got {got}")]
    InsufficientHistory { needed: usize, got: usize },

    #[error(
        "adaptation failure: acceptance rate {rate:.4} after burn-in is below 1%; \
         widen the prior or lengthen the burn-in"
    )]
    AdaptationFailure { rate: f64 },

    #[error("autocorrelation undefined for a zero-variance series")]
    UndefinedAcf,

    #[error("division by zero: {message}")]
    DivisionByZero { message: String, dates: Vec<NaiveDate> },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 1 for numerical or adaptation failures, 2 for bad input.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numerical { .. }
            | Error::AdaptationFailure { .. }
            | Error::UndefinedAcf
            | Error::DivisionByZero { .. } => 1,
            _ => 2,
        }
    }
}
