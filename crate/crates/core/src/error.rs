use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("index out of range: {what} = {index}, limit {limit}")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        limit: usize,
    },

    #[error("insufficient data: {what} needs at least {needed}, got {got}")]
    InsufficientData {
        what: &'static str,
        needed: usize,
        got: usize,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("corrupt record at byte {offset}: {message}")]
    CorruptRecord { offset: usize, message: String },

    #[error("no valid CSI records found")]
    EmptyTrace,

    #[error("value out of range: {0}")]
    Range(String),

    #[error("line {line}: field `{field}`: {message}")]
    Schema {
        line: usize,
        field: String,
        message: String,
    },

    #[error("degenerate training set: {0}")]
    DegenerateTraining(String),

    #[error("SMO did not converge after {iterations} iterations (KKT residual {residual:.3e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("Platt calibration did not converge (gradient norm {gradient_norm:.3e})")]
    Calibration { gradient_norm: f64 },

    #[error("training error: {0}")]
    Training(String),

    #[error("model load error: {0}")]
    ModelLoad(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Coarse grouping used by front ends to choose exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Data,
    Training,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidArgument(_) | Error::IndexOutOfRange { .. } | Error::Config(_) => {
                ErrorClass::Usage
            }
            Error::DegenerateTraining(_)
            | Error::Convergence { .. }
            | Error::Calibration { .. }
            | Error::Training(_) => ErrorClass::Training,
            _ => ErrorClass::Data,
        }
    }
}
