use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("series too short: need at least {needed} samples, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("non-finite value at index {0}")]
    NonFinite(usize),

    #[error("cutoff {cutoff_hz} Hz outside (0, {nyquist_hz}) Hz")]
    CutoffOutOfRange { cutoff_hz: f64, nyquist_hz: f64 },

    #[error("no sample reaches the velocity threshold")]
    NoMovement,

    #[error("zero velocity at sample {0}")]
    ZeroVelocity(usize),

    #[error("non-positive lambda {value} at sample {index}")]
    NonPositiveLambda { index: usize, value: f64 },

    #[error("state reached or crossed the target at step {step} (x = {x}, target = {target})")]
    Singularity { step: usize, x: f64, target: f64 },

    #[error("simulation exceeded the cap of {0} steps")]
    StepCapExceeded(usize),

    #[error("degenerate problem: {0}")]
    Degenerate(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, err: impl std::fmt::Display) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            message: err.to_string(),
        }
    }
}
