use thiserror::Error;

/// Errors raised by model construction, simulation and the verification harness.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum SpError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("rate {rate} at t={t}, x={x:?} is outside [0, {bound}]")]
    RateOutOfBounds {
        t: f64,
        x: Vec<f64>,
        rate: f64,
        bound: f64,
    },

    #[error("non-finite value produced at t={t}, x={x:?}: {what}")]
    NonFinite { t: f64, x: Vec<f64>, what: String },

    #[error("runaway trajectory: more than {max_jumps} renewals before t={time}")]
    Runaway { max_jumps: usize, time: f64 },

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error("PIDE grid unstable: {0}")]
    Unstable(String),

    #[error("PIDE domain too small: {0}")]
    DomainTooSmall(String),

    #[error("point outside domain: {0}")]
    OutOfDomain(String),

    #[error("worker pool: {0}")]
    Executor(String),
}

pub type Result<T> = std::result::Result<T, SpError>;

pub(crate) fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(SpError::InvalidArgument(msg()))
    }
}
