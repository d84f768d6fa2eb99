use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("rank deficient feature matrix: smallest singular value {smallest:e} below {threshold:e}")]
    RankDeficient { smallest: f64, threshold: f64 },
    #[error("target vector is zero")]
    DegenerateTarget,
    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),
    #[error("invalid schedule parameters: {0}")]
    InvalidParams(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("direction vector vanished")]
    ZeroDirection,
    #[error("projected step vanished")]
    ZeroProjection,
    #[error("column {0} of the direction factor vanished")]
    ZeroColumn(usize),
    #[error("normalizing factor vanished")]
    ZeroNorm,
    #[error("non-finite state at step {step}")]
    NonFinite { step: usize },
    #[error("integrator step size underflow at t = {time}")]
    ToleranceNotMet { time: f64 },
    #[error("stepsize ratio c must be positive")]
    CNotPositive,
    #[error("division by zero in {0}")]
    DivisionByZero(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;
