use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("context mismatch: p={left} vs p={right}")]
    ContextMismatch { left: u32, right: u32 },
    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),
    #[error("division by exact zero")]
    DivisionByZero,
    #[error("{0} is not a unit")]
    NonUnit(String),
    #[error("repeated root: the eigenvalue polynomial has a double root to working precision")]
    RepeatedRoot,
    #[error("slope condition violated: {0}")]
    SlopeViolation(String),
    #[error("truncation overflow: degree {degree} exceeds Dmax {dmax}")]
    TruncationOverflow { degree: usize, dmax: usize },
    #[error("series is truncated without a tail bound; cannot evaluate exactly")]
    InsufficientTruncation,
    #[error("moduli are not coprime")]
    ModuliNotCoprime,
    #[error("component delta^{delta} has a non-unit c-factor (meromorphic)")]
    MeromorphicComponent { delta: u32 },
    #[error("singular matrix: {0}")]
    Singular(String),
    #[error("output does not stabilize: {0}")]
    NonStabilizing(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
