use thiserror::Error;

/// Errors raised by the algebra layers.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
    #[error("ring mismatch: operands live over different rings")]
    RingMismatch,
    #[error("element is not a unit")]
    NotUnit,
    #[error("element is not divisible by p")]
    NotDivisible,
    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("divisibility failure in exterior power: {0}")]
    ExteriorDivisibility(String),
    #[error("invalid formal group law: {0}")]
    InvalidLaw(String),
    #[error("series is zero")]
    ZeroSeries,
    #[error("coefficient is not p-integral: {0}")]
    NotIntegral(String),
    #[error("degree bound too small: {0}")]
    DegreeTooSmall(String),
    #[error("side condition violated: {0}")]
    SideCondition(String),
    #[error("bidegree mismatch: {0}")]
    Bidegree(String),
    #[error("unsupported expression: {0}")]
    Unsupported(String),
    #[error("malformed input: {0}")]
    Malformed(String),
}

pub type Result<T> = std::result::Result<T, Error>;
