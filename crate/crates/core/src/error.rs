use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("K_{order}({arg}) overflows f64; use log_bessel_k")]
    Overflow { order: f64, arg: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("theta {theta:?} lies outside the parameter box")]
    OutOfBox { theta: Vec<f64> },

    #[error("theta {theta:?} is not in Θ(2) (margin {margin})")]
    NotInTheta2 { theta: Vec<f64>, margin: f64 },

    #[error("presample has {got} rows but the family reads {needed} lags")]
    InsufficientPresample { needed: usize, got: usize },

    #[error("H_t is not positive definite at t = {t} for theta {theta:?}")]
    Factorization { t: usize, theta: Vec<f64> },

    #[error("objective non-finite everywhere")]
    NonFiniteObjective,
}
