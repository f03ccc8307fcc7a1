use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected length {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid tensor: {0}")]
    InvalidTensor(String),

    #[error("operation requires even order, got m = {0}")]
    UnsupportedOrder(usize),

    #[error("negative component {value} at index {index} with non-integer exponent {exponent}")]
    NegativeBase {
        index: usize,
        value: f64,
        exponent: f64,
    },

    #[error("invalid norm: p = {0} (must be >= 1)")]
    InvalidNorm(f64),

    #[error("tensor is classified {actual}, operation requires {required}")]
    WrongClass {
        required: &'static str,
        actual: &'static str,
    },

    #[error("grid too large: {points} points exceeds limit {limit}")]
    GridTooLarge { points: u128, limit: u128 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("bound requires a non-zero solution")]
    ZeroSolution,

    #[error("parse error: {0}")]
    Parse(String),
}
