use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// `user` is zero-based.
    #[error("cluster is infeasible: user {} needs {required:e} W but may use {cap:e} W", .user + 1)]
    Infeasible { user: usize, required: f64, cap: f64 },

    #[error("root is not bracketed: f(lo) = {f_lo:e}, f(hi) = {f_hi:e}")]
    NotBracketed { f_lo: f64, f_hi: f64 },

    #[error("enumeration refused: {count} matchings exceed the budget of {budget}")]
    BudgetExceeded { count: u128, budget: u128 },
}
