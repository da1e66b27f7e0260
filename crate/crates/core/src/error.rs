use thiserror::Error;

/// Errors shared by every module in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("modulus {0} is not a supported prime (must be a prime in 2..=31)")]
    BadModulus(u32),
    #[error("mismatched fields: q={0} vs q={1}")]
    FieldMismatch(u8, u8),
    #[error("arity mismatch: expected {expected} variables, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("domain size {size} exceeds cap {cap}")]
    CapExceeded { size: u128, cap: u128 },
    #[error("enumeration budget infeasible: {0}")]
    BudgetInfeasible(String),
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
