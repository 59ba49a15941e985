use thiserror::Error;

/// Errors raised by channel construction and analysis.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A numerical contract was violated (non-Hermitian input, bad density
    /// matrix, ...).
    #[error("contract violation: {0}")]
    ContractViolation(String),

    /// Cross-block coherences exceeded tolerance, i.e. the expected
    /// direct-sum decomposition does not hold.
    #[error("block structure violation: {0}")]
    StructureViolation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
