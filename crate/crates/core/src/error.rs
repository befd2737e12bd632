use thiserror::Error;

/// Errors raised by every module of the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hermitian (defect {defect:.3e} > tol {tol:.3e})")]
    NotHermitian { defect: f64, tol: f64 },

    #[error("index {index} out of range for {len} factors")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("empty Kraus list")]
    EmptyKraus,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("operation not defined for distribution/state kind {0}")]
    WrongKind(String),

    #[error("empty selection: {0}")]
    EmptySelection(String),

    #[error("transform matrix is ill-conditioned (condition number {cond:.3e})")]
    IllConditioned { cond: f64 },

    #[error("weak value undefined: pre- and post-selected states are orthogonal")]
    UndefinedWeakValue,

    #[error("rectangular channel chain: {0}")]
    Rectangular(String),

    #[error("dilation failed: {0}")]
    Dilation(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn dim_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::DimensionMismatch(msg.into()))
}
