use thiserror::Error;

/// Errors raised by the arithmetic kernels and the reports built on them.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("parse error at position {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("division by zero")]
    DivisionByZero,
    #[error("zero input where a nonzero element is required")]
    ZeroInput,
    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),
    #[error("invalid field configuration: {0}")]
    InvalidConfig(String),
    #[error("mismatched operands: {0}")]
    Mismatch(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("trivial extension: {0}")]
    TrivialExtension(String),
    #[error("filtration bound {got} too small, need at least {needed}")]
    FiltrationTooSmall { needed: i64, got: i64 },
    #[error("not found: {0}")]
    NotFound(String),
    #[error("irreducible two-L-entry generator: {0}")]
    TwoLEntries(String),
    #[error("not a prime element: {0}")]
    NotPrime(String),
    #[error("class is not in U_{level} at working precision")]
    NotInFiltration { level: i64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("consistency failure: {0}")]
    Inconsistent(String),
}

impl Error {
    pub(crate) fn precision(msg: impl Into<String>) -> Self {
        Error::PrecisionExhausted(msg.into())
    }

    /// True for failures caused by working precision or filtration bounds,
    /// as opposed to malformed input or a failed verification.
    pub fn is_refusal(&self) -> bool {
        matches!(
            self,
            Error::PrecisionExhausted(_) | Error::FiltrationTooSmall { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
