use thiserror::Error;

/// Errors produced across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A spectral coefficient of the right operand vanishes, so the
    /// Fourier quotient criterion is undefined.
    #[error("indeterminate spectrum: coefficient {index} has modulus {modulus:e}")]
    IndeterminateSpectrum { index: usize, modulus: f64 },

    /// The log-spectrum divisibility test cannot be evaluated (zero coefficient).
    #[error("not divisible by criterion: spectral coefficient {index} is zero")]
    NotDivisibleByCriterion { index: usize },

    #[error("unsupported alphabet size {a} (expected {expected})")]
    UnsupportedAlphabet { a: usize, expected: &'static str },

    #[error("resource limit: {what} needs {needed}, cap is {cap}")]
    ResourceLimit {
        what: &'static str,
        needed: u128,
        cap: u128,
    },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("format error at byte offset {offset}: {reason}")]
    Format { offset: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
