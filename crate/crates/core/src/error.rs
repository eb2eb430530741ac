use thiserror::Error;

/// Errors surfaced by the library operations.
///
/// Everything here is a caller-side precondition failure; internal numeric
/// routines never panic on valid inputs.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Requested index exceeds the size supported by the spec or sequence.
    #[error("index {index} out of bounds (limit {limit})")]
    Bounds { index: usize, limit: usize },

    /// A component vector whose level does not match the requested size.
    #[error("level mismatch: l(s) = {level} but n = {n}")]
    LevelMismatch { level: usize, n: usize },

    /// Invalid argument combination.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A cost guard refused an enumeration that would be too large.
    #[error("cost guard: {0}")]
    CostGuard(String),

    /// Rejection sampling ran out of attempts; the caller may retry with a
    /// larger budget.
    #[error("retry budget of {max_attempts} attempts exhausted")]
    RetryBudget { max_attempts: u64 },

    /// Conditioning on an event of probability zero.
    #[error("degenerate conditioning: P(l(xi) = n) = 0")]
    DegenerateConditioning,

    /// The normalised process cannot be built because beta is undefined.
    #[error("beta undefined at m = {m}: log log B(m) <= 0")]
    BetaUndefined { m: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn argument(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }
}
