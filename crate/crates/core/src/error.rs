use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("user index {index} out of range for {len} users")]
    IndexOutOfRange { index: usize, len: usize },

    /// The closed form is not valid for these arguments; the numeric
    /// expectation must be used instead.
    #[error("unsupported region for closed form: {0}")]
    UnsupportedRegion(String),

    /// f(lo) and f(hi) do not have opposite signs.
    #[error("no sign change on [{lo}, {hi}]: f(lo) = {f_lo}, f(hi) = {f_hi}")]
    Bracket {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error("design infeasible: {0}")]
    DesignInfeasible(String),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
