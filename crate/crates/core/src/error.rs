use thiserror::Error;

/// Errors raised by sketch construction and application.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SketchError {
    /// A caller broke an operation's precondition (shape, arity, range).
    #[error("contract violation: {0}")]
    Contract(String),
    /// A structure could not be built from the requested parameters.
    #[error("construction failed: {0}")]
    Construction(String),
    /// `n^q` does not fit the platform integer.
    #[error("index space {n}^{modes} overflows usize")]
    Overflow { n: usize, modes: usize },
}

pub type Result<T> = std::result::Result<T, SketchError>;

pub(crate) fn contract<T>(msg: impl Into<String>) -> Result<T> {
    Err(SketchError::Contract(msg.into()))
}
