use alloc::string::String;

/// Errors raised by environment construction, simulation and analysis.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("{field}: {message}")]
    Domain { field: &'static str, message: String },

    /// The operation is not defined for this environment family or geometry.
    #[error("unsupported operation: {0}")]
    Unsupported(String),

    /// Both laziness parameters vanish; the two-state chain has no mixing.
    #[error("degenerate chain: {0}")]
    DegenerateChain(String),

    #[error("chain is reducible; stationary vector is not unique")]
    Reducible,

    #[error("insufficient data: need at least {needed}, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("resource limit exceeded: {0}")]
    Resource(String),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn domain(field: &'static str, message: impl Into<String>) -> Error {
    Error::Domain {
        field,
        message: message.into(),
    }
}
