use alloc::string::String;

/// Errors raised by the planning core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Malformed input: bad indices, non-stochastic rows, bad weights.
    #[error("validation error: {0}")]
    Validation(String),
    /// An operation was applied to a tree node in the wrong state.
    #[error("invalid tree state: {0}")]
    State(String),
    /// A node cap or evaluation budget would be exceeded.
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    /// The requested operation needs something the problem cannot provide.
    #[error("unsupported operation: {0}")]
    Capability(String),
    /// A formula was evaluated outside its domain.
    #[error("domain error: {0}")]
    Domain(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

macro_rules! bail {
    ($kind:ident, $($arg:tt)*) => {
        return Err($crate::error::Error::$kind(alloc::format!($($arg)*)))
    };
}
pub(crate) use bail;
