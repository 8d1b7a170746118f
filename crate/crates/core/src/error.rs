use thiserror::Error;

/// Errors shared by every module of the crate.
///
/// The variants separate caller mistakes (`Domain`, `Degenerate`, `Parse`)
/// from limits of exact arithmetic or memory (`Range`, `Resource`) so that
/// front ends can map them onto distinct exit codes.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// A value left the exactly representable range (128-bit overflow,
    /// sieve limit exceeded).
    #[error("range error: {0}")]
    Range(String),
    /// A precondition on the mathematical input was violated.
    #[error("domain error: {0}")]
    Domain(String),
    /// The input is valid but too small or too sparse for the operation.
    #[error("degenerate input: {0}")]
    Degenerate(String),
    /// A configured memory budget would be exceeded.
    #[error("resource error: {0}")]
    Resource(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn overflow(what: &str) -> Error {
    Error::Range(format!("128-bit overflow while computing {what}"))
}
