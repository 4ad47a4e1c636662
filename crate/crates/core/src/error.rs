use alloc::string::String;

/// Errors raised by the core library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Operand shapes do not agree.
    #[error("shape mismatch in {op}: expected {expected}, got {got}")]
    Shape {
        op: &'static str,
        expected: String,
        got: String,
    },
    /// Input lies outside the operation's domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// Iterative routine failed or produced a non-finite value.
    #[error("numeric error: {0}")]
    Numeric(String),
    /// Table lookup out of range.
    #[error("lookup error: index {index} out of range for table of {len} rows")]
    Lookup { index: usize, len: usize },
    /// Input is degenerate (zero vector, empty sentence).
    #[error("degenerate input: {0}")]
    Degenerate(String),
    /// Invalid configuration value.
    #[error("config error: {0}")]
    Config(String),
    /// Dataset content violates a required property.
    #[error("data error: {0}")]
    Data(String),
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn shape_err(op: &'static str, expected: impl Into<String>, got: impl Into<String>) -> Error {
    Error::Shape {
        op,
        expected: expected.into(),
        got: got.into(),
    }
}
