use thiserror::Error;

/// Errors produced by the codec and its tooling.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    /// Caller-supplied data violates a precondition.
    #[error("invalid input: {0}")]
    Input(String),

    /// Two frames (or sequences) that must agree in shape do not.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// The coded stream is malformed. `bit` is the read position at which the
    /// problem was detected.
    #[error("decode error at bit {bit}: {msg}")]
    Decode { bit: usize, msg: String },

    #[error("i/o: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn decode(bit: usize, msg: impl Into<String>) -> Self {
        Error::Decode {
            bit,
            msg: msg.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
