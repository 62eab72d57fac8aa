use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function or regime.
    #[error("domain error: {0}")]
    Domain(String),

    /// A problem is too large for the dense oracle path.
    #[error("size error: {what} = {got} exceeds the cap {cap}")]
    Size {
        what: &'static str,
        got: usize,
        cap: usize,
    },

    /// Malformed input data (token streams, counts files, CSV).
    #[error("format error: {0}")]
    Format(String),

    /// Invalid experiment configuration.
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
