use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// An argument lies outside the range where the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),
    /// Vector lengths or shapes disagree.
    #[error("structural error: {0}")]
    Structure(String),
    /// A requested strategy cannot be applied to the given input.
    #[error("configuration error: {0}")]
    Config(String),
    /// A resource guard (enumeration size, frontier size) was hit.
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
