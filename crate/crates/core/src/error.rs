use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("segment {0} is not primitive")]
    NotPrimitive(String),
    #[error("malformed chain: {0}")]
    MalformedChain(String),
    #[error("move cannot be applied: {0}")]
    BadMove(String),
    #[error("seed invariant violated: {0}")]
    SeedInvariant(String),
    #[error("value outside domain: {0}")]
    Domain(String),
    #[error("inconsistent table: {0}")]
    Inconsistent(String),
    #[error("limit exceeded: {0}")]
    Limit(String),
}

pub type Result<T> = std::result::Result<T, Error>;
