use thiserror::Error as ThisError;

#[derive(Debug, ThisError)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid address {address}: {reason}")]
    Address { address: String, reason: String },
    #[error("space mismatch: {0}")]
    SpaceMismatch(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("not an operator: {0}")]
    NotAnOperator(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("tree audit failed at junction {junction}: {reason}")]
    TreeAudit { junction: String, reason: String },
    #[error("config error: {0}")]
    Config(String),
    #[error("unknown zoo entry `{0}`")]
    UnknownEntry(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
