use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("zero pilot energy on subcarrier {0}")]
    ZeroPilotEnergy(usize),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("output length {out_len} shorter than input length {in_len}")]
    OutputTooShort { in_len: usize, out_len: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
