use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid number literal {0:?}")]
    InvalidNumber(String),

    #[error("malformed valuation: {0}")]
    MalformedValuation(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("{what} needs at most {limit} agents, got {n}")]
    TooLarge { what: &'static str, n: usize, limit: usize },

    #[error("mechanism {mechanism} does not apply: {reason}")]
    Unsupported { mechanism: String, reason: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("allocation rule is not monotone: {0}")]
    NonMonotone(String),

    #[error("comparison against an irrational constant not decided at {bits} bits")]
    Undecided { bits: u32 },

    #[error("parse error at line {line}, field `{field}`: {message}")]
    Parse { line: usize, field: String, message: String },
}
