use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid position {0:?}")]
    InvalidPosition(String),
    #[error("invalid tree: {0}")]
    InvalidTree(String),
    #[error("{0} variables exceed the supported maximum of 64")]
    TooManyVariables(usize),
    #[error("automata over different alphabets")]
    AlphabetMismatch,
    #[error("operation requires a {0} automaton")]
    Precondition(&'static str),
    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),
    #[error("timeout")]
    Timeout,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
