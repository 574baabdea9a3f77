use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("input error: {0}")]
    Input(String),
    #[error("operator is not rotation invariant: {0}")]
    Unsupported(String),
    #[error("coercivity failure: {0}")]
    Coercivity(String),
    #[error("missing parameter: {0}")]
    MissingParameter(&'static str),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("search failure: {0}")]
    Search(String),
    #[error("inconsistent scheme: {0}")]
    InconsistentScheme(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;
