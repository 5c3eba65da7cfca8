use thiserror::Error;

/// Errors surfaced by the library. Each variant maps onto one CLI exit code.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Bad arguments: indices out of range, malformed tables, bad norms.
    #[error("input error: {0}")]
    Input(String),

    /// The game violates the linear-model assumptions beyond tolerance.
    #[error("model validity error: {0}")]
    ModelValidity(String),

    /// An experiment configuration could not be parsed or is inconsistent.
    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),

    /// The LP solver could not certify its answer.
    #[error("solver error: {message} (max residual {residual:e})")]
    Solver { message: String, residual: f64 },

    /// Numeric degeneracy, e.g. a significantly negative quadratic form.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Learner bookkeeping went out of sync.
    #[error("internal state error: {0}")]
    InternalState(String),
}

impl Error {
    /// Process exit code used by the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Input(_) | Error::Config(_) => 2,
            Error::ModelValidity(_) => 3,
            Error::Io(_) => 4,
            Error::Solver { .. } | Error::Numeric(_) | Error::InternalState(_) => 5,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
