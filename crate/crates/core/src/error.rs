use thiserror::Error;

/// Errors produced by the solver stack.
#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown function `{name}` at offset {offset}")]
    UnknownFunction { name: String, offset: usize },

    #[error("unbound variable `{0}`")]
    UnboundVariable(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("residual {residual:e} above tolerance {tol:e}")]
    Residual { residual: f64, tol: f64 },

    #[error("operator is not diagonalizable with positive spectrum: {0}")]
    NotDiagonalizable(String),

    #[error("exponent outside coercivity window: {0}")]
    Window(String),

    #[error("fixed-point iteration diverged after {iterations} iterations (last ratios {last_ratios:?})")]
    Divergence {
        iterations: usize,
        last_ratios: Vec<f64>,
        trace: Box<crate::nonlinear::IterationTrace>,
    },

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
