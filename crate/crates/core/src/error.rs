use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid split shape: {0}")]
    InvalidShape(String),

    #[error("index out of range: {0}")]
    OutOfRange(String),

    #[error("incompatible shapes: {fine} does not refine {coarse}")]
    IncompatibleShapes { fine: String, coarse: String },

    #[error("invalid model parameters: {0}")]
    InvalidModel(String),

    #[error("{path}:{line}: {message}")]
    TableParse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("shape mismatch in block {block}: {message}")]
    ShapeMismatch { block: String, message: String },

    #[error("model has no variables and no constraints")]
    EmptyModel,

    #[error("solver could not be started ({command}): {source}")]
    SolverSpawn {
        command: String,
        #[source]
        source: std::io::Error,
    },

    #[error("solver timed out after {0} s")]
    SolverTimeout(u64),

    #[error("solver reported infeasibility (exit code {code}): {detail}")]
    SolverInfeasible { code: i32, detail: String },

    #[error("solver failed (exit code {code:?}): {detail}")]
    SolverFailed { code: Option<i32>, detail: String },

    #[error("oracle size cap exceeded: {0}")]
    CapExceeded(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("certificate verification failed: {0}")]
    Verification(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
