use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("parameter out of range: {0}")]
    Parameter(String),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("invalid measurement at {path}: {reason}")]
    InvalidMeasurement { path: String, reason: String },

    #[error("scenario mismatch: {0}")]
    ScenarioMismatch(String),

    #[error("outcome count must be 2 for correlators, party {0} has {1}")]
    NonBinary(usize, usize),

    #[error("unknown name `{0}`")]
    UnknownName(String),

    #[error("enumeration budget of {0} exceeded")]
    Budget(usize),

    #[error("polyhedron is unbounded: {0}")]
    Unbounded(String),

    #[error("point is not a vertex of the polytope")]
    NotAVertex,

    #[error("unsupported model: {0}")]
    UnsupportedModel(String),

    #[error("linear program failed: {0}")]
    Lp(String),

    #[error("parse error at line {line}: {msg}")]
    Syntax { line: usize, msg: String },

    #[error("{path}: {msg}")]
    Semantic { path: String, msg: String },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
