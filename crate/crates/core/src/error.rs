use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("variable index {index} out of range for {g} variables")]
    VariableOutOfRange { index: usize, g: usize },

    #[error("polynomials from different variable contexts cannot be combined")]
    ContextMismatch,

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("input is not symmetric: {0}")]
    NotSymmetric(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("pencil is not monic")]
    NonMonic,

    #[error("the solution set D_L(1) is unbounded")]
    PreconditionUnbounded,

    #[error("SDP dimension {dim} exceeds the configured cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("internal consistency failure: {0}")]
    InternalConsistency(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(pos: usize, msg: impl Into<String>) -> Self {
        Error::Parse { pos, msg: msg.into() }
    }
}
