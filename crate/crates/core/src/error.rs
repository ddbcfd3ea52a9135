use thiserror::Error;

pub type Result<T, E = TapError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum TapError {
    /// A documented precondition was violated by the caller.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("validation failed: {}", .0.join("; "))]
    Validation(Vec<String>),

    /// A box was moved although the precedence graph forbids it.
    #[error("infeasible transport: {0}")]
    Feasibility(String),

    #[error("no feasible placement: {0}")]
    Infeasible(String),

    #[error("footprint out of bounds: {0}")]
    Bounds(String),

    #[error("{boxes} unpacked boxes exceed network capacity {capacity}; use rolling mode")]
    Capacity { boxes: usize, capacity: usize },

    #[error("generation failed: {0}")]
    Generation(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("unsupported format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl TapError {
    /// Process exit code used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            TapError::Validation(_) | TapError::Contract(_) => 3,
            TapError::Capacity { .. } => 4,
            TapError::Io(_) => 5,
            TapError::Json(_) | TapError::Format(_) => 6,
            TapError::Feasibility(_) | TapError::Infeasible(_) | TapError::Bounds(_) => 7,
            TapError::Generation(_) => 8,
            TapError::NonFinite(_) => 9,
        }
    }
}
