use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("null fiber vector: |g(y,y)| = {quadratic:e} below tolerance {tolerance:e}")]
    NullFiber { quadratic: f64, tolerance: f64 },

    #[error("{field}: point {point:?} outside chart ({reason})")]
    ChartViolation {
        field: String,
        point: [f64; 4],
        reason: String,
    },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("unknown {kind} '{name}'")]
    UnknownField { kind: &'static str, name: String },

    #[error("invalid parameter '{name}': {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("tensor slot {slot} out of range for rank {rank}")]
    SlotOutOfRange { slot: usize, rank: usize },

    #[error("tensor slot {slot} has the wrong variance for this operation")]
    VarianceMismatch { slot: usize },

    #[error("frame mismatch: {left:?} vs {right:?}")]
    FrameMismatch {
        left: crate::tensor::Frame,
        right: crate::tensor::Frame,
    },

    #[error("cannot normalize a vector with causal sign {actual} to sign {target}")]
    SignMismatch { actual: f64, target: f64 },

    #[error("degenerate metric: |det g| = {0:e}")]
    DegenerateMetric(f64),

    #[error("integration exhausted {0} steps")]
    StepLimit(usize),

    #[error("{0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, GeometryError>;
