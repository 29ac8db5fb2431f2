use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AfbmError {
    #[error("invalid size: {0}")]
    InvalidSize(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("degenerate filter: gram diagonal entry {index} is {value:e}, must be positive")]
    DegenerateFilter { index: usize, value: f64 },

    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("rank-deficient system: {0}")]
    RankDeficient(String),

    #[error("infeasible delays: {paths} distinct delays do not fit in [0, {max_delay}]")]
    InfeasibleDelay { paths: usize, max_delay: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = AfbmError> = std::result::Result<T, E>;
