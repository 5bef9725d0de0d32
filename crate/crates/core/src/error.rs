use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported dimension: expected {expected}, got {got}")]
    UnsupportedDimension { expected: usize, got: usize },

    #[error("channel does not provide an input derivative")]
    NeedsDerivative,

    #[error("empty distribution")]
    EmptyDistribution,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("infeasible problem: {0}")]
    Infeasible(String),

    #[error("unsupported: {0}")]
    Unsupported(String),
}
