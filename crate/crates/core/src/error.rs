use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value in point {0:?}")]
    NonFinitePoint(Vec<f64>),

    #[error("operator returned a non-finite value at {point:?}")]
    NonFiniteOutput { point: Vec<f64> },

    #[error("invalid block split {split} for dimension {dim}")]
    InvalidBlockSplit { split: usize, dim: usize },

    #[error("invalid constraint set: {0}")]
    InvalidConstraint(String),

    #[error("field is deterministic")]
    DeterministicField,

    #[error("sample index {index} out of range for {n_samples} samples")]
    SampleOutOfRange { index: usize, n_samples: usize },

    #[error("all supplied pairs are coincident")]
    CoincidentPairs,

    #[error("no point pairs supplied")]
    NoPairs,

    #[error("field has no block split between players")]
    MissingBlockSplit,

    #[error("implicit step requires affine operator")]
    NonAffine,

    #[error("singular linear system")]
    Singular,

    #[error("ill-posed instance: condition number {condition:e}")]
    IllPosed { condition: f64 },

    #[error("{rule} steps are only defined without constraints")]
    RequiresUnconstrained { rule: &'static str },

    #[error("iteration count must be at least 1")]
    ZeroIterations,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("problem has no known equilibrium")]
    MissingEquilibrium,

    #[error("problem has no payoff functions")]
    MissingPayoffs,

    #[error("problem is not a bilinear game")]
    NotBilinear,
}
