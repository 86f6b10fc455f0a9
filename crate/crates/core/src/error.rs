use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("matrix is numerically singular (rank {rank} of {size})")]
    Singular { rank: usize, size: usize },

    /// The Gram block `H_n` lost rank: the functional is not quasi-definite
    /// through this degree.
    #[error("functional is not quasi-definite at degree {degree} (singular values {singular_values:?})")]
    QuasiDefiniteFailure {
        degree: usize,
        singular_values: Vec<f64>,
    },

    #[error("Gram block at degree {degree} is not positive definite")]
    NotPositiveDefinite { degree: usize },

    #[error("input system is not orthogonal: residual {residual:e} at degree {degree}")]
    NotOrthogonal { degree: usize, residual: f64 },

    #[error("three-term data is incompatible at degree {degree}: residual {residual:e}")]
    IncompatibleRecurrence { degree: usize, residual: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("inadmissible mapping: {0}")]
    InadmissibleRho(String),

    #[error("unknown family `{0}`")]
    UnknownFamily(String),

    #[error("degenerate linear factor: {0}")]
    DegenerateLambda(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
