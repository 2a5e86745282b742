use thiserror::Error;

/// Errors produced by the estimation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid point set: {0}")]
    InvalidPointSet(String),

    #[error("invalid neighbor set: {0}")]
    InvalidNeighborSpec(String),

    #[error("insufficient points: k = {k} requires at least {} points, got {n}", k + 1)]
    InsufficientPoints { n: usize, k: usize },

    #[error("sample smaller than neighbor order: n = {n}, max(S) = {k}")]
    SampleTooSmall { n: usize, k: usize },

    #[error("query index {index} out of range for {n} points")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("point {index} lies outside the cube")]
    PointOutsideCube { index: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("analytic form unavailable: {0}")]
    AnalyticUnavailable(String),

    #[error("histogram infeasible in this dimension: {0}")]
    HistogramInfeasible(String),

    #[error("invalid gamma record at line {line}: {reason}")]
    InvalidGammaRecord { line: usize, reason: String },

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("matrix is rank deficient")]
    RankDeficient,

    #[error("singular covariance")]
    SingularCovariance,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
