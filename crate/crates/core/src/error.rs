use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: String, found: String },

    #[error("unsupported block size {0} (expected 4, 8, 16 or 32)")]
    UnsupportedBlockSize(usize),

    #[error("QP {0} outside 0..=51")]
    QpOutOfRange(i64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("rate estimate requires strictly positive magnitudes, got {0}")]
    NonPositiveMagnitude(i64),

    #[error("design matrix is rank deficient (rank {rank} of {cols})")]
    RankDeficient { rank: usize, cols: usize },

    #[error("nonlinear fit did not converge after {0} iterations")]
    NoConvergence(usize),

    #[error("observed bit count must be positive (sample {0})")]
    ZeroObservedBits(usize),

    #[error("no admissible candidate basis function")]
    NoAdmissibleCandidate,

    #[error("mask must be binary for the compacted path")]
    NonBinaryMask,

    #[error("exhaustive oracle supports 4x4 blocks and at most 3 coefficients: {0}")]
    OracleRange(String),

    #[error("unknown method `{0}`")]
    UnknownMethod(String),

    #[error("rate-distortion curve: {0}")]
    Curve(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn shape_err(expected: impl ToString, found: impl ToString) -> Error {
    Error::ShapeMismatch {
        expected: expected.to_string(),
        found: found.to_string(),
    }
}
