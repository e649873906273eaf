use thiserror::Error;

/// Errors produced by the simulation, synthesis and I/O layers.
#[derive(Debug, Error)]
pub enum SmurfError {
    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),

    #[error("bitstream length must be at least 1")]
    EmptyBitstream,

    #[error("bitstream lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("invalid affine map: lo = {lo} must be below hi = {hi}")]
    InvalidMap { lo: f64, hi: f64 },

    #[error("value {x} outside domain [{lo}, {hi}]")]
    OutOfDomain { x: f64, lo: f64, hi: f64 },

    #[error("state count {0} invalid: need N >= 2")]
    InvalidStateCount(usize),

    #[error("tanh output needs an even state count, got {0}")]
    OddStateCount(usize),

    #[error("codeword digit {digit} at position {position} outside [0, {radix})")]
    DigitOutOfRange {
        digit: usize,
        position: usize,
        radix: usize,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("power iteration did not converge within {0} iterations")]
    NoConvergence(usize),

    #[error("matrix is not positive semidefinite (eigenvalue below {0})")]
    NotPositiveSemidefinite(f64),

    #[error("target evaluation failed at {point:?}: {reason}")]
    TargetEvaluation { point: Vec<f64>, reason: String },

    #[error("unknown target function `{0}`")]
    UnknownTarget(String),

    #[error("parse error at byte {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("coefficient file: {0}")]
    CoefficientFile(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, SmurfError>;
