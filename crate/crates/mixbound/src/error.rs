use thiserror::Error;

/// Errors produced by chain validation, kernel algebra, and the bound machinery.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NonSquare { rows: usize, cols: usize },

    #[error("matrix is empty")]
    Empty,

    #[error("negative entry at ({row}, {col}): {value}")]
    NegativeEntry { row: usize, col: usize, value: f64 },

    #[error("row {row} sums to {sum:.17e}, expected 1")]
    RowSumViolation { row: usize, sum: f64 },

    #[error("negative probability at index {index}: {value}")]
    NegativeProbability { index: usize, value: f64 },

    #[error("probabilities sum to {sum:.17e}, expected 1")]
    NotNormalized { sum: f64 },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("state index {index} out of range for {n} states")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("time {t} exceeds finite horizon {horizon}")]
    HorizonExceeded { t: usize, horizon: usize },

    #[error("matrix is not primitive: no positive power up to the Wielandt exponent {exponent} (entry {from} -> {to} stays zero)")]
    NotPrimitive {
        from: usize,
        to: usize,
        exponent: usize,
    },

    #[error("step count must be >= 1")]
    ZeroSteps,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("residual kernels are undefined on the diagonal pair ({state}, {state})")]
    DiagonalPair { state: usize },

    #[error("residual masses disagree beyond 1e-12: {mass1:.17e} vs {mass2:.17e}")]
    ResidualMassMismatch { mass1: f64, mass2: f64 },

    #[error("non-finite value encountered in {context}")]
    NonFinite { context: &'static str },

    #[error("{context}: residual {residual:.3e} exceeds tolerance {tol:.3e}")]
    ToleranceNotMet {
        context: &'static str,
        residual: f64,
        tol: f64,
    },

    #[error("operation {op} requires a homogeneous chain")]
    NotHomogeneous { op: &'static str },

    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
