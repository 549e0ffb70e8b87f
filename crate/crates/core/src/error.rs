use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    Lattice(String),

    #[error("invalid string: {0}")]
    String(String),

    #[error("unknown loop template `{0}`")]
    UnknownTemplate(String),

    /// The constrained Hilbert space is larger than the configured cap.
    #[error("hilbert space too large: cap is {cap} states, estimated dimension {estimate:.3e}")]
    Capacity { cap: usize, estimate: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("operator is not Hermitian (max |H - H^dag| = {0:.3e})")]
    NotHermitian(f64),

    #[error("{what} did not converge (achieved residual {residual:.3e})")]
    NonConvergence { what: &'static str, residual: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("state violates the blockade constraint of the basis")]
    NotInBasis,

    #[error("index {index} out of range for dimension {dim}")]
    OutOfRange { index: usize, dim: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
