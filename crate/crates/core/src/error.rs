use thiserror::Error;

/// Errors produced by the numerical kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid shell spec: {0}")]
    InvalidShell(String),

    #[error("shell d={dim} m={m} has {count} points, over the budget of {budget}")]
    Capacity {
        dim: usize,
        m: u64,
        count: u64,
        budget: u64,
    },

    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid surface: {0}")]
    InvalidSurface(String),

    #[error("unsupported surface kind for {0}")]
    UnsupportedKind(&'static str),

    #[error("quadrature did not reach tol={tol:e} (last difference {achieved:e}, {nodes} nodes)")]
    NonConvergence {
        tol: f64,
        achieved: f64,
        nodes: usize,
    },

    #[error("|xi|={norm} is below the asymptotic threshold {threshold}")]
    BelowThreshold { norm: f64, threshold: f64 },

    #[error("support function is undefined at xi = 0")]
    ZeroFrequency,

    #[error("coefficient support is not contained in the matrix index")]
    IndexMismatch,

    #[error("matrix is not Hermitian (deviation {0:e})")]
    NotHermitian(f64),

    #[error("eigensolver residual {residual:e} exceeds {limit:e}")]
    EigenResidual { residual: f64, limit: f64 },

    #[error("{0}")]
    InvalidArgument(String),

    #[error("degenerate fit input: {0}")]
    DegenerateFit(String),
}

pub type Result<T> = std::result::Result<T, Error>;
