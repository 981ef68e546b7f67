use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("sample matrix needs at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("samples {i} and {j} coincide (zero-length difference)")]
    DegeneratePair { i: usize, j: usize },

    #[error("every sample pair is degenerate")]
    AllPairsDegenerate,

    #[error("matrix is not symmetric (relative asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("eigensolver failed to converge")]
    ConvergenceFailure,

    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("z = {z} is not in the upper half-plane")]
    NotUpperHalfPlane { z: Complex64 },

    #[error("evaluation grid is empty")]
    EmptyGrid,

    #[error("density grid [{lo}, {hi}] does not cover support [{a}, {b}]")]
    GridDoesNotCoverSupport { lo: f64, hi: f64, a: f64, b: f64 },

    #[error("fixed-point iteration did not converge at z = {z} after {iterations} iterations (step {step:e})")]
    NoConvergence {
        z: Complex64,
        iterations: usize,
        step: f64,
    },

    #[error("fixed point at z = {z} left the uniqueness set (m = {m})")]
    LeftUniquenessSet { z: Complex64, m: Complex64 },

    #[error("spectrum is identically zero")]
    AllZeroSpectrum,

    #[error("replication {replication}: {source}")]
    Replication {
        replication: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
