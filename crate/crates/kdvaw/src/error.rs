//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by the numerical core, the forecasters, and the harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix not positive definite: pivot {pivot:.3e} at column {index}")]
    NotPositiveDefinite { pivot: f64, index: usize },

    #[error("degenerate rank-one update: denominator {denom:.3e}")]
    DegenerateUpdate { denom: f64 },

    #[error("eigensolver did not converge within {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unsupported Matern smoothness nu={0}: only 1/2, 3/2, 5/2, 7/2 have closed forms here")]
    UnsupportedNu(f64),

    #[error("negative discriminant {0:.3e} in kernel distance: kernel is not positive semidefinite")]
    NegativeDiscriminant(f64),

    #[error("integer overflow while computing {0}")]
    Overflow(String),

    #[error("dimension {m} is not a full layer (nearest full layer has {layer}); tail bound needs full layers")]
    PartialLayer { m: usize, layer: usize },

    #[error("point norm {norm:.6} exceeds domain radius {radius}")]
    DomainViolation { norm: f64, radius: f64 },

    #[error("all Gram eigenvalues fall below the rank tolerance; basis is empty")]
    EmptyBasis,

    #[error("config error: {0}")]
    ConfigError(String),

    #[error("comparator not representable in forecaster coordinates: {0}")]
    RepresentationError(String),

    #[error("gamma = 1 with positive path length: the simplified bound holds only in the extended sense with zero path")]
    ExtendedSenseViolation,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
