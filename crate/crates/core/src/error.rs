use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("coefficient floor violated: {0}")]
    CoefficientFloor(String),

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("{method} did not converge after {iterations} iterations")]
    NoConvergence {
        method: &'static str,
        iterations: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate spectral cut at rank {rank}: eigenvalue gap {gap:e}")]
    DegenerateCut { rank: usize, gap: f64 },

    #[error("eigenvalue cluster at index {index}: neighbour gap {gap:e}")]
    EigenCluster { index: usize, gap: f64 },

    #[error("trajectory diverged: {0}")]
    Divergence(String),

    #[error("cardinality mismatch: {left} vs {right}")]
    CardinalityMismatch { left: usize, right: usize },

    #[error("nearest-neighbour matching is not a bijection")]
    AmbiguousMatching,

    #[error("no equilibria found")]
    NoEquilibria,

    #[error("equilibrium is not hyperbolic (closest eigenvalue {0:e})")]
    NonHyperbolic(f64),

    #[error("graph transform does not contract (measured factor {0})")]
    ContractionFailure(f64),

    #[error("no exponential decay towards the manifold: {0}")]
    NonDecay(String),

    #[error("empty point set")]
    EmptySet,

    #[error("slaving iteration diverged (contraction factor {0}); increase the reduction rank")]
    SlavingDivergence(f64),

    #[error("shadowing Newton iteration failed: {0}")]
    ShadowingFailed(String),

    #[error("sample lies outside the neighbourhood: {0}")]
    OutsideNeighborhood(String),

    #[error("minimisation bracket failure: {0}")]
    Bracket(String),

    #[error("insufficient points for a fit: {0} (need at least 4)")]
    InsufficientPoints(usize),

    #[error("structural change: {0}")]
    Structural(String),

    #[error("implicit integrator failed: {0}")]
    Stiffness(String),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("mesh certification failed: {0}")]
    Certification(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, LabError>;

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(LabError::DimensionMismatch { expected, got });
    }
    Ok(())
}
