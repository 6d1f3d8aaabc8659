use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("steady state is not unique (null space dimension {0})")]
    NonUniqueSteadyState(usize),

    #[error("null vector of the requested block has zero trace")]
    NoPhysicalState,

    #[error("symmetry broken: off-block leakage {leakage:.3e} exceeds {tolerance:.1e}")]
    BrokenSymmetry { leakage: f64, tolerance: f64 },

    #[error("no symmetry sector passes the overlap threshold")]
    EmptyOverlap,

    #[error("finite-difference error estimate {estimate:.3e} exceeds tolerance {tolerance:.1e}")]
    StepTooSmall { estimate: f64, tolerance: f64 },

    #[error("Legendre transform attained at the edge of the dual grid (index {index})")]
    GridTooNarrow { index: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("sector activities coincide (a_S - a_A = {0:.3e})")]
    DegenerateSectors(f64),

    #[error("state has zero norm")]
    ZeroNorm,

    #[error("{} trajectories never settled into a sector: {:?}", .seeds.len(), .seeds)]
    NotFrozen { seeds: Vec<u64> },

    #[error("eigenvalue solver failed to converge on a {0}x{0} matrix")]
    EigenSolve(usize),

    #[error("the requested quantity is not differentiable at the origin (sectors {0} disagree)")]
    NonDifferentiable(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
