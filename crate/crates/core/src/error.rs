use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("family mismatch: {left} vs {right}")]
    FamilyMismatch { left: String, right: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not an element of {algebra} (defect {defect:.3e})")]
    NotInAlgebra { algebra: String, defect: f64 },

    #[error("matrix is not an element of {group} (defect {defect:.3e})")]
    NotInGroup { group: String, defect: f64 },

    #[error("unsupported combination: {0}")]
    Unsupported(String),

    #[error("span deficiency: rank {rank} < algebra dimension {dim}")]
    SpanDeficient { rank: usize, dim: usize },

    #[error("closure failure at ({i}, {j}): best relative residual {residual:.3e}")]
    ClosureFailure { i: usize, j: usize, residual: f64 },

    #[error("surjectivity failure: element {k} is never a nonzero multiple of a bracket")]
    SurjectivityFailure { k: usize },

    #[error("closure exceeded the cap of {cap} representatives at depth {depth}")]
    ClosureOverflow { cap: usize, depth: usize },

    #[error("closure still growing at depth {depth}; raise the depth horizon")]
    ClosureNotStable { depth: usize },

    #[error("Killing constant mismatch for {algebra}: stored {stored}, ad-trace gives {measured}")]
    KillingMismatch {
        algebra: String,
        stored: f64,
        measured: f64,
    },

    #[error("trace has imaginary part {0:.3e}; bracket or adjoint convention is broken")]
    NonRealTrace(f64),

    #[error("index {index} out of range (length {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("matrix logarithm: {0}")]
    LogBranch(String),

    #[error("frame residual {residual:.3e} exceeds {tol:.1e} at time index {time}, node {node}")]
    FrameResidual {
        residual: f64,
        tol: f64,
        time: usize,
        node: usize,
    },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("profile grids differ")]
    GridMismatch,

    #[error("group invariant violated at node {node}, t = {time}: defect {defect:.3e}")]
    InvariantViolation { node: usize, time: f64, defect: f64 },

    #[error("element is not central (defect {defect:.3e})")]
    NotCentral { defect: f64 },

    #[error("singular matrix in {0}")]
    Singular(&'static str),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("reconstruction failed: best residual {residual:.3e} above threshold {threshold:.1e}")]
    ReconstructionFailed { residual: f64, threshold: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Errors that report a failed mathematical check rather than bad input
    /// or a broken environment.
    pub fn is_verification_failure(&self) -> bool {
        matches!(
            self,
            Error::SpanDeficient { .. }
                | Error::ClosureFailure { .. }
                | Error::SurjectivityFailure { .. }
                | Error::ClosureOverflow { .. }
                | Error::ClosureNotStable { .. }
                | Error::FrameResidual { .. }
                | Error::InvariantViolation { .. }
                | Error::LogBranch(_)
                | Error::ReconstructionFailed { .. }
                | Error::NotCentral { .. }
        )
    }
}
