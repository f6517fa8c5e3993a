use thiserror::Error;

pub type Result<T> = std::result::Result<T, GeometryError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is numerically singular")]
    Singular,

    #[error("invalid index set: {0}")]
    InvalidIndexSet(String),

    #[error("point is not in chart {chart}: minor ratio {ratio:e} below cutoff")]
    NotInChart { chart: String, ratio: f64 },

    #[error("representative does not have full column rank")]
    RankDeficient,

    #[error("matrix is not unitary (deviation {0:e})")]
    NotUnitary(f64),

    #[error("finite-difference step {0:e} is too small for the evaluation point")]
    StepUnderflow(f64),

    #[error("finite-difference Hessian unstable: h and h/2 disagree by {0:e} (relative)")]
    Cancellation(f64),

    #[error("degenerate homogeneous pair (0, 0) at factor {0}")]
    DegeneratePair(usize),

    #[error("embedding requires p <= q (got p={p}, q={q}); pass through the dual first")]
    RequiresPNotAboveQ { p: usize, q: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
