use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("point {0:?} is not strictly interior to the polytope")]
    NotInterior(Vec<f64>),

    #[error("smoothing width {0} outside (0, 1)")]
    InvalidSmoothing(f64),

    #[error("unsupported dimension {dim}: {what} needs d <= {max}")]
    UnsupportedDimension { what: &'static str, dim: usize, max: usize },

    #[error("degenerate polytope: {0}")]
    Degenerate(String),

    #[error("vertex {index} ({vertex:?}) lies on {facets} facets; a simple polytope needs exactly {dim}")]
    NonSimpleVertex { index: usize, vertex: Vec<f64>, facets: usize, dim: usize },

    #[error("vectors are linearly dependent")]
    DependentDirections,

    #[error("enumeration budget exceeded: {needed} > {budget} ({what})")]
    BudgetExceeded { what: &'static str, needed: u128, budget: u128 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("factorization does not reconstruct the target: {0}")]
    Reconstruction(String),

    #[error("matrix entries are not integral")]
    NonIntegral,

    #[error("index {index} out of range (len {len})")]
    OutOfRange { index: usize, len: usize },

    #[error("coloring is missing a sign for point {0}")]
    MissingSign(usize),

    #[error("invalid privacy parameters: epsilon = {epsilon}, delta = {delta}")]
    InvalidPrivacy { epsilon: f64, delta: f64 },

    #[error("quadrature tolerance not met: estimated error {estimate:e} > {tolerance:e}")]
    Quadrature { estimate: f64, tolerance: f64 },

    #[error("singular value decomposition did not converge")]
    SvdFailure,

    #[error("degenerate table: {0}")]
    DegenerateTable(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
