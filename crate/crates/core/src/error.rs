use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("interaction matrix is not symmetric: A[{row}][{col}] - A[{col}][{row}] = {difference:e}")]
    NonSymmetricA { row: usize, col: usize, difference: f64 },
    #[error("interaction matrix entry A[{row}][{col}] = {value} is not strictly positive")]
    NonPositiveEntry { row: usize, col: usize, value: f64 },
    #[error("matrix is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },
    #[error("block sizes {block_sizes:?} do not match: {reason}")]
    BlockSizeMismatch { block_sizes: Vec<usize>, reason: String },
    #[error("number of colors q = {0} must be at least 2")]
    InvalidQ(usize),
    #[error("structured interaction needs 0 < alpha < beta, got alpha = {alpha}, beta = {beta}")]
    InvalidInteraction { alpha: f64, beta: f64 },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("color counts inconsistent with the model: {0}")]
    CountMismatch(String),
    #[error("spin value {value} at site {site} is outside 1..={q}")]
    InvalidSpin { site: usize, value: usize, q: usize },
    #[error("enumeration too large: {size:e} states exceeds the limit {limit:e}")]
    TooLarge { size: f64, limit: f64 },
    #[error("chain state is inconsistent: {0}")]
    InconsistentState(String),
    #[error("too few samples: {0}")]
    TooFewSamples(String),
    #[error("fixed-point iteration did not converge after {iterations} iterations (residual {residual:e}, certified = {certified})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        certified: bool,
    },
    #[error("dimension {dimension} too large for a full grid (limit {limit})")]
    DimensionTooLarge { dimension: usize, limit: usize },
    #[error("point is not critical: gradient residual {residual:e} exceeds {tolerance:e}")]
    NotCritical { residual: f64, tolerance: f64 },
    #[error("dual grid point lies outside C: {0}")]
    GridPointOutsideC(String),
    #[error("inner matrix is singular or ill-conditioned (condition number {condition:e})")]
    SingularInnerMatrix { condition: f64 },
    #[error("theta = {0} outside the admissible range")]
    InvalidTheta(f64),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("cross-check failed: {what} differs by {discrepancy:e} (tolerance {tolerance:e})")]
    CrossCheckFailed {
        what: String,
        discrepancy: f64,
        tolerance: f64,
    },
}

impl Error {
    /// True for errors that reject malformed input rather than a failed computation.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::NonSymmetricA { .. }
                | Error::NonPositiveEntry { .. }
                | Error::NotPositiveDefinite { .. }
                | Error::BlockSizeMismatch { .. }
                | Error::InvalidQ(_)
                | Error::InvalidInteraction { .. }
                | Error::DimensionMismatch { .. }
                | Error::CountMismatch(_)
                | Error::InvalidSpin { .. }
                | Error::InvalidTheta(_)
                | Error::InvalidConfig(_)
        )
    }
}
