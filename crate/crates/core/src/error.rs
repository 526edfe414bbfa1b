//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CcdError {
    /// A vector or matrix had the wrong length for the requested operation.
    #[error("dimension mismatch in {context}: expected length {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    /// A scalar parameter was outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The normal-equations matrix FᵀF is singular or indefinite, violating
    /// the maximal-rank assumption the direct solvers rely on.
    #[error("FᵀF is singular or indefinite (nonpositive pivot {value:.3e} at row {pivot})")]
    RankDeficient { pivot: usize, value: f64 },
}
