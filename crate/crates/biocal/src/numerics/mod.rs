//! Self-contained numerical kernel: dense matrices, Cholesky decomposition,
//! Householder least squares, counter-based RNG streams, multivariate-normal
//! sampling, and order-statistic quantiles.

mod lstsq;
mod matrix;
mod quantile;
mod rng;

pub use lstsq::{solve_least_squares, Lstsq};
pub use matrix::Matrix;
pub use quantile::empirical_quantile;
pub use rng::{sample_mvn, RngStream};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("matrix is not symmetric within tolerance")]
    NotSymmetric,
    #[error("matrix is not positive definite (pivot {pivot:e} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },
    #[error("design matrix is rank deficient (column {0})")]
    RankDeficient(usize),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("empty input")]
    EmptyInput,
    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),
}
