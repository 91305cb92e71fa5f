//! Empirical distances, covariance estimation and the sample container that
//! connects the simulators to the bound formulas.

mod cov;
mod d1;
pub mod normal;
mod sample;
mod smooth;

pub use cov::{
    cov_with_se, empirical_cov_matrix, mean_with_se, offdiag_cov_sum, standardize, variance_rate, Standardized,
    StandardizeMode, VarianceRate,
};
pub use d1::{d1_exact, d1_riemann, d1_to_standard_normal, d1_with_bootstrap, D1Estimate, BOOTSTRAP_RESAMPLES};
pub use sample::{SampleMatrix, BINARY_MAGIC};
pub use smooth::{
    multivariate_smooth_check, normal_expectation, standard_suite, SmoothEntry, SmoothFn,
    SmoothReport,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("need at least {need} samples, got {got}")]
    TooFew { need: usize, got: usize },
    #[error("non-finite value {value} at row {row}, column {col}")]
    NonFinite { row: usize, col: usize, value: f64 },
    #[error("zero variance")]
    ZeroVariance,
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("smooth test function {name} fails the derivative check: |D^{order}| = {value}")]
    NotSmooth {
        name: String,
        order: String,
        value: f64,
    },
    #[error("sample file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Bounds(#[from] crate::bounds::BoundsError),
}

pub type Result<T> = std::result::Result<T, StatsError>;
