//! Monte Carlo samplers for block sums of the Ising magnetization and of the
//! infinite-cluster indicator in supercritical bond percolation.

mod decay;
mod geometry;
mod ising;
mod percolation;
mod trend;

pub use decay::{
    ar_field, empirical_decay_fit, fit_envelope, DecayFit, EnvelopeFit, LagAccumulator, LagPoint,
    NOISE_FLOOR_SE,
};
pub use geometry::{check_separation, BlockObservable, SimBox};
pub use ising::{ising_sample, Boundary, IsingOutput, IsingParams, BETA_C_2D};
pub use percolation::{percolation_sample, PercolationOutput, PercolationParams, THETA_C_2D};
pub use trend::{mann_kendall, TrendTest};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LatticeError {
    #[error("invalid parameter {field}: {reason}")]
    Param { field: &'static str, reason: String },
    #[error("geometry: {0}")]
    Geometry(String),
    #[error("decay fit: {0}")]
    Fit(String),
    #[error(transparent)]
    Stats(#[from] crate::stats::StatsError),
    #[error(transparent)]
    Bounds(#[from] crate::bounds::BoundsError),
}

pub type Result<T> = std::result::Result<T, LatticeError>;

pub(crate) fn param<T>(field: &'static str, reason: impl Into<String>) -> Result<T> {
    Err(LatticeError::Param {
        field,
        reason: reason.into(),
    })
}
