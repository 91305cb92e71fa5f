//! Continuous-time simulation of the voter model and the one-dimensional
//! contact process, and the random-walk quantities entering the voter
//! bounds.

mod contact;
mod trajectory;
mod voter;
mod walk;

pub use contact::{
    contact_decay_fit, contact_decay_from_params, contact_simulate, ContactDecay, ContactOutput,
    ContactParams, CylFunction, HitTerm, LAMBDA_C_1D,
};
pub use trajectory::Trajectory;
pub use voter::{direct_covariance, voter_occupation, VoterMethod, VoterOutput, VoterParams};
pub use walk::{dual_covariance, last_exit, last_exit_stats, LastExitStats, WalkPath};

pub use crate::stats::variance_rate;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ParticleError {
    #[error("invalid parameter {field}: {reason}")]
    Param { field: &'static str, reason: String },
    #[error("trajectory: {0}")]
    Trajectory(String),
    #[error("decay fit: {0}")]
    Fit(String),
    #[error(transparent)]
    Stats(#[from] crate::stats::StatsError),
}

pub type Result<T> = std::result::Result<T, ParticleError>;

pub(crate) fn param<T>(field: &'static str, reason: impl Into<String>) -> Result<T> {
    Err(ParticleError::Param {
        field,
        reason: reason.into(),
    })
}
