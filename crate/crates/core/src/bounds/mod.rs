//! Closed-form constants, summation identities and normal-approximation
//! bounds.
//!
//! Everything here is a pure function of its arguments. Formulas are
//! evaluated in the caller's scalar type; the only exception is the inverse
//! square root of a covariance matrix, which is computed in `f64` through a
//! symmetric eigendecomposition and converted back.

mod blocks;
mod contact;
mod field;
mod gershgorin;
mod identities;
mod matrix;
pub mod oracle;
mod report;
mod stein;
mod voter;

pub use blocks::{
    block_decompose, lemma_cov_sum_bound, lemma_cross_block_bound, optimize_block_size,
    BlockOptimum, BlockSpec,
};
pub use contact::{
    contact_bound, contact_cov_sum_bound, contact_cross_cov_bound, contact_gershgorin,
    contact_multivariate_bound,
};
pub use field::{
    a_n_exponential, a_n_from_covariance, a_n_limit, decay_constants, field_gershgorin,
    field_multivariate_bound, field_univariate_bound, truncated_total, CovDecayParams,
    CovarianceFn, DecayConstants, ExponentialCovariance,
};
pub use gershgorin::{gershgorin_check, DominanceCheck};
pub use identities::{sum_identity_u, sum_identity_v, sum_identity_w};
pub use matrix::{inv_sqrt_max_abs, CovMatrix, PD_TOLERANCE};
pub use report::{BoundKind, BoundReport};
pub use stein::{stein_bound_multivariate, stein_bound_univariate};
pub use voter::{voter_bound, voter_cov_sum_bound, voter_cross_cov_bound, voter_gershgorin,
    voter_multivariate_bound};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundsError {
    #[error("{name} = {value} is outside its domain: {reason}")]
    Domain {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("matrix is not positive definite: eigenvalue {eigenvalue:e} <= tolerance {tolerance:e}")]
    NotPositiveDefinite { eigenvalue: f64, tolerance: f64 },
    #[error("matrix is not symmetric: entry ({row},{col}) differs from its transpose by {diff:e}")]
    Asymmetric { row: usize, col: usize, diff: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

pub type Result<T> = std::result::Result<T, BoundsError>;

pub(crate) fn domain<T>(name: &'static str, value: f64, reason: &'static str) -> Result<T> {
    Err(BoundsError::Domain {
        name,
        value,
        reason,
    })
}

pub(crate) fn require_positive<S: crate::Scalar>(name: &'static str, x: S) -> Result<()> {
    if x > S::zero() && x.is_finite() {
        Ok(())
    } else {
        domain(name, x.as_f64(), "must be positive and finite")
    }
}

pub(crate) fn require_nonnegative<S: crate::Scalar>(name: &'static str, x: S) -> Result<()> {
    if x >= S::zero() && x.is_finite() {
        Ok(())
    } else {
        domain(name, x.as_f64(), "must be nonnegative and finite")
    }
}

/// `d^{-d/(d+1)} + 2 d^{1/(d+1)}`, the dimension factor of the block-size
/// optimum.
pub(crate) fn dimension_factor<S: crate::Scalar>(d: u32) -> S {
    let d = S::from_u32(d).unwrap();
    let e = S::one() / (d + S::one());
    d.powf(-d * e) + S::lit(2.0) * d.powf(e)
}

pub(crate) fn check_alpha<S: crate::Scalar>(alpha: S) -> Result<()> {
    if alpha > S::zero() && alpha < S::one() {
        Ok(())
    } else {
        domain("alpha", alpha.as_f64(), "must lie in (0, 1)")
    }
}
