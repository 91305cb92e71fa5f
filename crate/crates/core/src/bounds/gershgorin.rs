use serde::{Deserialize, Serialize};

use super::{CovMatrix, Result};
use crate::Scalar;

/// Outcome of a strict diagonal-dominance test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct DominanceCheck<S: Scalar> {
    pub invertible: bool,
    /// Largest admissible overlap `b` for the model-level checks; infinite
    /// when unconstrained, unused by [`gershgorin_check`].
    pub b_max: S,
    /// Upper bound on `|Sigma^{-1}|_inf` when `invertible`.
    pub inv_inf_bound: Option<S>,
}

/// Strict diagonal dominance of `sigma`. When every row satisfies
/// `Sigma_jj - sum_{l != j} |Sigma_jl| > 0` the matrix is invertible and the
/// inverse of the smallest such margin bounds `|Sigma^{-1}|_inf`. A `false`
/// result is inconclusive.
pub fn gershgorin_check<S: Scalar>(sigma: &CovMatrix<S>) -> Result<DominanceCheck<S>> {
    let p = sigma.dim();
    let mut min_margin = S::infinity();
    for j in 0..p {
        let mut margin = sigma.get(j, j);
        for l in 0..p {
            if l != j {
                margin = margin - sigma.get(j, l).abs();
            }
        }
        min_margin = min_margin.min(margin);
    }
    let invertible = p > 0 && min_margin > S::zero();
    Ok(DominanceCheck {
        invertible,
        b_max: S::infinity(),
        inv_inf_bound: invertible.then(|| min_margin.recip()),
    })
}
