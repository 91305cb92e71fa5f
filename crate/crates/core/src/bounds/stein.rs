use super::{domain, inv_sqrt_max_abs, require_nonnegative, BoundsError, CovMatrix, Result};
use crate::Scalar;

/// `5B + sqrt(8/pi) * sum_{i != j} sigma_ij` for a positively associated,
/// mean-zero vector with `|xi_i| <= B` whose sum has unit variance.
pub fn stein_bound_univariate<S: Scalar>(b: S, offdiag_cov_sum: S) -> Result<S> {
    require_nonnegative("B", b)?;
    require_nonnegative("offdiag_cov_sum", offdiag_cov_sum)?;
    let c = (S::lit(8.0) / S::pi()).sqrt();
    Ok(S::lit(5.0) * b + c * offdiag_cov_sum)
}

/// Smooth-function-metric bound for `Sigma^{-1/2} S`, `S_j = sum_i xi_{i,j}`.
///
/// `within_coord_offdiag[j]` is `sum_{i != k} Cov(xi_{i,j}, xi_{k,j})`.
pub fn stein_bound_multivariate<S: Scalar>(
    p: usize,
    b: S,
    sigma: &CovMatrix<S>,
    within_coord_offdiag: &[S],
) -> Result<S> {
    if p == 0 {
        return domain("p", 0.0, "must be at least 1");
    }
    if sigma.dim() != p || within_coord_offdiag.len() != p {
        return Err(BoundsError::Dimension(format!(
            "p = {p}, sigma is {}x{}, {} within-coordinate sums",
            sigma.dim(),
            sigma.dim(),
            within_coord_offdiag.len()
        )));
    }
    require_nonnegative("B", b)?;
    for &w in within_coord_offdiag {
        require_nonnegative("within_coord_offdiag", w)?;
    }
    let norm = inv_sqrt_max_abs(sigma)?;
    let ps = S::from_usize(p).unwrap();
    let sqrt2 = S::lit(2.0).sqrt();
    let c1 = S::lit(1.0 / 6.0) + S::lit(2.0) * sqrt2;
    let c2 = S::lit(3.0) / sqrt2 + S::lit(0.5);
    let cube = ps.powi(3) * b * norm.powi(3);
    let square = ps * ps * norm * norm;
    let within = within_coord_offdiag
        .iter()
        .fold(S::zero(), |acc, &w| acc + w);

    let term1 = c1 * cube * sigma.trace();
    let term2 = c2 * square * within;
    let term3 = (S::lit(2.0) * sqrt2 * cube + c2 * square) * sigma.offdiag_sum();
    Ok(term1 + term2 + term3)
}
