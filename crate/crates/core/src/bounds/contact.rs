//! Bounds for time integrals of an increasing cylinder function of the
//! stationary supercritical contact process, given the covariance envelope
//! `|Cov(f(r), f(s))| <= kappa exp(-gamma |s - r|)`.

use super::{
    check_alpha, domain, require_nonnegative, require_positive, voter::multivariate_time_bound,
    BoundKind, BoundReport, DominanceCheck, Result,
};
use crate::Scalar;

/// `sqrt(360 sqrt2 kappa M_f / (sqrt(pi) A^{3/2} gamma^2)) t^{-1/4}`, valid for
/// `t >= (2 sqrt2 kappa / (5 gamma^2 M_f sqrt(pi A)))^{2/3}`.
pub fn contact_bound<S: Scalar>(kappa: S, gamma: S, m_f: S, a_ft: S, t: S) -> Result<BoundReport<S>> {
    require_nonnegative("kappa", kappa)?;
    require_positive("gamma", gamma)?;
    require_positive("M_f", m_f)?;
    require_positive("A_ft", a_ft)?;
    require_positive("t", t)?;
    let pi = S::pi();
    let sqrt2 = S::lit(2.0).sqrt();
    let g2 = gamma * gamma;
    let value = (S::lit(360.0) * sqrt2 * kappa * m_f / (pi.sqrt() * a_ft.powf(S::lit(1.5)) * g2))
        .sqrt()
        * t.powf(S::lit(-0.25));
    let valid_from = (S::lit(2.0) * sqrt2 * kappa / (S::lit(5.0) * g2 * m_f * (pi * a_ft).sqrt()))
        .powf(S::lit(2.0 / 3.0));
    Ok(BoundReport::new(
        BoundKind::Contact,
        value,
        valid_from,
        t,
        true,
        &[
            ("kappa", kappa),
            ("gamma", gamma),
            ("M_f", m_f),
            ("A_ft", a_ft),
            ("t", t),
        ],
    ))
}

/// Multivariate counterpart of [`contact_bound`]; same shape as the voter
/// version with `A_f^t` in place of the summed variance rates.
#[allow(clippy::too_many_arguments)]
pub fn contact_multivariate_bound<S: Scalar>(
    p: usize,
    kappa: S,
    gamma: S,
    a_ft: S,
    alpha: S,
    t: S,
    psi_t: S,
    c_const: S,
) -> Result<BoundReport<S>> {
    if p == 0 {
        return domain("p", 0.0, "must be at least 1");
    }
    require_nonnegative("kappa", kappa)?;
    require_positive("gamma", gamma)?;
    require_positive("A_ft", a_ft)?;
    check_alpha(alpha)?;
    require_positive("t", t)?;
    require_positive("psi_t", psi_t)?;
    require_positive("C", c_const)?;
    let mut r = multivariate_time_bound(
        BoundKind::ContactMultivariate,
        a_ft,
        alpha,
        t,
        psi_t,
        c_const,
        p,
    );
    r.inputs.insert("kappa".into(), kappa);
    r.inputs.insert("gamma".into(), gamma);
    Ok(r)
}

/// `2 kappa m / gamma^2`, bounding the sum of covariances between distinct
/// segments of `D` split into `m` pieces.
pub fn contact_cov_sum_bound<S: Scalar>(kappa: S, gamma: S, m: u64) -> Result<S> {
    require_nonnegative("kappa", kappa)?;
    require_positive("gamma", gamma)?;
    Ok(S::lit(2.0) * kappa * S::from_u64(m).unwrap() / (gamma * gamma))
}

/// `2 kappa (b/gamma + 1/gamma^2)`, bounding `Cov(D_r, D_s)` when
/// `|s - r| >= t - b`.
pub fn contact_cross_cov_bound<S: Scalar>(kappa: S, gamma: S, b: S) -> Result<S> {
    require_nonnegative("kappa", kappa)?;
    require_positive("gamma", gamma)?;
    require_nonnegative("b", b)?;
    Ok(S::lit(2.0) * kappa * (b / gamma + (gamma * gamma).recip()))
}

/// Diagonal dominance for `p` windows of length `t` overlapping by at most
/// `b`: invertible when `b < t A gamma / (2 (p-1) kappa) - 1/gamma`.
pub fn contact_gershgorin<S: Scalar>(
    kappa: S,
    gamma: S,
    a_ft: S,
    t: S,
    b: S,
    p: usize,
) -> Result<DominanceCheck<S>> {
    require_nonnegative("kappa", kappa)?;
    require_positive("gamma", gamma)?;
    require_positive("A_ft", a_ft)?;
    require_positive("t", t)?;
    require_nonnegative("b", b)?;
    if p == 0 {
        return domain("p", 0.0, "must be at least 1");
    }
    if p == 1 {
        return Ok(DominanceCheck {
            invertible: true,
            b_max: S::infinity(),
            inv_inf_bound: Some((t * a_ft).recip()),
        });
    }
    let pm1 = S::from_usize(p - 1).unwrap();
    let two = S::lit(2.0);
    let b_max = t * a_ft * gamma / (two * pm1 * kappa) - gamma.recip();
    let invertible = b < b_max;
    let margin = t * a_ft - two * kappa * pm1 * (b / gamma + (gamma * gamma).recip());
    Ok(DominanceCheck {
        invertible,
        b_max,
        inv_inf_bound: (invertible && margin > S::zero()).then(|| margin.recip()),
    })
}
