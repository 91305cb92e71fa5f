//! Bounds for the occupation time of the origin in the voter model started
//! from product Bernoulli(theta).

use super::{
    check_alpha, domain, require_nonnegative, require_positive, BoundKind,
    BoundReport, DominanceCheck, Result,
};
use crate::Scalar;

fn check_theta<S: Scalar>(theta: S) -> Result<()> {
    if theta >= S::zero() && theta <= S::one() {
        Ok(())
    } else {
        domain("theta", theta.as_f64(), "must lie in [0, 1]")
    }
}

/// `sqrt(180 sqrt2 theta(1-theta) E L^2 / (sqrt(pi) A^{3/2})) t^{-1/4}`, valid for
/// `t >= (sqrt2 theta(1-theta) E L^2 / (5 sqrt(pi A)))^{2/3}`.
///
/// `el2` is the second moment of the last exit time before `2(s+t)` and
/// `a_st = Var(T_s^t)/t`.
pub fn voter_bound<S: Scalar>(theta: S, a_st: S, el2: S, t: S) -> Result<BoundReport<S>> {
    check_theta(theta)?;
    require_positive("A_st", a_st)?;
    require_nonnegative("EL2", el2)?;
    require_positive("t", t)?;
    let pi = S::pi();
    let sqrt2 = S::lit(2.0).sqrt();
    let v = theta * (S::one() - theta) * el2;
    let value = (S::lit(180.0) * sqrt2 * v / (pi.sqrt() * a_st.powf(S::lit(1.5)))).sqrt()
        * t.powf(S::lit(-0.25));
    let valid_from = (sqrt2 * v / (S::lit(5.0) * (pi * a_st).sqrt())).powf(S::lit(2.0 / 3.0));
    Ok(BoundReport::new(
        BoundKind::Voter,
        value,
        valid_from,
        t,
        true,
        &[("theta", theta), ("A_st", a_st), ("EL2", el2), ("t", t)],
    ))
}

/// Rate-and-shape bound for `p` occupation times over windows of length `t`,
/// with the unknown constant supplied as `c_const` (reported untracked).
#[allow(clippy::too_many_arguments)]
pub fn voter_multivariate_bound<S: Scalar>(
    p: usize,
    theta: S,
    a_list: &[S],
    alpha: S,
    t: S,
    psi_t: S,
    c_const: S,
) -> Result<BoundReport<S>> {
    if theta <= S::zero() || theta >= S::one() {
        return domain("theta", theta.as_f64(), "must lie in (0, 1); the covariance matrix is singular otherwise");
    }
    if a_list.len() != p || p == 0 {
        return domain("p", p as f64, "must equal the number of A values and be positive");
    }
    for &a in a_list {
        require_positive("A_st", a)?;
    }
    check_alpha(alpha)?;
    require_positive("t", t)?;
    require_positive("psi_t", psi_t)?;
    require_positive("C", c_const)?;
    let sum_a = a_list.iter().fold(S::zero(), |acc, &a| acc + a);
    let report = multivariate_time_bound(BoundKind::VoterMultivariate, sum_a, alpha, t, psi_t, c_const, p);
    let mut report = report;
    report.inputs.insert("theta".into(), theta);
    Ok(report)
}

/// Shared shape of the voter and contact multivariate bounds:
/// `C((A + alpha + 1/t)^{1/2} psi^{5/2} t^{-1/4} + psi^2 (alpha + 1/t))`, valid for
/// `t >= (psi (A + alpha + 1/t))^{-2/3}`.
pub(crate) fn multivariate_time_bound<S: Scalar>(
    kind: BoundKind,
    a: S,
    alpha: S,
    t: S,
    psi: S,
    c_const: S,
    p: usize,
) -> BoundReport<S> {
    let inv_t = t.recip();
    let value = c_const
        * ((a + alpha + inv_t).sqrt() * psi.powf(S::lit(2.5)) * t.powf(S::lit(-0.25))
            + psi * psi * (alpha + inv_t));
    let valid_from = (psi * (a + alpha + inv_t)).powf(S::lit(-2.0 / 3.0));
    BoundReport::new(
        kind,
        value,
        valid_from,
        t,
        false,
        &[
            ("p", S::from_usize(p).unwrap()),
            ("A", a),
            ("alpha", alpha),
            ("t", t),
            ("psi_t", psi),
            ("C", c_const),
        ],
    )
}

/// `theta(1-theta)(m-1) E L^2`, bounding the sum of covariances between
/// distinct segments of an occupation time split into `m` pieces.
pub fn voter_cov_sum_bound<S: Scalar>(theta: S, m: u64, el2: S) -> Result<S> {
    check_theta(theta)?;
    require_nonnegative("EL2", el2)?;
    let m1 = S::from_u64(m.saturating_sub(1)).unwrap();
    Ok(theta * (S::one() - theta) * m1 * el2)
}

/// `theta(1-theta)(E L^2 + 2 b E L)`, bounding `Cov(T_s^t, T_r^t)` when
/// `|r - s| >= t - b`.
pub fn voter_cross_cov_bound<S: Scalar>(theta: S, el: S, el2: S, b: S) -> Result<S> {
    check_theta(theta)?;
    require_nonnegative("EL", el)?;
    require_nonnegative("EL2", el2)?;
    require_nonnegative("b", b)?;
    Ok(theta * (S::one() - theta) * (el2 + S::lit(2.0) * b * el))
}

/// Diagonal dominance for `p = a_list.len()` occupation times with windows
/// overlapping by at most `b`.
pub fn voter_gershgorin<S: Scalar>(
    theta: S,
    a_list: &[S],
    el: S,
    el2: S,
    t: S,
    b: S,
) -> Result<DominanceCheck<S>> {
    check_theta(theta)?;
    require_positive("t", t)?;
    require_nonnegative("EL", el)?;
    require_nonnegative("EL2", el2)?;
    require_nonnegative("b", b)?;
    let p = a_list.len();
    if p == 0 {
        return domain("p", 0.0, "need at least one A value");
    }
    let min_a = a_list.iter().fold(S::infinity(), |m, &a| m.min(a));
    require_positive("A_st", min_a)?;
    if p == 1 {
        return Ok(DominanceCheck {
            invertible: true,
            b_max: S::infinity(),
            inv_inf_bound: Some((t * min_a).recip()),
        });
    }
    let pm1 = S::from_usize(p - 1).unwrap();
    let v = theta * (S::one() - theta);
    let b_max = (t * min_a - pm1 * v * el2) / (S::lit(2.0) * pm1 * v * el);
    let invertible = b < b_max;
    let margin = t * min_a - pm1 * v * (el2 + S::lit(2.0) * b * el);
    Ok(DominanceCheck {
        invertible,
        b_max,
        inv_inf_bound: (invertible && margin > S::zero()).then(|| margin.recip()),
    })
}
