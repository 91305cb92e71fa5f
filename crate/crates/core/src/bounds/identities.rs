//! Closed forms for the three finite geometric-type sums used throughout the
//! block covariance estimates.

use super::{domain, Result};
use crate::Scalar;

fn check(n: u64, x: f64, name: &'static str) -> Result<()> {
    if n < 2 {
        return domain("n", n as f64, "must be at least 2");
    }
    if x == 1.0 {
        return domain(name, x, "the identity is undefined at 1");
    }
    if !x.is_finite() {
        return domain(name, x, "must be finite");
    }
    Ok(())
}

fn powi<S: Scalar>(x: S, n: u64) -> S {
    match i32::try_from(n) {
        Ok(k) => x.powi(k),
        Err(_) => x.powf(S::from_u64(n).unwrap()),
    }
}

/// `sum_{k=1}^{n-1} (n-k) w^k = w((n-1) - n w + w^n) / (w-1)^2`.
pub fn sum_identity_w<S: Scalar>(n: u64, w: S) -> Result<S> {
    check(n, w.as_f64(), "w")?;
    let nn = S::from_u64(n).unwrap();
    let one = S::one();
    let num = w * ((nn - one) - nn * w + powi(w, n));
    Ok(num / ((w - one) * (w - one)))
}

/// `n + sum_{a=1}^{n-1} (n-a)(v^a + v^{-a}) = v^{1-n} (v^n - 1)^2 / (v-1)^2`.
pub fn sum_identity_v<S: Scalar>(n: u64, v: S) -> Result<S> {
    check(n, v.as_f64(), "v")?;
    if v <= S::zero() {
        return domain("v", v.as_f64(), "must be positive");
    }
    let one = S::one();
    let vn1 = powi(v, n) - one;
    // v^{1-n} (v^n-1)^2 written as (v^n-1)(1-v^{-n}) v to keep both factors O(v^n)
    let inv = powi(v.recip(), n);
    Ok(vn1 * (one - inv) * v / ((v - one) * (v - one)))
}

/// `n + 2 sum_{b=1}^{n-1} (n-b) u^b = ((1-u^2) n - 2u + 2u^{n+1}) / (u-1)^2`.
pub fn sum_identity_u<S: Scalar>(n: u64, u: S) -> Result<S> {
    check(n, u.as_f64(), "u")?;
    let nn = S::from_u64(n).unwrap();
    let one = S::one();
    let two = S::lit(2.0);
    let num = (one - u * u) * nn - two * u + two * powi(u, n + 1);
    Ok(num / ((u - one) * (u - one)))
}
