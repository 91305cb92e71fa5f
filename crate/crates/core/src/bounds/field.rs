//! Bounds for positively associated stationary fields on `Z^d` whose
//! covariance decays exponentially in the L1 distance.

use serde::{Deserialize, Serialize};

use super::{
    dimension_factor, domain, require_nonnegative, require_positive, BoundKind, BoundReport,
    DominanceCheck, Result,
};
use crate::Scalar;

/// Exponential covariance envelope `R(k) <= kappa0 * exp(-lambda * |k|_1)` on `Z^dim`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar", deny_unknown_fields)]
pub struct CovDecayParams<S: Scalar> {
    pub kappa0: S,
    pub lambda: S,
    pub dim: u32,
}

impl<S: Scalar> CovDecayParams<S> {
    pub fn new(kappa0: S, lambda: S, dim: u32) -> Result<Self> {
        let p = CovDecayParams {
            kappa0,
            lambda,
            dim,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("kappa0", self.kappa0)?;
        require_positive("lambda", self.lambda)?;
        if self.dim == 0 {
            return domain("dim", 0.0, "must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct DecayConstants<S: Scalar> {
    pub mu: S,
    pub upsilon: S,
    pub gamma: S,
}

/// `mu = e^l/(e^l-1)^2`, `upsilon = e^{2l}/(e^l-1)^2` and
/// `gamma = (4 mu + 2 upsilon)^d - (2 upsilon)^d`.
///
/// Evaluated as `e^{-l}/(1-e^{-l})^2` etc. so large `lambda` does not
/// overflow, and `gamma` through its binomial expansion (all terms positive)
/// so it does not cancel when `mu` is tiny.
pub fn decay_constants<S: Scalar>(params: &CovDecayParams<S>) -> Result<DecayConstants<S>> {
    params.validate()?;
    let l = params.lambda;
    let q = -(-l).exp_m1(); // 1 - e^{-l}
    let mu = (-l).exp() / (q * q);
    let upsilon = (q * q).recip();
    let d = params.dim;
    let four_mu = S::lit(4.0) * mu;
    let two_ups = S::lit(2.0) * upsilon;
    let mut gamma = S::zero();
    let mut binom = S::one();
    for s in 1..=d {
        binom = binom * S::from_u32(d - s + 1).unwrap() / S::from_u32(s).unwrap();
        gamma = gamma + binom * four_mu.powi(s as i32) * two_ups.powi((d - s) as i32);
    }
    Ok(DecayConstants { mu, upsilon, gamma })
}

/// A covariance function on `Z^d`, `R(k) = Cov(X_j, X_{j+k})`.
pub trait CovarianceFn<S: Scalar> {
    fn cov(&self, lag: &[i64]) -> S;

    /// `Some(c)` when `R(k) = c * prod_q axis_factor(k_q)`.
    fn separable_scale(&self) -> Option<S> {
        None
    }

    fn axis_factor(&self, _a: i64) -> S {
        S::nan()
    }
}

impl<S: Scalar, F: Fn(&[i64]) -> S> CovarianceFn<S> for F {
    fn cov(&self, lag: &[i64]) -> S {
        self(lag)
    }
}

/// `R(k) = kappa0 * exp(-lambda |k|_1)`, equality in the decay envelope.
#[derive(Debug, Clone, Copy)]
pub struct ExponentialCovariance<S: Scalar>(pub CovDecayParams<S>);

impl<S: Scalar> CovarianceFn<S> for ExponentialCovariance<S> {
    fn cov(&self, lag: &[i64]) -> S {
        let l1: i64 = lag.iter().map(|a| a.abs()).sum();
        self.0.kappa0 * (-self.0.lambda * S::from_i64(l1).unwrap()).exp()
    }

    fn separable_scale(&self) -> Option<S> {
        Some(self.0.kappa0)
    }

    fn axis_factor(&self, a: i64) -> S {
        (-self.0.lambda * S::from_i64(a.abs()).unwrap()).exp()
    }
}

/// Visits every vector in `[-r, r]^d`.
fn for_each_lag(r: i64, d: usize, mut f: impl FnMut(&[i64])) {
    let mut lag = vec![-r; d];
    loop {
        f(&lag);
        let mut q = 0;
        loop {
            if q == d {
                return;
            }
            if lag[q] < r {
                lag[q] += 1;
                break;
            }
            lag[q] = -r;
            q += 1;
        }
    }
}

/// `A_n = n^{-d} sum_{i,j in B^n} R(i - j)`.
///
/// Uses the product form when `R` reports itself separable, otherwise sums
/// over difference vectors `a` with multiplicity `prod_q (n - |a_q|)`.
pub fn a_n_from_covariance<S: Scalar, R: CovarianceFn<S> + ?Sized>(r: &R, n: u64, d: u32) -> S {
    let nn = S::from_u64(n).unwrap();
    let ni = n as i64;
    if let Some(scale) = r.separable_scale() {
        let mut axis = S::zero();
        for a in -(ni - 1)..ni {
            axis = axis + S::from_i64(ni - a.abs()).unwrap() * r.axis_factor(a);
        }
        return scale * (axis / nn).powi(d as i32);
    }
    let mut total = S::zero();
    for_each_lag(ni - 1, d as usize, |lag| {
        let w = lag
            .iter()
            .fold(S::one(), |acc, a| acc * S::from_i64(ni - a.abs()).unwrap());
        total = total + w * r.cov(lag);
    });
    total / nn.powi(d as i32)
}

/// `sum_{|k|_inf <= radius} R(k)`, a truncated estimate of `A = sum_k R(k)`
/// for covariance functions with no closed-form limit.
pub fn truncated_total<S: Scalar, R: CovarianceFn<S> + ?Sized>(r: &R, radius: u64, d: u32) -> S {
    let mut total = S::zero();
    for_each_lag(radius as i64, d as usize, |lag| total = total + r.cov(lag));
    total
}

/// `A_n` under equality in the decay envelope:
/// `kappa0 ((1 - e^{-2l} - 2e^{-l}/n + 2e^{-l(n+1)}/n) / (1-e^{-l})^2)^d`.
pub fn a_n_exponential<S: Scalar>(params: &CovDecayParams<S>, n: u64) -> Result<S> {
    params.validate()?;
    if n == 0 {
        return domain("n", 0.0, "must be at least 1");
    }
    let l = params.lambda;
    let nn = S::from_u64(n).unwrap();
    let two = S::lit(2.0);
    let q = -(-l).exp_m1();
    let num = -(-two * l).exp_m1() - two * (-l).exp() / nn + two * (-l * (nn + S::one())).exp() / nn;
    Ok(params.kappa0 * (num / (q * q)).powi(params.dim as i32))
}

/// `A = kappa0 coth^d(lambda/2)`, the limit of [`a_n_exponential`].
pub fn a_n_limit<S: Scalar>(params: &CovDecayParams<S>) -> Result<S> {
    params.validate()?;
    let half = params.lambda / S::lit(2.0);
    Ok(params.kappa0 * half.tanh().recip().powi(params.dim as i32))
}

/// Univariate bound `kappa1 * n^{-d/(2d+2)}` for a block sum over `B^n`,
/// valid for `n >= max(C^{2/d}, C^{-2/(d+2)})` with
/// `C = 5 K d sqrt(pi A_n) / (sqrt(2) kappa0 gamma)`.
pub fn field_univariate_bound<S: Scalar>(
    params: &CovDecayParams<S>,
    k_bound: S,
    n: u64,
    a_n: S,
) -> Result<BoundReport<S>> {
    require_positive("K", k_bound)?;
    require_positive("A_n", a_n)?;
    if n == 0 {
        return domain("n", 0.0, "must be at least 1");
    }
    let c = decay_constants(params)?;
    let d = params.dim;
    let ds = S::from_u32(d).unwrap();
    let one = S::one();
    let two = S::lit(2.0);
    let pi = S::pi();
    let half = S::lit(0.5);

    let inner = S::lit(10.0) * k_bound * params.kappa0.powi(d as i32) * c.gamma.powi(d as i32)
        * two.powf(S::lit(1.5) * ds)
        / (pi.powf(half * ds) * a_n.powf(ds + half));
    let kappa1 = inner.powf(one / (ds + one)) * dimension_factor::<S>(d);
    let nn = S::from_u64(n).unwrap();
    let value = kappa1 * nn.powf(-ds / (two * ds + two));

    let big_c = S::lit(5.0) * k_bound * ds * (pi * a_n).sqrt()
        / (two.sqrt() * params.kappa0 * c.gamma);
    let valid_from = big_c.powf(two / ds).max(big_c.powf(-two / (ds + two)));

    Ok(BoundReport::new(
        BoundKind::FieldUnivariate,
        value,
        valid_from,
        nn,
        true,
        &[
            ("kappa0", params.kappa0),
            ("lambda", params.lambda),
            ("dim", ds),
            ("K", k_bound),
            ("n", nn),
            ("A_n", a_n),
            ("gamma", c.gamma),
            ("kappa1", kappa1),
            ("C", big_c),
        ],
    ))
}

/// Rounds `alpha * n` to the nearest integer and returns the effective alpha.
pub(crate) fn integral_alpha<S: Scalar>(alpha: S, n: S) -> Result<S> {
    if !(alpha > S::zero() && alpha < S::one()) {
        return domain("alpha", alpha.as_f64(), "must lie in (0, 1)");
    }
    let target = alpha * n;
    let k = target.round();
    if (k - target).abs() > S::lit(1e-9) {
        log::warn!(
            "alpha*n = {} is not an integer; using alpha = {}",
            target,
            k / n
        );
    }
    let eff = k / n;
    if !(eff > S::zero() && eff < S::one()) {
        return domain("alpha", alpha.as_f64(), "alpha*n rounds outside (0, n)");
    }
    Ok(eff)
}

/// Rate-and-shape bound for `p` separated block sums, with the unknown
/// multiplicative constant supplied as `c_const` (reported untracked).
///
/// `psi_n = n^{d/2} |Sigma^{-1/2}|_inf` comes from the caller.
#[allow(clippy::too_many_arguments)]
pub fn field_multivariate_bound<S: Scalar>(
    params: &CovDecayParams<S>,
    k_bound: S,
    n: u64,
    p: usize,
    alpha: S,
    a_n: S,
    psi_n: S,
    c_const: S,
) -> Result<BoundReport<S>> {
    params.validate()?;
    require_positive("K", k_bound)?;
    require_positive("A_n", a_n)?;
    require_positive("psi_n", psi_n)?;
    require_positive("C", c_const)?;
    if p == 0 {
        return domain("p", 0.0, "must be at least 1");
    }
    let nn = S::from_u64(n).unwrap();
    let alpha = integral_alpha(alpha, nn)?;
    let d = params.dim;
    let ds = S::from_u32(d).unwrap();
    let one = S::one();
    let two = S::lit(2.0);

    let first = (a_n + alpha).powf(one / (ds + one))
        * psi_n.powf((two * ds + S::lit(3.0)) / (ds + one))
        * dimension_factor::<S>(d)
        * nn.powf(-ds / (two * (ds + one)));
    let second = alpha * psi_n * psi_n;
    let value = c_const * (first + second);

    let b = ds * psi_n * (a_n + alpha);
    let valid_from = b.powf(two / ds).max(b.powf(-two / (ds + two)));

    Ok(BoundReport::new(
        BoundKind::FieldMultivariate,
        value,
        valid_from,
        nn,
        false,
        &[
            ("kappa0", params.kappa0),
            ("lambda", params.lambda),
            ("dim", ds),
            ("K", k_bound),
            ("n", nn),
            ("p", S::from_usize(p).unwrap()),
            ("alpha", alpha),
            ("A_n", a_n),
            ("psi_n", psi_n),
            ("C", c_const),
        ],
    ))
}

/// Diagonal-dominance check for `p` block sums of side `n` whose anchors
/// are at least `(1 - alpha) n` apart: invertible when
/// `alpha < A_n / ((p-1) kappa0 upsilon^d)`, with
/// `|Sigma^{-1}|_inf <= 1 / (n^d (A_n - (p-1) kappa0 upsilon^d alpha))`.
pub fn field_gershgorin<S: Scalar>(
    params: &CovDecayParams<S>,
    n: u64,
    p: usize,
    a_n: S,
    alpha: S,
) -> Result<DominanceCheck<S>> {
    require_positive("A_n", a_n)?;
    require_nonnegative("alpha", alpha)?;
    let c = decay_constants(params)?;
    let nd = S::from_u64(n).unwrap().powi(params.dim as i32);
    if p <= 1 {
        return Ok(DominanceCheck {
            invertible: true,
            b_max: S::infinity(),
            inv_inf_bound: Some((nd * a_n).recip()),
        });
    }
    let pm1 = S::from_usize(p - 1).unwrap();
    let off = pm1 * params.kappa0 * c.upsilon.powi(params.dim as i32);
    let alpha_max = a_n / off;
    let b_max = S::from_u64(n).unwrap() * alpha_max;
    let invertible = alpha < alpha_max && alpha < S::one();
    let inv_inf_bound = invertible.then(|| (nd * (a_n - off * alpha)).recip());
    Ok(DominanceCheck {
        invertible,
        b_max,
        inv_inf_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::optimize_block_size;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1e-300)
    }

    fn p64(k: f64, l: f64, d: u32) -> CovDecayParams<f64> {
        CovDecayParams::new(k, l, d).unwrap()
    }

    #[test]
    fn decay_constants_reference_values() {
        let c = decay_constants(&p64(1.0, 1.0, 1)).unwrap();
        // e/(e-1)^2 and e^2/(e-1)^2
        let e = std::f64::consts::E;
        assert!(close(c.mu, e / ((e - 1.0) * (e - 1.0)), 1e-14));
        assert!((c.mu - 0.920674).abs() < 1e-6);
        assert!((c.upsilon - 2.502650).abs() < 1e-6);
        assert!(close(c.gamma, 4.0 * c.mu, 1e-14));
        assert!((c.gamma - 3.6826944).abs() < 1e-7);

        let c = decay_constants(&p64(1.0, 20.0, 1)).unwrap();
        assert!(close(c.mu, (-20.0f64).exp(), 1e-8));
        assert!(close(c.upsilon, 1.0, 1e-8));
        assert!(close(c.gamma, 4.0 * (-20.0f64).exp(), 1e-8));
    }

    #[test]
    fn gamma_matches_difference_form_when_well_conditioned() {
        for d in 1..=5 {
            for &l in &[0.1, 0.5, 1.0, 2.0] {
                let c = decay_constants(&p64(1.0, l, d)).unwrap();
                let direct = (4.0 * c.mu + 2.0 * c.upsilon).powi(d as i32)
                    - (2.0 * c.upsilon).powi(d as i32);
                assert!(close(c.gamma, direct, 1e-10), "d={d} l={l}");
            }
        }
    }

    #[test]
    fn a_n_examples() {
        let white = |k: &[i64]| if k.iter().all(|&a| a == 0) { 1.0 } else { 0.0 };
        for d in 1..=3 {
            for n in [1, 2, 5] {
                assert_eq!(a_n_from_covariance(&white, n, d), 1.0);
            }
        }
        let r = |k: &[i64]| (-(k.iter().map(|a| a.abs()).sum::<i64>() as f64)).exp();
        let got = a_n_from_covariance(&r, 2, 1);
        assert!(close(got, 1.0 + (-1.0f64).exp(), 1e-15));

        let lim1 = a_n_limit(&p64(1.0, 1.0, 1)).unwrap();
        assert!((lim1 - 2.163953).abs() < 1e-6);
        let lim2 = a_n_limit(&p64(1.0, 1.0, 2)).unwrap();
        assert!((lim2 - 4.682694).abs() < 1e-6);
        for d in 1..=3 {
            for &l in &[0.3, 1.0, 4.0] {
                let p = p64(1.7, l, d);
                assert!(close(a_n_exponential(&p, 1).unwrap(), 1.7, 1e-12));
            }
        }
    }

    #[test]
    fn a_n_routes_agree() {
        for d in 1..=3 {
            let p = p64(0.8, 0.6, d);
            let sep = ExponentialCovariance(p);
            let direct = |k: &[i64]| sep.cov(k);
            for n in [1, 3, 7, 12] {
                let a = a_n_exponential(&p, n).unwrap();
                assert!(close(a_n_from_covariance(&sep, n, d), a, 1e-12));
                assert!(close(a_n_from_covariance(&direct, n, d), a, 1e-12));
            }
        }
    }

    #[test]
    fn truncated_total_approaches_limit() {
        let p = p64(1.0, 1.0, 2);
        let t = truncated_total(&ExponentialCovariance(p), 40, 2);
        assert!(close(t, a_n_limit(&p).unwrap(), 1e-12));
    }

    #[test]
    fn univariate_bound_matches_block_optimum() {
        for d in 1..=3u32 {
            for &(k0, l, kb) in &[(1.0, 1.0, 1.0), (0.4, 0.3, 2.0), (2.0, 2.5, 0.5)] {
                let p = p64(k0, l, d);
                let a_n = a_n_limit(&p).unwrap();
                let n = 10_000u64;
                let r = field_univariate_bound(&p, kb, n, a_n).unwrap();
                let g = decay_constants(&p).unwrap().gamma;
                let nd = (n as f64).powi(d as i32);
                let a = 10.0 * kb / (nd * a_n).sqrt();
                let b = 2.0 * 2f64.sqrt() * k0 * g / (std::f64::consts::PI.sqrt() * a_n);
                let opt = optimize_block_size(a, b, d, n).unwrap();
                assert!(close(r.value, opt.guarantee, 1e-10), "d={d}: {} vs {}", r.value, opt.guarantee);
            }
        }
    }

    #[test]
    fn univariate_bound_reference_point() {
        let p = p64(1.0, 1.0, 1);
        let a = 1.0 / (0.5f64).tanh();
        let r = field_univariate_bound(&p, 1.0, 10_000, a).unwrap();
        let g = 4.0 * std::f64::consts::E / (std::f64::consts::E - 1.0).powi(2);
        let pi = std::f64::consts::PI;
        let kappa1 = (10.0 * g * 2f64.powf(1.5) / (pi.sqrt() * a.powf(1.5))).sqrt() * 3.0;
        assert!(close(r.value, kappa1 * 0.1, 1e-12));
        assert!(close(r.inputs["kappa1"], kappa1, 1e-12));
        assert!(r.applicable == (10_000.0 >= r.valid_from));
    }

    #[test]
    fn below_threshold_is_not_applicable() {
        let p = p64(1.0, 3.0, 1);
        let r = field_univariate_bound(&p, 5.0, 2, 1.0).unwrap();
        assert!(r.valid_from > 2.0);
        assert!(!r.applicable);
    }

    #[test]
    fn multivariate_shape() {
        let p = p64(1.0, 1.0, 1);
        let n = 64u64;
        let small = field_multivariate_bound(&p, 1.0, n, 2, 1.0 / 64.0, 2.0, 1.3, 1.0).unwrap();
        let first = small.value - small.inputs["alpha"] * 1.3 * 1.3;
        assert!(first > 0.0);
        assert!(!small.constant_tracked);
        assert!(field_multivariate_bound(&p, 1.0, n, 2, 1.5, 2.0, 1.3, 1.0).is_err());
        // alpha*n = 1.0000001: warns and rounds
        let r = field_multivariate_bound(&p, 1.0, n, 2, 1.0000001 / 64.0, 2.0, 1.3, 1.0).unwrap();
        assert_eq!(r.inputs["alpha"], 1.0 / 64.0);
    }

    #[test]
    fn gershgorin_condition() {
        let p = p64(1.0, 1.0, 1);
        let ups = decay_constants(&p).unwrap().upsilon;
        let a_n = 2.0;
        let chk = field_gershgorin(&p, 10, 2, a_n, 0.5).unwrap();
        assert!(chk.invertible);
        assert!(close(chk.inv_inf_bound.unwrap(), 1.0 / (10.0 * (a_n - ups * 0.5)), 1e-14));
        let chk = field_gershgorin(&p, 10, 2, a_n, a_n / ups).unwrap();
        assert!(!chk.invertible);
        assert!(field_gershgorin(&p, 10, 1, a_n, 0.9).unwrap().invertible);
    }
}
