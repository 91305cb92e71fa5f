//! Wasserstein-1 distance between an empirical distribution and `N(0,1)`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::normal::{cdf, cdf_antiderivative as g, quantile};
use super::{Result, StatsError};
use crate::rng;

pub const BOOTSTRAP_RESAMPLES: usize = 200;
/// Bootstrap resamples draw from this seed so SEs are reproducible.
const BOOTSTRAP_SEED: u64 = 0x5eed_d1d1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct D1Estimate {
    pub value: f64,
    pub se: f64,
    pub n: usize,
}

fn check(samples: &[f64]) -> Result<()> {
    if samples.is_empty() {
        return Err(StatsError::TooFew {
            need: 1,
            got: samples.len(),
        });
    }
    if let Some((i, &v)) = samples.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(StatsError::NonFinite {
            row: i,
            col: 0,
            value: v,
        });
    }
    Ok(())
}

/// `int |c - Phi(t)| dt` over `[a, b]`.
fn level_gap(a: f64, b: f64, c: f64) -> f64 {
    let above = |lo: f64, hi: f64| g(hi) - g(lo) - c * (hi - lo);
    let z = quantile(c);
    if z <= a {
        above(a, b)
    } else if z >= b {
        -above(a, b)
    } else {
        above(z, b) - above(a, z)
    }
}

/// `int |F_N(t) - Phi(t)| dt` for already sorted samples, evaluated
/// piecewise in closed form.
pub fn d1_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    let nf = n as f64;
    let mut total = g(sorted[0]) + g(-sorted[n - 1]);
    for i in 1..n {
        let (a, b) = (sorted[i - 1], sorted[i]);
        if b > a {
            total += level_gap(a, b, i as f64 / nf);
        }
    }
    total.max(0.0)
}

/// Exact distance without a standard error.
pub fn d1_exact(samples: &[f64]) -> Result<f64> {
    check(samples)?;
    let mut v = samples.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    Ok(d1_sorted(&v))
}

/// Exact distance with a bootstrap SE from [`BOOTSTRAP_RESAMPLES`] resamples.
pub fn d1_to_standard_normal(samples: &[f64]) -> Result<D1Estimate> {
    d1_with_bootstrap(samples, BOOTSTRAP_RESAMPLES, BOOTSTRAP_SEED)
}

pub fn d1_with_bootstrap(samples: &[f64], resamples: usize, seed: u64) -> Result<D1Estimate> {
    let value = d1_exact(samples)?;
    let n = samples.len();
    let reps: Vec<f64> = (0..resamples)
        .into_par_iter()
        .map(|b| {
            let mut r = rng::stream(seed, rng::keys::BOOTSTRAP, b as u64);
            let mut v: Vec<f64> = (0..n).map(|_| samples[r.random_range(0..n)]).collect();
            v.sort_by(|a, b| a.total_cmp(b));
            d1_sorted(&v)
        })
        .collect();
    let se = if resamples > 1 {
        let m = reps.iter().sum::<f64>() / resamples as f64;
        (reps.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (resamples - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(D1Estimate { value, se, n })
}

/// Midpoint-rule evaluation of the same integral on a uniform grid of
/// spacing `step`, used as an independent cross-check.
pub fn d1_riemann(samples: &[f64], step: f64) -> Result<f64> {
    check(samples)?;
    let mut v = samples.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let lo = v[0].min(0.0) - 12.0;
    let hi = v[v.len() - 1].max(0.0) + 12.0;
    let cells = ((hi - lo) / step).ceil() as usize;
    let nf = v.len() as f64;
    let mut idx = 0usize;
    let mut total = 0.0;
    for k in 0..cells {
        let t = lo + (k as f64 + 0.5) * step;
        while idx < v.len() && v[idx] <= t {
            idx += 1;
        }
        total += (idx as f64 / nf - cdf(t)).abs();
    }
    Ok(total * step)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn point_masses() {
        let v = d1_exact(&[0.0; 5]).unwrap();
        assert!((v - (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-12);
        let v = d1_exact(&[1.0; 3]).unwrap();
        let expect = 2.0 * super::super::normal::pdf(1.0) + (2.0 * cdf(1.0) - 1.0);
        assert!((v - expect).abs() < 1e-12);
        assert!((v - 1.16663).abs() < 1e-5);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(d1_exact(&[]).is_err());
        assert!(d1_exact(&[1.0, f64::NAN]).is_err());
    }

    #[test]
    fn agrees_with_riemann() {
        let mut r = rng::stream(3, 0, 0);
        let x: Vec<f64> = (0..500).map(|_| StandardNormal.sample(&mut r)).collect();
        let a = d1_exact(&x).unwrap();
        let b = d1_riemann(&x, 1e-4).unwrap();
        assert!((a - b).abs() < 1e-4, "{a} vs {b}");
    }

    #[test]
    fn bootstrap_is_reproducible() {
        let mut r = rng::stream(4, 0, 0);
        let x: Vec<f64> = (0..300).map(|_| StandardNormal.sample(&mut r)).collect();
        let a = d1_to_standard_normal(&x).unwrap();
        let b = d1_to_standard_normal(&x).unwrap();
        assert_eq!(a, b);
        assert!(a.se > 0.0 && a.se < 0.1);
    }
}
