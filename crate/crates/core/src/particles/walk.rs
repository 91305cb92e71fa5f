//! Rate-one simple symmetric random walk on `Z^d` and its last visit to the
//! origin before a horizon.

use rand::Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{param, Result};
use crate::rng::{self, keys};
use crate::stats::mean_with_se;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkPath {
    /// `L_H = sup { s <= H : Y_s = 0 }`.
    pub last_exit: f64,
    /// Whether the walk is at the origin at some time in `[1, H]`.
    pub visits_after_one: bool,
}

/// One path to horizon `h`.
pub fn last_exit<R: Rng>(dim: usize, h: f64, rng: &mut R) -> WalkPath {
    let mut pos = vec![0i64; dim];
    let mut off_zero = 0usize;
    let mut t = 0.0;
    let mut last = 0.0;
    let mut visits = false;
    loop {
        let tau = t + rng.sample::<f64, _>(Exp1);
        let at_origin = off_zero == 0;
        if tau > h {
            if at_origin {
                last = h;
                visits |= h >= 1.0;
            }
            break;
        }
        if at_origin {
            // at the origin on [t, tau)
            last = tau;
            visits |= tau > 1.0;
        }
        let k: usize = rng.random_range(0..2 * dim);
        let (axis, step) = (k / 2, if k % 2 == 0 { 1 } else { -1 });
        let before = pos[axis];
        pos[axis] += step;
        match (before == 0, pos[axis] == 0) {
            (true, false) => off_zero += 1,
            (false, true) => off_zero -= 1,
            _ => {}
        }
        t = tau;
    }
    WalkPath {
        last_exit: last,
        visits_after_one: visits,
    }
}

fn paths(dim: usize, h: f64, replicates: usize, seed: u64) -> Vec<WalkPath> {
    (0..replicates)
        .into_par_iter()
        .map(|r| last_exit(dim, h, &mut rng::stream(seed, keys::WALK, r as u64)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LastExitStats {
    pub dim: usize,
    pub horizon: f64,
    pub replicates: usize,
    pub mean_l: f64,
    pub se_l: f64,
    pub mean_l2: f64,
    pub se_l2: f64,
    /// Fraction of paths that avoid the origin on `[1, H]`.
    pub gamma: f64,
    pub gamma_se: f64,
    /// `E[L^2]` is finite only for `d >= 7`.
    pub finite_second_moment: bool,
    pub note: String,
}

/// Estimates `E L_H`, `E L_H^2` and the escape probability from
/// `replicates` paths. Since `L_H <= L`, the estimates are biased low as
/// estimates of `E L` and `E L^2`.
pub fn last_exit_stats(dim: usize, horizon: f64, replicates: usize, seed: u64) -> Result<LastExitStats> {
    if dim < 3 {
        return param("dim", "the walk is recurrent for d < 3, so L is infinite");
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return param("horizon", format!("{horizon} is not a positive time"));
    }
    if replicates < 2 {
        return param("replicates", "need at least 2 paths");
    }
    let ps = paths(dim, horizon, replicates, seed);
    let l: Vec<f64> = ps.iter().map(|p| p.last_exit).collect();
    let l2: Vec<f64> = l.iter().map(|x| x * x).collect();
    let esc: Vec<f64> = ps.iter().map(|p| f64::from(u8::from(!p.visits_after_one))).collect();
    let (mean_l, se_l) = mean_with_se(&l);
    let (mean_l2, se_l2) = mean_with_se(&l2);
    let (gamma, gamma_se) = mean_with_se(&esc);
    Ok(LastExitStats {
        dim,
        horizon,
        replicates,
        mean_l,
        se_l,
        mean_l2,
        se_l2,
        gamma,
        gamma_se,
        finite_second_moment: dim >= 7,
        note: format!(
            "moments of L truncated at H = {horizon}; returns after H are missed, so E[L^2] is underestimated"
        ),
    })
}

/// `Cov(eta_u(0), eta_v(0))` for the voter model through the dual identity
/// `theta (1 - theta) P(L_{u+v} > v - u)`, with its standard error.
pub fn dual_covariance(theta: f64, u: f64, v: f64, dim: usize, replicates: usize, seed: u64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&theta) {
        return param("theta", format!("{theta} is not a probability"));
    }
    if !(0.0 <= u && u <= v && v.is_finite()) {
        return param("u", format!("need 0 <= u <= v, got u = {u}, v = {v}"));
    }
    if dim == 0 || replicates < 2 {
        return param("replicates", "need d >= 1 and at least 2 paths");
    }
    let var = theta * (1.0 - theta);
    if u + v == 0.0 {
        return Ok((var, 0.0));
    }
    let hits: Vec<f64> = paths(dim, u + v, replicates, seed)
        .iter()
        .map(|p| f64::from(u8::from(p.last_exit > v - u)))
        .collect();
    let (p, se) = mean_with_se(&hits);
    Ok((var * p, var * se))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn last_exit_bounded_by_horizon_and_monotone() {
        for seed in 0..200u64 {
            let a = last_exit(3, 5.0, &mut rng::stream(seed, keys::WALK, 0));
            let b = last_exit(3, 10.0, &mut rng::stream(seed, keys::WALK, 0));
            assert!(a.last_exit <= 5.0 && a.last_exit > 0.0);
            // same path prefix, longer horizon
            assert!(b.last_exit >= a.last_exit);
        }
    }

    #[test]
    fn dual_identity_edge_cases() {
        let (c, se) = dual_covariance(0.3, 0.0, 0.0, 2, 10, 1).unwrap();
        assert_eq!((c, se), (0.21, 0.0));
        // u = 0: L_v > v is impossible
        assert_eq!(dual_covariance(0.5, 0.0, 2.0, 2, 500, 1).unwrap().0, 0.0);
        // u = v: the walk always leaves the origin strictly after time 0
        assert_eq!(dual_covariance(0.5, 1.5, 1.5, 3, 500, 1).unwrap().0, 0.25);
        assert!(dual_covariance(0.5, 2.0, 1.0, 2, 10, 1).is_err());
    }

    #[test]
    fn seven_dimensional_moments_stabilize() {
        let a = last_exit_stats(7, 50.0, 40_000, 3).unwrap();
        let b = last_exit_stats(7, 100.0, 40_000, 4).unwrap();
        assert!((a.mean_l2 - b.mean_l2).abs() < 4.0 * a.se_l2.hypot(b.se_l2), "{a:?} {b:?}");
        // escaping requires leaving the origin before time 1
        let cap = 1.0 - (-1.0f64).exp();
        assert!(a.gamma > 0.3 && a.gamma < cap + 4.0 * a.gamma_se, "{a:?}");
        assert!(last_exit_stats(2, 10.0, 10, 0).is_err());
    }
}
