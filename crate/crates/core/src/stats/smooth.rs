//! A finite family of test functions whose partial derivatives up to third
//! order are bounded by one, used as a lower proxy for the smooth-function
//! distance between a standardized sample and the standard normal.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{cov::mean_with_se, normal, Result, SampleMatrix, StatsError};
use crate::rng::{self, keys};

/// A test function of the leading `arity` coordinates.
#[derive(Clone)]
pub struct SmoothFn {
    pub name: &'static str,
    pub arity: usize,
    pub f: fn(&[f64]) -> f64,
    /// `E h(Z)` in closed form when known.
    pub exact: Option<f64>,
}

impl std::fmt::Debug for SmoothFn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SmoothFn")
            .field("name", &self.name)
            .field("arity", &self.arity)
            .field("exact", &self.exact)
            .finish()
    }
}

fn half_sin(x: &[f64]) -> f64 {
    x[0].sin() / 2.0
}
fn half_cos_x1(x: &[f64]) -> f64 {
    x[0].cos() / 2.0
}
fn half_cos_x2(x: &[f64]) -> f64 {
    x[1].cos() / 2.0
}
fn third_tanh(x: &[f64]) -> f64 {
    (x[0] - 0.3).tanh() / 3.0
}
fn bump1(x: &[f64]) -> f64 {
    (-x[0] * x[0] / 2.0).exp() / 2.0
}
fn bump2(x: &[f64]) -> f64 {
    (-(x[0] * x[0] + x[1] * x[1]) / 2.0).exp() / 2.0
}
fn half_sin_sum(x: &[f64]) -> f64 {
    (x[0] + x[1]).sin() / 2.0
}
fn soft_corner(x: &[f64]) -> f64 {
    (1.0 + x[0].tanh()) * (1.0 + x[1].tanh()) / 8.0
}
fn soft_step(x: &[f64]) -> f64 {
    (1.0 + (x[0] + 0.5).tanh()) / 4.0
}
fn saddle_bump(x: &[f64]) -> f64 {
    x[0] * x[1] * (-(x[0] * x[0] + x[1] * x[1]) / 2.0).exp() / 4.0
}
fn odd_bump(x: &[f64]) -> f64 {
    x[0] * (-x[0] * x[0] / 2.0).exp() / 4.0
}

/// The standard suite for dimension `p`. Functions of two coordinates are
/// only included when `p >= 2`.
pub fn standard_suite(p: usize) -> Vec<SmoothFn> {
    let e_half = (-0.5f64).exp();
    let mut s = vec![
        SmoothFn { name: "sin_x1", arity: 1, f: half_sin, exact: Some(0.0) },
        SmoothFn { name: "tanh_x1", arity: 1, f: third_tanh, exact: None },
        SmoothFn { name: "soft_step_x1", arity: 1, f: soft_step, exact: None },
    ];
    if p >= 2 {
        s.extend([
            SmoothFn { name: "cos_x2", arity: 2, f: half_cos_x2, exact: Some(e_half / 2.0) },
            SmoothFn { name: "bump_x1x2", arity: 2, f: bump2, exact: Some(0.25) },
            SmoothFn { name: "sin_x1_plus_x2", arity: 2, f: half_sin_sum, exact: Some(0.0) },
            SmoothFn { name: "soft_corner", arity: 2, f: soft_corner, exact: None },
            SmoothFn { name: "saddle_bump", arity: 2, f: saddle_bump, exact: Some(0.0) },
        ]);
    } else {
        s.extend([
            SmoothFn { name: "cos_x1", arity: 1, f: half_cos_x1, exact: Some(e_half / 2.0) },
            SmoothFn {
                name: "bump_x1",
                arity: 1,
                f: bump1,
                exact: Some(std::f64::consts::FRAC_1_SQRT_2 / 2.0),
            },
            SmoothFn { name: "odd_bump_x1", arity: 1, f: odd_bump, exact: Some(0.0) },
        ]);
    }
    s
}

// Central stencils (offset, weight) for derivatives of order 0..=3.
const STENCILS: [&[(i32, f64)]; 4] = [
    &[(0, 1.0)],
    &[(-1, -0.5), (1, 0.5)],
    &[(-1, 1.0), (0, -2.0), (1, 1.0)],
    &[(-2, -0.5), (-1, 1.0), (1, -1.0), (2, 0.5)],
];

/// Largest finite-difference estimate of `|D^k h|` over `|k|_1 <= 3` on a
/// grid covering `[-6, 6]^arity`.
pub fn max_derivative_norm(h: &SmoothFn) -> f64 {
    let step = 1e-2;
    let grid: Vec<f64> = (0..=120).map(|i| -6.0 + 0.1 * i as f64).collect();
    let orders: Vec<(usize, usize)> = if h.arity == 1 {
        (0..=3).map(|a| (a, 0)).collect()
    } else {
        (0..=3)
            .flat_map(|a| (0..=3 - a).map(move |b| (a, b)))
            .collect()
    };
    let ys: &[f64] = if h.arity == 1 { &[0.0] } else { &grid };
    let mut worst = 0.0f64;
    let mut x = vec![0.0; h.arity.max(1)];
    for &gx in &grid {
        for &gy in ys {
            for &(a, b) in &orders {
                let mut d = 0.0;
                for &(oi, wi) in STENCILS[a] {
                    for &(oj, wj) in STENCILS[b] {
                        x[0] = gx + oi as f64 * step;
                        if h.arity > 1 {
                            x[1] = gy + oj as f64 * step;
                        }
                        d += wi * wj * (h.f)(&x);
                    }
                }
                d /= step.powi((a + b) as i32);
                worst = worst.max(d.abs());
            }
        }
    }
    worst
}

/// Rejects `h` unless every derivative of order at most three is bounded by
/// one (with a small allowance for finite-difference error).
pub fn check_smooth(h: &SmoothFn) -> Result<f64> {
    let m = max_derivative_norm(h);
    if m > 1.0 + 1e-3 {
        return Err(StatsError::NotSmooth {
            name: h.name.to_string(),
            order: "<=3".into(),
            value: m,
        });
    }
    Ok(m)
}

const PRIMES: [u64; 2] = [2, 3];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut r = 0.0;
    let mut f = inv;
    while i > 0 {
        r += (i % base) as f64 * f;
        i /= base;
        f *= inv;
    }
    r
}

/// Quasi-random standard-normal points in `arity` dimensions: a Halton
/// sequence under `shifts` independent Cranley-Patterson rotations.
fn qmc_normals(arity: usize, points: usize, shifts: usize, seed: u64) -> Vec<Vec<Vec<f64>>> {
    (0..shifts)
        .map(|s| {
            let mut rng = rng::stream(seed, keys::QUADRATURE, s as u64);
            let shift: Vec<f64> = (0..arity).map(|_| rng.random::<f64>()).collect();
            (1..=points as u64)
                .map(|i| {
                    (0..arity)
                        .map(|d| {
                            let u = (radical_inverse(i, PRIMES[d]) + shift[d]).fract();
                            normal::quantile(u.clamp(1e-300, 1.0 - 1e-16))
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

/// `E h(Z)` by randomized quasi-Monte Carlo, with the standard error taken
/// across the independent shifts.
pub fn normal_expectation(h: &SmoothFn, points: usize, shifts: usize, seed: u64) -> (f64, f64) {
    let pts = qmc_normals(h.arity, points, shifts, seed);
    expectation_from(h, &pts)
}

fn expectation_from(h: &SmoothFn, pts: &[Vec<Vec<f64>>]) -> (f64, f64) {
    let means: Vec<f64> = pts
        .iter()
        .map(|batch| batch.iter().map(|z| (h.f)(z)).sum::<f64>() / batch.len() as f64)
        .collect();
    mean_with_se(&means)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothEntry {
    pub name: String,
    pub sample_mean: f64,
    pub sample_se: f64,
    pub normal_mean: f64,
    pub normal_se: f64,
    pub gap: f64,
    pub gap_se: f64,
    pub max_derivative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothReport {
    pub entries: Vec<SmoothEntry>,
    pub rejected: Vec<String>,
    /// Largest gap over the suite; a lower proxy for the smooth distance.
    pub max_gap: f64,
    pub max_gap_se: f64,
}

/// Compares `E h` under the rows of `samples` (already standardized) with
/// `E h(Z)` for every function in `suite` that passes the derivative check.
/// Quadrature uses `points` Halton points under each of ten shifts.
pub fn multivariate_smooth_check(
    samples: &SampleMatrix,
    suite: &[SmoothFn],
    points: usize,
    seed: u64,
) -> Result<SmoothReport> {
    if samples.rows() < 2 {
        return Err(StatsError::TooFew { need: 2, got: samples.rows() });
    }
    let mut entries = Vec::new();
    let mut rejected = Vec::new();
    let mut cache: [Option<Vec<Vec<Vec<f64>>>>; 3] = [None, None, None];
    for h in suite {
        if h.arity > samples.cols() {
            return Err(StatsError::Shape(format!(
                "{} needs {} coordinates, samples have {}",
                h.name,
                h.arity,
                samples.cols()
            )));
        }
        let max_derivative = match check_smooth(h) {
            Ok(m) => m,
            Err(e) => {
                log::warn!("{e}");
                rejected.push(h.name.to_string());
                continue;
            }
        };
        let vals: Vec<f64> = (0..samples.rows()).map(|i| (h.f)(samples.row(i))).collect();
        let (sample_mean, sample_se) = mean_with_se(&vals);
        let (normal_mean, normal_se) = match h.exact {
            Some(v) => (v, 0.0),
            None => {
                let pts = cache[h.arity]
                    .get_or_insert_with(|| qmc_normals(h.arity, points, 10, seed));
                expectation_from(h, pts)
            }
        };
        entries.push(SmoothEntry {
            name: h.name.to_string(),
            sample_mean,
            sample_se,
            normal_mean,
            normal_se,
            gap: (sample_mean - normal_mean).abs(),
            gap_se: sample_se.hypot(normal_se),
            max_derivative,
        });
    }
    let (max_gap, max_gap_se) = entries
        .iter()
        .max_by(|a, b| a.gap.total_cmp(&b.gap))
        .map_or((0.0, 0.0), |e| (e.gap, e.gap_se));
    Ok(SmoothReport { entries, rejected, max_gap, max_gap_se })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn suite_passes_derivative_check() {
        for p in [1, 2] {
            let s = standard_suite(p);
            assert!(s.len() >= 5);
            for h in &s {
                let m = check_smooth(h).unwrap();
                assert!(m > 0.05, "{} suspiciously flat: {m}", h.name);
            }
        }
    }

    #[test]
    fn steep_function_is_rejected() {
        fn steep(x: &[f64]) -> f64 {
            (2.0 * x[0]).tanh()
        }
        let h = SmoothFn { name: "steep", arity: 1, f: steep, exact: None };
        assert!(matches!(check_smooth(&h), Err(StatsError::NotSmooth { .. })));
    }

    #[test]
    fn quadrature_matches_closed_forms() {
        for p in [1, 2] {
            for h in standard_suite(p).iter().filter(|h| h.exact.is_some()) {
                let (m, se) = normal_expectation(h, 20_000, 10, 3);
                let exact = h.exact.unwrap();
                assert!((m - exact).abs() < 1e-4 + 4.0 * se, "{}: {m} vs {exact}", h.name);
            }
        }
    }

    #[test]
    fn shifted_normal_gap_for_sine() {
        let mut r = rng::stream(11, keys::SYNTHETIC, 0);
        let n = 200_000;
        let delta = 0.1;
        let data: Vec<f64> = (0..n)
            .flat_map(|_| {
                let a: f64 = StandardNormal.sample(&mut r);
                let b: f64 = StandardNormal.sample(&mut r);
                [a + delta, b]
            })
            .collect();
        let s = SampleMatrix::new(data, 2, vec!["a".into(), "b".into()], "test").unwrap();
        let suite = standard_suite(2);
        let rep = multivariate_smooth_check(&s, &suite, 10_000, 5).unwrap();
        let sin = rep.entries.iter().find(|e| e.name == "sin_x1").unwrap();
        let want = delta.sin() * (-0.5f64).exp() / 2.0;
        assert!((sin.gap - want).abs() < 4.0 * sin.gap_se, "{} vs {want}", sin.gap);
        assert!(rep.max_gap >= sin.gap);
    }

    #[test]
    fn exact_normal_sample_has_small_gaps() {
        let mut r = rng::stream(12, keys::SYNTHETIC, 0);
        let data: Vec<f64> = (0..40_000).map(|_| StandardNormal.sample(&mut r)).collect();
        let s = SampleMatrix::new(data, 2, vec!["a".into(), "b".into()], "test").unwrap();
        let rep = multivariate_smooth_check(&s, &standard_suite(2), 10_000, 5).unwrap();
        for e in &rep.entries {
            assert!(e.gap <= 4.0 * e.gap_se + 1e-4, "{}: {} ({})", e.name, e.gap, e.gap_se);
        }
        assert!(rep.rejected.is_empty());
    }
}
