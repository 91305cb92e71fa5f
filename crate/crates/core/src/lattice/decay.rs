//! Lag covariances of a stationary field and the exponential envelope fit
//! `R(k) <= kappa0 exp(-lambda |k|_1)`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{LatticeError, Result, SimBox};
use crate::bounds::CovDecayParams;

/// Estimated covariance at axis-aligned lag `lag`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LagPoint {
    pub lag: usize,
    pub cov: f64,
    pub se: f64,
}

/// Collects per-snapshot spatial averages of `x_i x_{i + k e_a}` over the
/// central half of the box, for `k = 0..=max_lag` and every axis `a`.
#[derive(Debug, Clone)]
pub struct LagAccumulator {
    sim: SimBox,
    max_lag: usize,
    core: Vec<usize>,
    means: Vec<f64>,
    products: Vec<Vec<f64>>,
}

impl LagAccumulator {
    pub fn new(sim: SimBox, max_lag: usize) -> Result<Self> {
        let inner = sim.side / 4;
        if max_lag == 0 || max_lag > inner {
            return Err(LatticeError::Geometry(format!(
                "lag window {max_lag} must be in 1..={inner} for a box of side {}",
                sim.side
            )));
        }
        let core: Vec<usize> = (0..sim.sites()).filter(|&i| sim.depth(i) >= inner).collect();
        Ok(LagAccumulator {
            sim,
            max_lag,
            core,
            means: Vec::new(),
            products: vec![Vec::new(); max_lag + 1],
        })
    }

    pub fn push<T: Copy + Into<f64>>(&mut self, field: &[T]) {
        let nc = self.core.len() as f64;
        let m = self.core.iter().map(|&i| field[i].into()).sum::<f64>() / nc;
        self.means.push(m);
        for k in 0..=self.max_lag {
            let mut acc = 0.0;
            for a in 0..self.sim.dim {
                let off = k * self.sim.stride(a);
                for &i in &self.core {
                    acc += field[i].into() * field[i + off].into();
                }
            }
            self.products[k].push(acc / (nc * self.sim.dim as f64));
        }
    }

    pub fn snapshots(&self) -> usize {
        self.means.len()
    }

    pub fn merge(&mut self, other: LagAccumulator) {
        self.means.extend(other.means);
        for (a, b) in self.products.iter_mut().zip(other.products) {
            a.extend(b);
        }
    }

    pub fn finish(&self) -> Vec<LagPoint> {
        let s = self.means.len();
        if s < 2 {
            return Vec::new();
        }
        let m = self.means.iter().sum::<f64>() / s as f64;
        self.products
            .iter()
            .enumerate()
            .map(|(lag, p)| {
                let (pm, se) = crate::stats::mean_with_se(p);
                LagPoint { lag, cov: pm - m * m, se }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub params: CovDecayParams<f64>,
    /// Lags that survived the noise floor.
    pub used_lags: Vec<usize>,
    /// `exp` of the regression intercept, before inflation to an envelope.
    pub kappa_fit: f64,
}

/// Lags are used from zero upward while the estimate stays above four
/// standard errors; the first lag at the noise floor ends the window.
pub const NOISE_FLOOR_SE: f64 = 4.0;

/// Exponential envelope `kappa exp(-rate x)` fitted to `(x, cov, se)`
/// triples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeFit {
    pub kappa: f64,
    pub rate: f64,
    /// Lags that survived the noise floor.
    pub used: Vec<f64>,
    /// `exp` of the regression intercept, before inflation to an envelope.
    pub kappa_fit: f64,
}

/// Weighted least squares of `log cov` on the lag (weights `(cov/se)^2`,
/// the inverse delta-method variance), then `kappa` raised until the
/// envelope dominates every used lag.
pub fn fit_envelope(points: &[(f64, f64, f64)]) -> Result<EnvelopeFit> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let used: Vec<(f64, f64, f64)> = pts
        .iter()
        .take_while(|&&(_, c, se)| c > 0.0 && c > NOISE_FLOOR_SE * se)
        .copied()
        .collect();
    if used.len() < 3 {
        return Err(LatticeError::Fit(format!(
            "fewer than 3 usable lags ({} above the noise floor)",
            used.len()
        )));
    }
    let (mut sw, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(x, c, se) in &used {
        let w = if se > 0.0 { (c / se).powi(2) } else { 1e12 };
        let y = c.ln();
        sw += w;
        sx += w * x;
        sy += w * y;
        sxx += w * x * x;
        sxy += w * x * y;
    }
    let slope = (sw * sxy - sx * sy) / (sw * sxx - sx * sx);
    let intercept = (sy - slope * sx) / sw;
    let rate = -slope;
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(LatticeError::Fit(format!("fitted decay rate {rate} is not positive")));
    }
    let kappa = used
        .iter()
        .map(|&(x, c, _)| c * (rate * x).exp())
        .fold(intercept.exp(), f64::max);
    Ok(EnvelopeFit {
        kappa,
        rate,
        used: used.iter().map(|p| p.0).collect(),
        kappa_fit: intercept.exp(),
    })
}

/// Envelope fit over axis-aligned lattice lags, as [`CovDecayParams`].
pub fn empirical_decay_fit(points: &[LagPoint], dim: u32) -> Result<DecayFit> {
    let triples: Vec<(f64, f64, f64)> = points.iter().map(|p| (p.lag as f64, p.cov, p.se)).collect();
    let fit = fit_envelope(&triples)?;
    Ok(DecayFit {
        params: CovDecayParams::new(fit.kappa, fit.rate, dim)?,
        used_lags: fit.used.iter().map(|&x| x as usize).collect(),
        kappa_fit: fit.kappa_fit,
    })
}

/// Stationary Gaussian field on the box with covariance
/// `kappa0 exp(-lambda |k|_1)`, built by running a unit-variance AR(1)
/// filter along every axis in turn.
pub fn ar_field<R: Rng>(sim: SimBox, kappa0: f64, lambda: f64, rng: &mut R) -> Vec<f64> {
    let rho = (-lambda).exp();
    let innov = (1.0 - rho * rho).sqrt();
    let mut x: Vec<f64> = (0..sim.sites()).map(|_| rng.sample(StandardNormal)).collect();
    for a in 0..sim.dim {
        let st = sim.stride(a);
        for i in 0..sim.sites() {
            if sim.coord(i, a) > 0 {
                x[i] = rho * x[i - st] + innov * x[i];
            }
        }
    }
    let s = kappa0.sqrt();
    x.iter_mut().for_each(|v| *v *= s);
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{self, keys};

    #[test]
    fn recovers_synthetic_envelope() {
        for dim in [1usize, 2] {
            let sim = SimBox::new(dim, if dim == 1 { 400 } else { 40 }).unwrap();
            let mut acc = LagAccumulator::new(sim, 8).unwrap();
            for r in 0..10_000u64 {
                let mut g = rng::stream(1, keys::SYNTHETIC, r);
                acc.push(&ar_field(sim, 0.8, 0.5, &mut g));
            }
            let fit = empirical_decay_fit(&acc.finish(), dim as u32).unwrap();
            assert!((fit.params.kappa0 / 0.8 - 1.0).abs() < 0.1, "{fit:?}");
            assert!((fit.params.lambda / 0.5 - 1.0).abs() < 0.1, "{fit:?}");
            for p in acc.finish().iter().filter(|p| fit.used_lags.contains(&p.lag)) {
                let env = fit.params.kappa0 * (-fit.params.lambda * p.lag as f64).exp();
                assert!(env >= p.cov * (1.0 - 1e-12));
            }
        }
    }

    #[test]
    fn white_noise_has_no_usable_lags() {
        let sim = SimBox::new(1, 400).unwrap();
        let mut acc = LagAccumulator::new(sim, 6).unwrap();
        for r in 0..500u64 {
            let mut g = rng::stream(2, keys::SYNTHETIC, r);
            acc.push(&ar_field(sim, 1.0, 60.0, &mut g));
        }
        let err = empirical_decay_fit(&acc.finish(), 1).unwrap_err();
        assert!(err.to_string().contains("fewer than 3 usable lags"), "{err}");
    }
}
