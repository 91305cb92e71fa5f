//! The one-dimensional contact process on `{-L, ..., L}`, started fully
//! infected and run through a burn-in to approximate its upper invariant
//! law, and the functional `D_{s,f}^t = int_s^{s+t} f(zeta(u)) du`.

use rand::Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{param, ParticleError, Result, Trajectory};
use crate::lattice::{fit_envelope, EnvelopeFit};
use crate::rng::{self, keys};
use crate::stats::{mean_with_se, SampleMatrix};

/// Critical infection rate of the one-dimensional contact process
/// (external numerical estimate; used only for the default burn-in).
pub const LAMBDA_C_1D: f64 = 1.6489;

/// `f(A) = sum_j w_j 1(A meets B_j)` with nonnegative weights, an increasing
/// cylindrical function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CylFunction {
    pub terms: Vec<HitTerm>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HitTerm {
    pub sites: Vec<i64>,
    #[serde(default = "one")]
    pub weight: f64,
}

fn one() -> f64 {
    1.0
}

impl CylFunction {
    /// `1(A meets B)`.
    pub fn indicator(sites: Vec<i64>) -> Self {
        CylFunction {
            terms: vec![HitTerm { sites, weight: 1.0 }],
        }
    }

    /// `sup |f|`, attained at full occupancy.
    pub fn sup_norm(&self) -> f64 {
        self.terms.iter().map(|t| t.weight).sum()
    }

    pub fn radius(&self) -> i64 {
        self.terms
            .iter()
            .flat_map(|t| t.sites.iter().map(|s| s.abs()))
            .max()
            .unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.terms.is_empty() || self.terms.iter().any(|t| t.sites.is_empty()) {
            return param("f", "need at least one nonempty base set");
        }
        if self.terms.iter().any(|t| !(t.weight > 0.0 && t.weight.is_finite())) {
            return param("f", "weights must be positive so that f is increasing and non-constant");
        }
        Ok(())
    }
}

fn default_segments() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContactParams {
    pub infection_rate: f64,
    /// Half-width `L`; by default wide enough that an infection front moving
    /// at speed `2 lambda` cannot bring boundary effects to the base sets.
    #[serde(default)]
    pub interval_radius: Option<usize>,
    /// Burn-in before time zero; `max(50, 10 / |lambda - lambda_c|)` when
    /// unset.
    #[serde(default)]
    pub burnin_time: Option<f64>,
    pub starts: Vec<f64>,
    pub t: f64,
    pub f: CylFunction,
    #[serde(default = "default_segments")]
    pub segments: usize,
    #[serde(default)]
    pub seed: u64,
}

impl ContactParams {
    pub fn new(infection_rate: f64, s: f64, t: f64, f: CylFunction) -> Self {
        ContactParams {
            infection_rate,
            interval_radius: None,
            burnin_time: None,
            starts: vec![s],
            t,
            f,
            segments: 1,
            seed: 0,
        }
    }

    pub fn burnin(&self) -> f64 {
        self.burnin_time
            .unwrap_or_else(|| (10.0 / (self.infection_rate - LAMBDA_C_1D).abs()).max(50.0))
    }

    pub fn horizon(&self) -> f64 {
        self.starts.iter().copied().fold(0.0, f64::max) + self.t
    }

    pub fn radius(&self) -> usize {
        self.interval_radius.unwrap_or_else(|| {
            let front = 2.0 * self.infection_rate * (self.burnin() + self.horizon());
            front.ceil() as usize + self.f.radius() as usize + 1
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.infection_rate >= 0.0 && self.infection_rate.is_finite()) {
            return param("infection_rate", "must be nonnegative");
        }
        if !(self.t > 0.0 && self.t.is_finite()) {
            return param("t", "window length must be positive");
        }
        if self.starts.is_empty() || self.starts.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
            return param("starts", "need at least one nonnegative start time");
        }
        if !(self.burnin() >= 0.0 && self.burnin().is_finite()) {
            return param("burnin_time", "must be nonnegative");
        }
        if self.segments == 0 {
            return param("segments", "must be at least 1");
        }
        self.f.validate()?;
        if self.f.radius() > self.radius() as i64 {
            return param("f", format!("base set reaches outside {{-{0}..{0}}}", self.radius()));
        }
        Ok(())
    }
}

/// Path of `f(zeta(u))` for `u` in `[0, horizon]` after the burn-in.
fn f_path<R: Rng>(params: &ContactParams, rng: &mut R) -> Trajectory {
    let l = params.radius() as i64;
    let n = (2 * l + 1) as usize;
    let lam = params.infection_rate;
    let burn = params.burnin();
    let end = burn + params.horizon();
    let mut member: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (j, term) in params.f.terms.iter().enumerate() {
        for &s in &term.sites {
            member[(s + l) as usize].push(j);
        }
    }
    let mut counts: Vec<usize> = params.f.terms.iter().map(|t| t.sites.len()).collect();
    let fval = |c: &[usize]| -> f64 {
        params
            .f
            .terms
            .iter()
            .zip(c)
            .filter(|(_, &k)| k > 0)
            .map(|(t, _)| t.weight)
            .sum()
    };
    let mut infected: Vec<usize> = (0..n).collect();
    let mut pos: Vec<usize> = (0..n).collect();
    let mut tr: Option<Trajectory> = None;
    let mut t = 0.0;
    let p_recover = 1.0 / (1.0 + 2.0 * lam);
    loop {
        let k = infected.len();
        let next = if k == 0 {
            f64::INFINITY
        } else {
            t + rng.sample::<f64, _>(Exp1) / (k as f64 * (1.0 + 2.0 * lam))
        };
        if tr.is_none() && next > burn {
            tr = Some(Trajectory::new(0.0, fval(&counts)));
        }
        if next > end {
            break;
        }
        t = next;
        let x = infected[rng.random_range(0..k)];
        let u: f64 = rng.random();
        let changed = if u < p_recover {
            let i = pos[x];
            infected.swap_remove(i);
            if i < infected.len() {
                pos[infected[i]] = i;
            }
            pos[x] = usize::MAX;
            for &j in &member[x] {
                counts[j] -= 1;
            }
            !member[x].is_empty()
        } else {
            let y = if u < p_recover + (1.0 - p_recover) / 2.0 { x.wrapping_sub(1) } else { x + 1 };
            if y < n && pos[y] == usize::MAX {
                pos[y] = infected.len();
                infected.push(y);
                for &j in &member[y] {
                    counts[j] += 1;
                }
                !member[y].is_empty()
            } else {
                false
            }
        };
        if changed {
            if let Some(tr) = tr.as_mut() {
                tr.push(t - burn, fval(&counts)).expect("event times increase");
            }
        }
    }
    let mut tr = tr.expect("burn-in is reached before the end");
    tr.close(params.horizon());
    tr
}

#[derive(Debug, Clone)]
pub struct ContactOutput {
    /// One column `D_{s_k,f}^t` per start.
    pub samples: SampleMatrix,
    /// The `m` segment integrals of the first window, when `m > 1`.
    pub segments: Option<SampleMatrix>,
    pub example: Trajectory,
}

fn paths(params: &ContactParams, replicates: usize) -> Vec<Trajectory> {
    (0..replicates)
        .into_par_iter()
        .map(|r| f_path(params, &mut rng::stream(params.seed, keys::CONTACT, r as u64)))
        .collect()
}

/// Simulates `replicates` independent runs and integrates `f` over every
/// window.
pub fn contact_simulate(params: &ContactParams, replicates: usize) -> Result<ContactOutput> {
    params.validate()?;
    if replicates == 0 {
        return param("replicates", "must be at least 1");
    }
    let trs = paths(params, replicates);
    let m = params.segments;
    let p = params.starts.len();
    let mut data = Vec::with_capacity(replicates * p);
    let mut seg = Vec::with_capacity(replicates * m);
    for tr in &trs {
        for (k, &s) in params.starts.iter().enumerate() {
            let pieces = tr.segment_integrals(s, params.t, m);
            data.push(pieces.iter().sum());
            if k == 0 {
                seg.extend(pieces);
            }
        }
    }
    let meta = json!({
        "params": params,
        "replicates": replicates,
        "radius": params.radius(),
        "burnin_time": params.burnin(),
        "sup_f": params.f.sup_norm(),
    });
    let samples = SampleMatrix::new(data, p, (0..p).map(|k| format!("D_{k}")).collect(), "contact")?
        .with_seed(params.seed)
        .with_params(meta.clone());
    let segments = if m > 1 {
        Some(
            SampleMatrix::new(seg, m, (0..m).map(|i| format!("Y_{i}")).collect(), "contact")?
                .with_seed(params.seed)
                .with_params(meta),
        )
    } else {
        None
    };
    Ok(ContactOutput {
        samples,
        segments,
        example: trs.into_iter().next().expect("one replicate"),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactDecay {
    pub kappa: f64,
    pub gamma: f64,
    pub fit: EnvelopeFit,
    /// `(lag, cov, se)` for every lag on the grid.
    pub lags: Vec<(f64, f64, f64)>,
}

/// Time-lag covariances of `f(zeta(r))` and `f(zeta(r + h))`, averaged over
/// reference times `r` spread across `[0, horizon - max lag]`, and the
/// exponential envelope `kappa exp(-gamma h)` fitted to them.
pub fn contact_decay_fit(trajectories: &[Trajectory], lag_grid: &[f64]) -> Result<ContactDecay> {
    if trajectories.len() < 30 {
        return param("replicates", "need at least 30 trajectories");
    }
    let max_lag = lag_grid.iter().copied().fold(0.0, f64::max);
    let span = trajectories[0].end() - max_lag;
    if span < 0.0 {
        return param("lag_grid", "largest lag exceeds the recorded window");
    }
    let refs: Vec<f64> = (0..20).map(|i| span * i as f64 / 19.0).collect();
    let mut means = Vec::with_capacity(trajectories.len());
    let mut prods = vec![Vec::with_capacity(trajectories.len()); lag_grid.len()];
    for tr in trajectories {
        means.push(refs.iter().map(|&r| tr.value_at(r)).sum::<f64>() / refs.len() as f64);
        for (k, &h) in lag_grid.iter().enumerate() {
            let p = refs.iter().map(|&r| tr.value_at(r) * tr.value_at(r + h)).sum::<f64>();
            prods[k].push(p / refs.len() as f64);
        }
    }
    let mbar = means.iter().sum::<f64>() / means.len() as f64;
    let lags: Vec<(f64, f64, f64)> = lag_grid
        .iter()
        .zip(&prods)
        .map(|(&h, p)| {
            let (pm, se) = mean_with_se(p);
            (h, pm - mbar * mbar, se)
        })
        .collect();
    let fit = fit_envelope(&lags).map_err(|e| ParticleError::Fit(e.to_string()))?;
    Ok(ContactDecay {
        kappa: fit.kappa,
        gamma: fit.rate,
        fit,
        lags,
    })
}

/// Runs the process and fits the time-covariance envelope in one go.
pub fn contact_decay_from_params(params: &ContactParams, replicates: usize, lag_grid: &[f64]) -> Result<ContactDecay> {
    params.validate()?;
    contact_decay_fit(&paths(params, replicates), lag_grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn origin(lam: f64, t: f64) -> ContactParams {
        ContactParams {
            interval_radius: Some(40),
            burnin_time: Some(20.0),
            ..ContactParams::new(lam, 0.0, t, CylFunction::indicator(vec![0]))
        }
    }

    #[test]
    fn extremes() {
        let out = contact_simulate(&ContactParams { burnin_time: Some(50.0), ..origin(0.0, 5.0) }, 20).unwrap();
        assert!(out.samples.column(0).iter().all(|&d| d == 0.0));
        let out = contact_simulate(&origin(50.0, 5.0), 20).unwrap();
        let (m, _) = mean_with_se(&out.samples.column(0));
        assert!(m > 4.9, "{m}");
    }

    #[test]
    fn segments_add_up() {
        let mut p = origin(2.0, 8.0);
        p.segments = 5;
        let out = contact_simulate(&p, 50).unwrap();
        let seg = out.segments.unwrap();
        for r in 0..50 {
            assert_eq!(seg.row(r).iter().sum::<f64>(), out.samples.row(r)[0]);
        }
    }

    #[test]
    fn decay_is_positive_at_lambda_two() {
        let lags: Vec<f64> = (0..12).map(|i| 0.5 * i as f64).collect();
        let d = contact_decay_from_params(&origin(2.0, 10.0), 1000, &lags).unwrap();
        assert!(d.gamma > 0.0 && d.gamma.is_finite(), "{d:?}");
        for &(h, c, _) in &d.lags {
            if d.fit.used.contains(&h) {
                assert!(d.kappa * (-d.gamma * h).exp() >= c * (1.0 - 1e-12));
            }
        }
    }

    #[test]
    fn defaults() {
        let p = ContactParams::new(2.0, 0.0, 8.0, CylFunction::indicator(vec![0, 1]));
        assert_eq!(p.burnin(), 50.0);
        assert!(p.radius() >= 4 * 58);
        assert_eq!(p.f.sup_norm(), 1.0);
        let bad = ContactParams::new(2.0, 0.0, 8.0, CylFunction::indicator(vec![]));
        assert!(bad.validate().is_err());
    }
}
