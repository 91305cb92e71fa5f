//! Heat-bath Glauber dynamics for the nearest-neighbour Ising model on a box
//! with free, plus or minus boundary spins.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{mann_kendall, param, BlockObservable, LagAccumulator, LagPoint, Result, SimBox, TrendTest};
use crate::rng::{self, keys};
use crate::stats::SampleMatrix;

/// `0.5 ln(1 + sqrt 2)`, the square-lattice critical inverse temperature
/// (external standard result, used only as a configuration guard).
pub const BETA_C_2D: f64 = 0.440_686_793_509_771_5;
/// Simple-cubic estimate, same role as [`BETA_C_2D`].
pub const BETA_C_3D: f64 = 0.221_654_6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    #[default]
    Free,
    Plus,
    Minus,
}

impl Boundary {
    fn spin(self) -> i32 {
        match self {
            Boundary::Free => 0,
            Boundary::Plus => 1,
            Boundary::Minus => -1,
        }
    }
}

fn default_burnin() -> usize {
    200
}
fn default_between() -> usize {
    10
}
fn default_chains() -> usize {
    32
}
fn default_max_lag() -> usize {
    8
}
fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IsingParams {
    pub dim: usize,
    pub box_side: usize,
    pub beta: f64,
    #[serde(default)]
    pub h: f64,
    #[serde(default = "one", alias = "J")]
    pub coupling: f64,
    #[serde(default)]
    pub boundary: Boundary,
    #[serde(default = "default_burnin")]
    pub sweeps_burnin: usize,
    #[serde(default = "default_between")]
    pub sweeps_between: usize,
    /// Independent Markov chains; replicates are dealt out to chains in
    /// contiguous runs.
    #[serde(default = "default_chains")]
    pub chains: usize,
    /// Clearance between every block and the box boundary; `3n` when unset.
    #[serde(default)]
    pub margin: Option<usize>,
    /// Largest lag of the spin covariance recorded for the decay fit
    /// (0 disables it).
    #[serde(default = "default_max_lag")]
    pub max_lag: usize,
    #[serde(default)]
    pub seed: u64,
}

impl IsingParams {
    pub fn new(dim: usize, box_side: usize, beta: f64, h: f64) -> Self {
        IsingParams {
            dim,
            box_side,
            beta,
            h,
            coupling: 1.0,
            boundary: Boundary::Free,
            sweeps_burnin: default_burnin(),
            sweeps_between: default_between(),
            chains: default_chains(),
            margin: None,
            max_lag: default_max_lag(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return param("dim", "must be at least 1");
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return param("beta", format!("{} is not a nonnegative inverse temperature", self.beta));
        }
        if !(self.coupling >= 0.0 && self.coupling.is_finite()) {
            return param("coupling", "interaction must be nonnegative for positive association");
        }
        if !self.h.is_finite() {
            return param("h", "must be finite");
        }
        if self.h == 0.0 && self.coupling > 0.0 {
            let critical = match self.dim {
                1 => f64::INFINITY,
                2 => BETA_C_2D,
                3 => BETA_C_3D,
                _ => {
                    return param(
                        "h",
                        "h = 0 needs a known critical point; only d <= 3 is covered, use h != 0",
                    )
                }
            };
            if self.beta * self.coupling >= critical {
                return param(
                    "beta",
                    format!(
                        "beta J = {} is not below the critical value {critical} at h = 0",
                        self.beta * self.coupling
                    ),
                );
            }
        }
        if self.chains == 0 {
            return param("chains", "must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct IsingOutput {
    pub samples: SampleMatrix,
    /// Axis-aligned spin covariances from the recorded configurations.
    pub lags: Vec<LagPoint>,
    /// Trend test on the chain-averaged magnetization over the second half
    /// of burn-in.
    pub burnin_trend: TrendTest,
}

struct Chain {
    sim: SimBox,
    spins: Vec<i8>,
    /// `P(spin = +1)` indexed by the neighbour sum plus `2d`.
    p_plus: Vec<f64>,
    bval: i32,
}

impl Chain {
    fn sweep<R: Rng>(&mut self, rng: &mut R) {
        let d = self.sim.dim;
        let side = self.sim.side;
        let strides: Vec<usize> = (0..d).map(|a| self.sim.stride(a)).collect();
        let mut c = vec![0usize; d];
        for idx in 0..self.spins.len() {
            let mut s = 0i32;
            for a in 0..d {
                s += if c[a] > 0 { self.spins[idx - strides[a]] as i32 } else { self.bval };
                s += if c[a] + 1 < side { self.spins[idx + strides[a]] as i32 } else { self.bval };
            }
            let u: f64 = rng.random();
            self.spins[idx] = if u < self.p_plus[(s + 2 * d as i32) as usize] { 1 } else { -1 };
            let mut a = d;
            while a > 0 {
                a -= 1;
                c[a] += 1;
                if c[a] < side {
                    break;
                }
                c[a] = 0;
            }
        }
    }
}

/// Draws `replicates` vectors `(M_{k_1}, ..., M_{k_p})` of block
/// magnetizations. Results depend only on the parameters and the seed.
pub fn ising_sample(params: &IsingParams, obs: &BlockObservable, replicates: usize) -> Result<IsingOutput> {
    params.validate()?;
    if replicates == 0 {
        return param("replicates", "must be at least 1");
    }
    let sim = SimBox::new(params.dim, params.box_side)?;
    let margin = params.margin.unwrap_or(3 * obs.n);
    let blocks: Vec<Vec<usize>> = obs
        .anchors
        .iter()
        .map(|a| sim.block_sites(a, obs.n, margin))
        .collect::<Result<_>>()?;
    let d = params.dim as i32;
    let p_plus: Vec<f64> = (-2 * d..=2 * d)
        .map(|s| {
            let local = params.coupling * s as f64 + params.h;
            1.0 / (1.0 + (-2.0 * params.beta * local).exp())
        })
        .collect();
    let chains = params.chains.min(replicates);
    let per = |c: usize| replicates / chains + usize::from(c < replicates % chains);
    let lag_template = if params.max_lag > 0 {
        Some(LagAccumulator::new(sim, params.max_lag)?)
    } else {
        None
    };

    let results: Vec<(Vec<f64>, Vec<f64>, Option<LagAccumulator>)> = (0..chains)
        .into_par_iter()
        .map(|c| {
            let mut rng = rng::stream(params.seed, keys::ISING, c as u64);
            let mut chain = Chain {
                sim,
                spins: (0..sim.sites()).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect(),
                p_plus: p_plus.clone(),
                bval: params.boundary.spin(),
            };
            let mut trace = Vec::with_capacity(params.sweeps_burnin);
            for _ in 0..params.sweeps_burnin {
                chain.sweep(&mut rng);
                trace.push(chain.spins.iter().map(|&s| s as i64).sum::<i64>() as f64);
            }
            let mut acc = lag_template.clone();
            let mut rows = Vec::with_capacity(per(c) * blocks.len());
            for _ in 0..per(c) {
                for _ in 0..params.sweeps_between.max(1) {
                    chain.sweep(&mut rng);
                }
                for b in &blocks {
                    rows.push(b.iter().map(|&i| chain.spins[i] as i64).sum::<i64>() as f64);
                }
                if let Some(a) = acc.as_mut() {
                    a.push(&chain.spins);
                }
            }
            (rows, trace, acc)
        })
        .collect();

    let mut data = Vec::with_capacity(replicates * blocks.len());
    let half = params.sweeps_burnin / 2;
    let mut avg_trace = vec![0.0; params.sweeps_burnin - half];
    let mut lags: Option<LagAccumulator> = None;
    for (rows, trace, acc) in results {
        data.extend(rows);
        for (t, v) in avg_trace.iter_mut().zip(&trace[half..]) {
            *t += v / chains as f64;
        }
        match (&mut lags, acc) {
            (Some(l), Some(a)) => l.merge(a),
            (l @ None, Some(a)) => *l = Some(a),
            _ => {}
        }
    }
    let burnin_trend = mann_kendall(&avg_trace);
    let columns = (0..blocks.len()).map(|q| format!("M_{q}")).collect();
    let mut samples = SampleMatrix::new(data, blocks.len(), columns, "ising")?
        .with_seed(params.seed)
        .with_params(json!({
            "params": params,
            "n": obs.n,
            "anchors": obs.anchors,
            "replicates": replicates,
        }));
    if burnin_trend.trend {
        let w = format!(
            "magnetization trend over the second half of burn-in (Mann-Kendall z = {:.2})",
            burnin_trend.z
        );
        log::warn!("{w}");
        samples.warnings.push(w);
    }
    Ok(IsingOutput {
        samples,
        lags: lags.map(|l| l.finish()).unwrap_or_default(),
        burnin_trend,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::empirical_decay_fit;
    use crate::stats::mean_with_se;

    fn small(dim: usize, side: usize, beta: f64, h: f64) -> IsingParams {
        IsingParams {
            sweeps_burnin: 60,
            sweeps_between: 3,
            chains: 8,
            max_lag: 0,
            margin: Some(2),
            seed: 7,
            ..IsingParams::new(dim, side, beta, h)
        }
    }

    #[test]
    fn infinite_temperature_is_iid() {
        let p = small(2, 24, 0.0, 0.0);
        let out = ising_sample(&p, &BlockObservable::centred(2, 6), 4000).unwrap();
        let m = out.samples.column(0);
        let (mean, se) = mean_with_se(&m);
        assert!(mean.abs() < 4.0 * se);
        let var = m.iter().map(|x| x * x).sum::<f64>() / m.len() as f64;
        // Var(M) = 36; SE of the variance of a near-normal sum is 36 sqrt(2/N)
        assert!((var - 36.0).abs() < 4.0 * 36.0 * (2.0f64 / 4000.0).sqrt(), "{var}");
    }

    #[test]
    fn strong_field_saturates() {
        let p = small(2, 20, 1.0, 10.0);
        let out = ising_sample(&p, &BlockObservable::centred(2, 4), 50).unwrap();
        assert!(out.samples.column(0).iter().all(|&m| m == 16.0));
    }

    #[test]
    fn deterministic_under_seed() {
        let p = small(1, 80, 0.4, 0.0);
        let obs = BlockObservable::centred(1, 8);
        let a = ising_sample(&p, &obs, 100).unwrap();
        let b = ising_sample(&p, &obs, 100).unwrap();
        assert_eq!(a.samples, b.samples);
        let c = ising_sample(&IsingParams { seed: 8, ..p }, &obs, 100).unwrap();
        assert_ne!(a.samples, c.samples);
    }

    #[test]
    fn one_dimensional_correlation_length() {
        let p = IsingParams {
            max_lag: 8,
            sweeps_between: 2,
            ..small(1, 400, 0.5, 0.0)
        };
        let out = ising_sample(&p, &BlockObservable::centred(1, 16), 2000).unwrap();
        let fit = empirical_decay_fit(&out.lags, 1).unwrap();
        let want = -(0.5f64.tanh()).ln();
        assert!((fit.params.lambda / want - 1.0).abs() < 0.1, "{fit:?}");
        assert!((out.lags[1].cov - 0.5f64.tanh()).abs() < 4.0 * out.lags[1].se + 0.01);
    }

    #[test]
    fn guards() {
        assert!(IsingParams::new(2, 32, 0.5, 0.0).validate().is_err());
        assert!(IsingParams::new(2, 32, 0.5, 0.1).validate().is_ok());
        assert!(IsingParams::new(4, 8, 0.1, 0.0).validate().is_err());
        let mut p = IsingParams::new(2, 32, 0.2, 0.0);
        p.coupling = -1.0;
        assert!(p.validate().is_err());
        assert!(ising_sample(&IsingParams::new(2, 16, 0.2, 0.0), &BlockObservable::centred(2, 8), 10).is_err());
    }
}
