//! The voter model on a periodic torus: the occupation time of the origin
//! `T_s^t = int_s^{s+t} eta_u(0) du` and its segment split.

use std::collections::HashMap;

use rand::Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{param, Result, Trajectory};
use crate::rng::{self, keys};
use crate::stats::{cov_with_se, SampleMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VoterMethod {
    /// Graphical construction for large tori, forward simulation otherwise.
    #[default]
    Auto,
    /// Every site carries a rate-one clock; on a ring it copies a uniformly
    /// chosen neighbour, which flips it at rate (disagreeing neighbours)/2d.
    Forward,
    /// Same process read off the graphical representation: the opinion at
    /// the origin is traced back along copy arrows to time zero. Arrows are
    /// generated lazily per site, so only the sites the origin's ancestry
    /// visits are ever sampled.
    Graphical,
}

const AUTO_FORWARD_MAX_SITES: usize = 4096;

fn default_segments() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VoterParams {
    pub dim: usize,
    /// Side of the torus; 32 for `d <= 3` and 5 above when unset.
    #[serde(default)]
    pub torus_side: Option<usize>,
    pub theta: f64,
    /// Window starts `s_1, ..., s_p`; one column of the output per start.
    pub starts: Vec<f64>,
    pub t: f64,
    /// Equal pieces the first window is split into.
    #[serde(default = "default_segments")]
    pub segments: usize,
    #[serde(default)]
    pub method: VoterMethod,
    #[serde(default)]
    pub seed: u64,
}

impl VoterParams {
    pub fn new(dim: usize, theta: f64, s: f64, t: f64) -> Self {
        VoterParams {
            dim,
            torus_side: None,
            theta,
            starts: vec![s],
            t,
            segments: 1,
            method: VoterMethod::Auto,
            seed: 0,
        }
    }

    pub fn side(&self) -> usize {
        self.torus_side.unwrap_or(if self.dim <= 3 { 32 } else { 5 })
    }

    pub fn horizon(&self) -> f64 {
        self.starts.iter().copied().fold(0.0, f64::max) + self.t
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.side() < 2 {
            return param("dim", "need d >= 1 and a torus side of at least 2");
        }
        if (self.side() as f64).powi(self.dim as i32) > 1e9 {
            return param("torus_side", "torus too large");
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return param("theta", format!("{} is not a probability", self.theta));
        }
        if !(self.t > 0.0 && self.t.is_finite()) {
            return param("t", "window length must be positive");
        }
        if self.starts.is_empty() || self.starts.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
            return param("starts", "need at least one nonnegative start time");
        }
        if self.segments == 0 {
            return param("segments", "must be at least 1");
        }
        Ok(())
    }

    fn graphical(&self) -> bool {
        match self.method {
            VoterMethod::Forward => false,
            VoterMethod::Graphical => true,
            VoterMethod::Auto => self.side().pow(self.dim as u32) > AUTO_FORWARD_MAX_SITES,
        }
    }
}

#[derive(Clone, Copy)]
struct Torus {
    dim: usize,
    side: usize,
}

impl Torus {
    fn sites(&self) -> usize {
        self.side.pow(self.dim as u32)
    }

    /// Neighbour in direction `k` (axis `k / 2`, sign by parity).
    fn neighbour(&self, x: usize, k: usize) -> usize {
        let axis = k / 2;
        let stride = self.side.pow((self.dim - 1 - axis) as u32);
        let c = (x / stride) % self.side;
        let c2 = if k % 2 == 0 { (c + 1) % self.side } else { (c + self.side - 1) % self.side };
        x - c * stride + c2 * stride
    }
}

/// Origin path on `[0, h]` by forward simulation of the whole torus.
fn forward_path<R: Rng>(torus: Torus, theta: f64, h: f64, rng: &mut R) -> Trajectory {
    let n = torus.sites();
    let mut eta: Vec<bool> = (0..n).map(|_| rng.random::<f64>() < theta).collect();
    let mut tr = Trajectory::new(0.0, f64::from(u8::from(eta[0])));
    let mut t = 0.0;
    loop {
        t += rng.sample::<f64, _>(Exp1) / n as f64;
        if t > h {
            break;
        }
        let x = rng.random_range(0..n);
        let y = torus.neighbour(x, rng.random_range(0..2 * torus.dim));
        if eta[x] != eta[y] {
            eta[x] = eta[y];
            if x == 0 {
                tr.push(t, f64::from(u8::from(eta[0]))).expect("times increase");
            }
        }
    }
    tr.close(h);
    tr
}

struct Arrows {
    init: bool,
    times: Vec<f64>,
    dirs: Vec<u8>,
}

struct Graph {
    torus: Torus,
    theta: f64,
    h: f64,
    seed: u64,
    replicate: u64,
    sites: HashMap<usize, Arrows>,
}

impl Graph {
    fn arrows(&mut self, x: usize) -> &Arrows {
        let (theta, h, dim) = (self.theta, self.h, self.torus.dim);
        let (seed, rep) = (self.seed, self.replicate);
        self.sites.entry(x).or_insert_with(|| {
            let mut rng = rng::substream(seed, keys::VOTER_GRAPHICAL, rep, x as u64);
            let init = rng.random::<f64>() < theta;
            let mut times = Vec::new();
            let mut dirs = Vec::new();
            let mut t = 0.0;
            loop {
                t += rng.sample::<f64, _>(Exp1);
                if t > h {
                    break;
                }
                times.push(t);
                dirs.push(rng.random_range(0..2 * dim) as u8);
            }
            Arrows { init, times, dirs }
        })
    }

    /// Opinion of site `x` just before time `u`.
    fn trace(&mut self, mut x: usize, mut u: f64) -> bool {
        loop {
            let torus = self.torus;
            let a = self.arrows(x);
            let k = a.times.partition_point(|&tau| tau < u);
            if k == 0 {
                return a.init;
            }
            u = a.times[k - 1];
            x = torus.neighbour(x, a.dirs[k - 1] as usize);
        }
    }

    fn origin_path(&mut self) -> Trajectory {
        let init = self.arrows(0).init;
        let origin: Vec<(f64, u8)> = {
            let a = self.arrows(0);
            a.times.iter().copied().zip(a.dirs.iter().copied()).collect()
        };
        let mut tr = Trajectory::new(0.0, f64::from(u8::from(init)));
        for (tau, dir) in origin {
            let y = self.torus.neighbour(0, dir as usize);
            let v = self.trace(y, tau);
            tr.push(tau, f64::from(u8::from(v))).expect("arrow times increase");
        }
        tr.close(self.h);
        tr
    }
}

#[derive(Debug, Clone)]
pub struct VoterOutput {
    /// One column `T_{s_k}^t` per start.
    pub samples: SampleMatrix,
    /// The `m` segment integrals of the first window, when `m > 1`.
    pub segments: Option<SampleMatrix>,
    /// Origin path of replicate 0, for export.
    pub example: Trajectory,
}

fn origin_path(params: &VoterParams, r: usize) -> Trajectory {
    let torus = Torus { dim: params.dim, side: params.side() };
    if params.graphical() {
        Graph {
            torus,
            theta: params.theta,
            h: params.horizon(),
            seed: params.seed,
            replicate: r as u64,
            sites: HashMap::new(),
        }
        .origin_path()
    } else {
        let mut rng = rng::stream(params.seed, keys::VOTER_FORWARD, r as u64);
        forward_path(torus, params.theta, params.horizon(), &mut rng)
    }
}

/// Occupation times of the origin for `replicates` independent runs.
pub fn voter_occupation(params: &VoterParams, replicates: usize) -> Result<VoterOutput> {
    params.validate()?;
    if replicates == 0 {
        return param("replicates", "must be at least 1");
    }
    let m = params.segments;
    let rows: Vec<(Vec<f64>, Vec<f64>, Option<Trajectory>)> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let tr = origin_path(params, r);
            let mut totals = Vec::with_capacity(params.starts.len());
            let mut first = Vec::new();
            for (k, &s) in params.starts.iter().enumerate() {
                let seg = tr.segment_integrals(s, params.t, m);
                totals.push(seg.iter().sum());
                if k == 0 {
                    first = seg;
                }
            }
            (totals, first, (r == 0).then_some(tr))
        })
        .collect();
    let p = params.starts.len();
    let mut data = Vec::with_capacity(replicates * p);
    let mut seg = Vec::with_capacity(replicates * m);
    let mut example = None;
    for (t, s, e) in rows {
        data.extend(t);
        seg.extend(s);
        if e.is_some() {
            example = e;
        }
    }
    let meta = json!({ "params": params, "replicates": replicates, "graphical": params.graphical() });
    let samples = SampleMatrix::new(data, p, (0..p).map(|k| format!("T_{k}")).collect(), "voter")?
        .with_seed(params.seed)
        .with_params(meta.clone());
    let segments = if m > 1 {
        Some(
            SampleMatrix::new(seg, m, (0..m).map(|i| format!("X_{i}")).collect(), "voter")?
                .with_seed(params.seed)
                .with_params(meta),
        )
    } else {
        None
    };
    Ok(VoterOutput {
        samples,
        segments,
        example: example.expect("replicate 0 exists"),
    })
}

/// `Cov(eta_u(0), eta_v(0))` estimated directly from forward simulations on
/// a torus of side `side`, with its standard error.
pub fn direct_covariance(
    theta: f64,
    u: f64,
    v: f64,
    dim: usize,
    side: usize,
    replicates: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if !(0.0 <= u && u <= v) {
        return param("u", format!("need 0 <= u <= v, got u = {u}, v = {v}"));
    }
    if replicates < 2 {
        return param("replicates", "need at least 2 runs");
    }
    let torus = Torus { dim, side };
    let pairs: Vec<(f64, f64)> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng::stream(seed, keys::VOTER_DIRECT_COV, r as u64);
            let tr = forward_path(torus, theta, v, &mut rng);
            (tr.value_at(u), tr.value_at(v))
        })
        .collect();
    let (a, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    Ok(cov_with_se(&a, &b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::mean_with_se;

    #[test]
    fn absorbing_initial_states() {
        for method in [VoterMethod::Forward, VoterMethod::Graphical] {
            let mut p = VoterParams::new(2, 1.0, 0.5, 3.0);
            p.torus_side = Some(8);
            p.method = method;
            let out = voter_occupation(&p, 5).unwrap();
            assert!(out.samples.column(0).iter().all(|&x| x == 3.0));
            p.theta = 0.0;
            let out = voter_occupation(&p, 5).unwrap();
            assert!(out.samples.column(0).iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn mean_occupation_is_theta_t() {
        let mut p = VoterParams::new(1, 0.5, 0.0, 4.0);
        p.torus_side = Some(64);
        p.segments = 4;
        let out = voter_occupation(&p, 10_000).unwrap();
        let (m, se) = mean_with_se(&out.samples.column(0));
        assert!((m - 2.0).abs() < 4.0 * se, "{m} {se}");
        let seg = out.segments.unwrap();
        for r in 0..100 {
            assert_eq!(seg.row(r).iter().sum::<f64>(), out.samples.row(r)[0]);
        }
    }

    #[test]
    fn forward_and_graphical_agree_in_law() {
        let mut p = VoterParams::new(2, 0.3, 1.0, 3.0);
        p.torus_side = Some(6);
        p.method = VoterMethod::Forward;
        let f = voter_occupation(&p, 6000).unwrap().samples.column(0);
        p.method = VoterMethod::Graphical;
        let g = voter_occupation(&p, 6000).unwrap().samples.column(0);
        let (mf, sf) = mean_with_se(&f);
        let (mg, sg) = mean_with_se(&g);
        assert!((mf - mg).abs() < 4.0 * sf.hypot(sg));
        let sq = |x: &[f64], m: f64| x.iter().map(|v| (v - m).powi(2)).collect::<Vec<_>>();
        let (vf, svf) = mean_with_se(&sq(&f, mf));
        let (vg, svg) = mean_with_se(&sq(&g, mg));
        assert!((vf - vg).abs() < 4.0 * svf.hypot(svg), "{vf} {vg}");
    }

    #[test]
    fn deterministic() {
        let mut p = VoterParams::new(7, 0.5, 0.0, 2.0);
        p.seed = 9;
        let a = voter_occupation(&p, 30).unwrap();
        let b = voter_occupation(&p, 30).unwrap();
        assert_eq!(a.samples, b.samples);
    }
}
