//! Bond percolation on a box, with "connected to the box boundary" standing
//! in for membership of the infinite cluster.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{param, BlockObservable, LagAccumulator, LagPoint, Result, SimBox};
use crate::rng::{self, keys};
use crate::stats::SampleMatrix;

/// Square-lattice bond percolation threshold (external standard result,
/// used only as a guard).
pub const THETA_C_2D: f64 = 0.5;

fn default_max_lag() -> usize {
    8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PercolationParams {
    pub dim: usize,
    pub box_side: usize,
    pub theta: f64,
    #[serde(default)]
    pub margin: Option<usize>,
    #[serde(default = "default_max_lag")]
    pub max_lag: usize,
    #[serde(default)]
    pub seed: u64,
}

impl PercolationParams {
    pub fn new(dim: usize, box_side: usize, theta: f64) -> Self {
        PercolationParams {
            dim,
            box_side,
            theta,
            margin: None,
            max_lag: default_max_lag(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return param("dim", "percolation needs d >= 2");
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return param("theta", format!("{} is not a probability", self.theta));
        }
        Ok(())
    }

    /// Whether the run is known to be supercritical (only `d = 2` is
    /// covered; higher dimensions are taken on the caller's word).
    pub fn supercritical(&self) -> bool {
        self.dim != 2 || self.theta > THETA_C_2D
    }
}

#[derive(Debug, Clone)]
pub struct PercolationOutput {
    pub samples: SampleMatrix,
    pub lags: Vec<LagPoint>,
}

struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let p = self.parent[x as usize];
            self.parent[x as usize] = self.parent[p as usize];
            x = p;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        if self.size[ra as usize] < self.size[rb as usize] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb as usize] = ra;
        self.size[ra as usize] += self.size[rb as usize];
    }
}

/// Indicator field of sites connected to the boundary of the box.
fn boundary_cluster_field<R: Rng>(sim: SimBox, theta: f64, rng: &mut R) -> Vec<u8> {
    let n = sim.sites();
    let d = sim.dim;
    let strides: Vec<usize> = (0..d).map(|a| sim.stride(a)).collect();
    let mut uf = UnionFind::new(n);
    let mut c = vec![0usize; d];
    for idx in 0..n {
        for a in 0..d {
            if c[a] + 1 < sim.side && rng.random::<f64>() < theta {
                uf.union(idx as u32, (idx + strides[a]) as u32);
            }
        }
        let mut a = d;
        while a > 0 {
            a -= 1;
            c[a] += 1;
            if c[a] < sim.side {
                break;
            }
            c[a] = 0;
        }
    }
    let mut touches = vec![false; n];
    for idx in 0..n {
        if sim.depth(idx) == 0 {
            let r = uf.find(idx as u32);
            touches[r as usize] = true;
        }
    }
    (0..n).map(|i| u8::from(touches[uf.find(i as u32) as usize])).collect()
}

/// Draws `replicates` vectors `(U_{k_1}, ..., U_{k_p})`: the number of block
/// sites whose open cluster reaches the box boundary.
pub fn percolation_sample(
    params: &PercolationParams,
    obs: &BlockObservable,
    replicates: usize,
) -> Result<PercolationOutput> {
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
    let lag_template = if params.max_lag > 0 {
        Some(LagAccumulator::new(sim, params.max_lag)?)
    } else {
        None
    };
    let results: Vec<(Vec<f64>, Option<LagAccumulator>)> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng::stream(params.seed, keys::PERCOLATION, r as u64);
            let field = boundary_cluster_field(sim, params.theta, &mut rng);
            let row = blocks
                .iter()
                .map(|b| b.iter().map(|&i| field[i] as u64).sum::<u64>() as f64)
                .collect();
            let acc = lag_template.clone().map(|mut a| {
                a.push(&field);
                a
            });
            (row, acc)
        })
        .collect();
    let mut data = Vec::with_capacity(replicates * blocks.len());
    let mut lags: Option<LagAccumulator> = None;
    for (row, acc) in results {
        data.extend(row);
        match (&mut lags, acc) {
            (Some(l), Some(a)) => l.merge(a),
            (l @ None, Some(a)) => *l = Some(a),
            _ => {}
        }
    }
    let columns = (0..blocks.len()).map(|q| format!("U_{q}")).collect();
    let mut samples = SampleMatrix::new(data, blocks.len(), columns, "percolation")?
        .with_seed(params.seed)
        .with_params(json!({
            "params": params,
            "n": obs.n,
            "anchors": obs.anchors,
            "replicates": replicates,
        }));
    if !params.supercritical() {
        let w = format!(
            "theta = {} is not above the d = 2 threshold {THETA_C_2D}; the boundary-touch count is not an infinite-cluster proxy",
            params.theta
        );
        log::warn!("{w}");
        samples.warnings.push(w);
    }
    Ok(PercolationOutput {
        samples,
        lags: lags.map(|l| l.finish()).unwrap_or_default(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extreme_probabilities() {
        let obs = BlockObservable::centred(2, 4);
        let small = |theta| PercolationParams { max_lag: 4, ..PercolationParams::new(2, 30, theta) };
        let all = percolation_sample(&small(1.0), &obs, 5).unwrap();
        assert!(all.samples.column(0).iter().all(|&u| u == 16.0));
        let none = percolation_sample(&small(0.0), &obs, 5).unwrap();
        assert!(none.samples.column(0).iter().all(|&u| u == 0.0));
        assert!(!none.samples.warnings.is_empty());
    }

    #[test]
    fn union_find_against_flood_fill() {
        // 1-d chain inside a 2-d box: compare with explicit connectivity
        let sim = SimBox::new(2, 12).unwrap();
        for seed in 0..20 {
            let mut r1 = rng::stream(seed, keys::SYNTHETIC, 0);
            let field = boundary_cluster_field(sim, 0.55, &mut r1);
            // replay the same bond draws into an adjacency list
            let mut r2 = rng::stream(seed, keys::SYNTHETIC, 0);
            let n = sim.sites();
            let mut adj = vec![Vec::new(); n];
            for idx in 0..n {
                for a in 0..2 {
                    if sim.coord(idx, a) + 1 < sim.side && r2.random::<f64>() < 0.55 {
                        let j = idx + sim.stride(a);
                        adj[idx].push(j);
                        adj[j].push(idx);
                    }
                }
            }
            let mut seen = vec![false; n];
            let mut stack: Vec<usize> = (0..n).filter(|&i| sim.depth(i) == 0).collect();
            for &s in &stack {
                seen[s] = true;
            }
            while let Some(v) = stack.pop() {
                for &w in &adj[v] {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
            let flood: Vec<u8> = seen.iter().map(|&b| u8::from(b)).collect();
            assert_eq!(field, flood);
        }
    }

    #[test]
    fn deterministic() {
        let obs = BlockObservable::centred(2, 4);
        let p = PercolationParams { seed: 3, max_lag: 4, ..PercolationParams::new(2, 28, 0.7) };
        let a = percolation_sample(&p, &obs, 20).unwrap();
        let b = percolation_sample(&p, &obs, 20).unwrap();
        assert_eq!(a.samples, b.samples);
        assert!(percolation_sample(&PercolationParams::new(1, 28, 0.7), &BlockObservable::centred(1, 4), 2).is_err());
    }
}
