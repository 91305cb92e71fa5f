use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::bounds::CovMatrix;
use crate::rng::{self, keys};
use crate::stats::{SampleMatrix, StatsError};

/// `p` sums `S_j = sum_{i<m} xi_{i,j}` of bounded, positively associated
/// summands `xi_{i,j} = (U_{i,j} + epsilon V_j + delta V_0) / c`, where all
/// `U`, `V` are independent uniform on `[-1, 1]` and `c` makes every `S_j`
/// have unit variance. Every covariance is known in closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommonShock {
    pub m: usize,
    pub p: usize,
    pub epsilon: f64,
    pub delta: f64,
}

impl CommonShock {
    pub fn iid(m: usize) -> Self {
        CommonShock { m, p: 1, epsilon: 0.0, delta: 0.0 }
    }

    /// Shock amplitude giving summand bound `b` for a single sum with
    /// `delta = 0`: the positive root of
    /// `(b^2 m^2 - 3) e^2 - 6 e + (b^2 m - 3) = 0`.
    pub fn epsilon_for_bound(m: usize, b: f64) -> Option<f64> {
        let m = m as f64;
        let qa = b * b * m * m - 3.0;
        let qc = b * b * m - 3.0;
        if !(b > 0.0) || m < 1.0 {
            return None;
        }
        if qc.abs() <= 1e-12 {
            return Some(0.0);
        }
        if qc > 0.0 || qa <= 0.0 {
            // B above the iid value sqrt(3/m), or at or below the
            // large-shock limit sqrt(3)/m
            return None;
        }
        let disc = 36.0 - 4.0 * qa * qc;
        Some((6.0 + disc.sqrt()) / (2.0 * qa))
    }

    /// `c`, with `c^2 = (m + m^2 (epsilon^2 + delta^2)) / 3`.
    pub fn scale(&self) -> f64 {
        let m = self.m as f64;
        ((m + m * m * (self.epsilon.powi(2) + self.delta.powi(2))) / 3.0).sqrt()
    }

    /// `sup |xi| = (1 + epsilon + delta) / c`.
    pub fn bound(&self) -> f64 {
        (1.0 + self.epsilon + self.delta) / self.scale()
    }

    /// `sum_{i != k} Cov(xi_{i,j}, xi_{k,j})` for one coordinate.
    pub fn within_offdiag(&self) -> f64 {
        let m = self.m as f64;
        m * (m - 1.0) * (self.epsilon.powi(2) + self.delta.powi(2)) / (3.0 * self.scale().powi(2))
    }

    /// `Cov(S_j, S_l)` for `j != l`.
    pub fn cross_cov(&self) -> f64 {
        let m = self.m as f64;
        m * m * self.delta.powi(2) / (3.0 * self.scale().powi(2))
    }

    pub fn sigma(&self) -> CovMatrix<f64> {
        let rows: Vec<Vec<f64>> = (0..self.p)
            .map(|j| (0..self.p).map(|l| if j == l { 1.0 } else { self.cross_cov() }).collect())
            .collect();
        CovMatrix::from_rows(&rows).expect("equicorrelated matrix with unit diagonal")
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        let c = self.scale();
        let v0: f64 = rng.random_range(-1.0..=1.0);
        (0..self.p)
            .map(|_| {
                let vj: f64 = rng.random_range(-1.0..=1.0);
                let shock = self.epsilon * vj + self.delta * v0;
                let mut s = 0.0;
                for _ in 0..self.m {
                    let u: f64 = rng.random_range(-1.0..=1.0);
                    s += (u + shock) / c;
                }
                s
            })
            .collect()
    }

    /// `replicates` draws of `(S_1, ..., S_p)`.
    pub fn sample(&self, replicates: usize, seed: u64) -> Result<SampleMatrix, StatsError> {
        let rows: Vec<Vec<f64>> = (0..replicates)
            .into_par_iter()
            .map(|r| self.draw(&mut rng::stream(seed, keys::SYNTHETIC, r as u64)))
            .collect();
        let data: Vec<f64> = rows.into_iter().flatten().collect();
        Ok(SampleMatrix::new(data, self.p, (0..self.p).map(|j| format!("S_{j}")).collect(), "synthetic")?
            .with_seed(seed)
            .with_params(json!({ "design": self, "replicates": replicates })))
    }
}
