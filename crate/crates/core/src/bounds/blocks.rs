//! Block decomposition of `B^n` into `m^d` sub-blocks of side at most `l`,
//! the two covariance lemmas built on it, and the block-size optimum.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::{decay_constants, dimension_factor, domain, require_positive, CovDecayParams, Result};
use crate::Scalar;

/// `n = (m-1) l + r` with `1 <= r <= l`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockSpec {
    pub n: u64,
    pub l: u64,
    pub m: u64,
    pub r: u64,
    pub dim: u32,
}

pub fn block_decompose(n: u64, l: u64, dim: u32) -> Result<BlockSpec> {
    if n == 0 {
        return domain("n", 0.0, "must be at least 1");
    }
    if l == 0 || l > n {
        return domain("l", l as f64, "must lie in [1, n]");
    }
    if dim == 0 {
        return domain("dim", 0.0, "must be at least 1");
    }
    let m1 = (n - 1) / l;
    Ok(BlockSpec {
        n,
        l,
        m: m1 + 1,
        r: n - m1 * l,
        dim,
    })
}

impl BlockSpec {
    /// Site range (0-based, relative to the block anchor) of sub-block `i`
    /// along one axis, `i in 0..m`.
    pub fn axis_range(&self, i: u64) -> Range<u64> {
        let start = i * self.l;
        let len = if i + 1 == self.m { self.r } else { self.l };
        start..start + len
    }

    pub fn block_count(&self) -> u64 {
        self.m.pow(self.dim)
    }

    /// All `m^d` sub-blocks as per-axis coordinate ranges.
    pub fn blocks(&self) -> impl Iterator<Item = Vec<Range<u64>>> + '_ {
        (0..self.block_count()).map(move |mut idx| {
            (0..self.dim)
                .map(|_| {
                    let i = idx % self.m;
                    idx /= self.m;
                    self.axis_range(i)
                })
                .collect()
        })
    }
}

/// `kappa0 gamma n^d / l`, a bound on `sum_{i != j} E[xi_i xi_j]` over the
/// sub-blocks of `B^n`.
pub fn lemma_cov_sum_bound<S: Scalar>(params: &CovDecayParams<S>, n: u64, l: u64) -> Result<S> {
    block_decompose(n, l, params.dim)?;
    let c = decay_constants(params)?;
    let nn = S::from_u64(n).unwrap();
    Ok(params.kappa0 * c.gamma * nn.powi(params.dim as i32) / S::from_u64(l).unwrap())
}

/// `kappa0 upsilon^d b n^{d-1}`, a bound on `Cov(S_{k1}^n, S_{k2}^n)` when
/// `|k1 - k2|_inf >= n - b`.
pub fn lemma_cross_block_bound<S: Scalar>(params: &CovDecayParams<S>, n: u64, b: u64) -> Result<S> {
    if b == 0 || b > n {
        return domain("b", b as f64, "must lie in [1, n]");
    }
    let c = decay_constants(params)?;
    let nn = S::from_u64(n).unwrap();
    Ok(params.kappa0
        * c.upsilon.powi(params.dim as i32)
        * S::from_u64(b).unwrap()
        * nn.powi(params.dim as i32 - 1))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct BlockOptimum<S: Scalar> {
    /// Real minimiser `(b/(a d))^{1/(d+1)}` of `a l^d + b/l`.
    pub l0: S,
    /// `floor(l0)` clamped to `[1, n]`.
    pub l: u64,
    /// `a^{1/(d+1)} b^{d/(d+1)} (d^{-d/(d+1)} + 2 d^{1/(d+1)})`.
    pub guarantee: S,
    /// Whether `1 <= l0 <= n`, the range in which `guarantee` is proven.
    pub in_range: bool,
}

/// Integer block size for minimising `a l^d + b / l`.
pub fn optimize_block_size<S: Scalar>(a: S, b: S, d: u32, n: u64) -> Result<BlockOptimum<S>> {
    require_positive("a", a)?;
    require_positive("b", b)?;
    if d == 0 {
        return domain("d", 0.0, "must be at least 1");
    }
    if n == 0 {
        return domain("n", 0.0, "must be at least 1");
    }
    let ds = S::from_u32(d).unwrap();
    let one = S::one();
    let l0 = (b / (a * ds)).powf(one / (ds + one));
    let nn = S::from_u64(n).unwrap();
    let l = l0.floor().max(one).min(nn).to_u64().unwrap_or(n).clamp(1, n);
    let guarantee =
        a.powf(one / (ds + one)) * b.powf(ds / (ds + one)) * dimension_factor::<S>(d);
    Ok(BlockOptimum {
        l0,
        l,
        guarantee,
        in_range: l0 >= one && l0 <= nn,
    })
}
