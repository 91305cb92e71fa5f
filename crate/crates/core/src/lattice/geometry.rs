use serde::{Deserialize, Serialize};

use super::{LatticeError, Result};

/// The simulation box `[-L/2, L/2)^d`, stored row-major with the last axis
/// fastest.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimBox {
    pub dim: usize,
    pub side: usize,
}

impl SimBox {
    pub fn new(dim: usize, side: usize) -> Result<Self> {
        if dim == 0 || side == 0 {
            return Err(LatticeError::Geometry(format!("empty box: d = {dim}, L = {side}")));
        }
        let sites = (side as u128).checked_pow(dim as u32);
        if sites.is_none_or(|s| s > 1 << 31) {
            return Err(LatticeError::Geometry(format!("box {side}^{dim} is too large")));
        }
        Ok(SimBox { dim, side })
    }

    pub fn sites(&self) -> usize {
        self.side.pow(self.dim as u32)
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.side.pow((self.dim - 1 - axis) as u32)
    }

    /// Offset between centred coordinates and storage coordinates.
    pub fn origin(&self) -> i64 {
        (self.side / 2) as i64
    }

    pub fn coord(&self, idx: usize, axis: usize) -> usize {
        (idx / self.stride(axis)) % self.side
    }

    pub fn index(&self, coords: &[usize]) -> usize {
        coords.iter().fold(0, |acc, &c| acc * self.side + c)
    }

    /// Distance from the site to the nearest face of the box, in sites
    /// (0 for a site on the boundary layer).
    pub fn depth(&self, idx: usize) -> usize {
        (0..self.dim)
            .map(|a| {
                let c = self.coord(idx, a);
                c.min(self.side - 1 - c)
            })
            .min()
            .unwrap_or(0)
    }

    /// Storage index of every site of the block `B_k^n` for the centred
    /// anchor `k`, after checking it keeps `margin` sites clear of the box
    /// boundary.
    pub fn block_sites(&self, anchor: &[i64], n: usize, margin: usize) -> Result<Vec<usize>> {
        if anchor.len() != self.dim {
            return Err(LatticeError::Geometry(format!(
                "anchor {anchor:?} has {} coordinates, box has {}",
                anchor.len(),
                self.dim
            )));
        }
        let mut lo = Vec::with_capacity(self.dim);
        for &k in anchor {
            let s = k + self.origin();
            if s < margin as i64 || s + (n + margin) as i64 > self.side as i64 {
                return Err(LatticeError::Geometry(format!(
                    "block at {anchor:?} of side {n} does not fit in a box of side {} with margin {margin}",
                    self.side
                )));
            }
            lo.push(s as usize);
        }
        let mut out = Vec::with_capacity(n.pow(self.dim as u32));
        let mut c = vec![0usize; self.dim];
        loop {
            let coords: Vec<usize> = c.iter().zip(&lo).map(|(a, b)| a + b).collect();
            out.push(self.index(&coords));
            let mut ax = self.dim;
            loop {
                if ax == 0 {
                    return Ok(out);
                }
                ax -= 1;
                c[ax] += 1;
                if c[ax] < n {
                    break;
                }
                c[ax] = 0;
            }
        }
    }
}

/// `p` block anchors (centred coordinates) of common side `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockObservable {
    pub anchors: Vec<Vec<i64>>,
    pub n: usize,
}

impl BlockObservable {
    /// One block centred on the origin.
    pub fn centred(dim: usize, n: usize) -> Self {
        BlockObservable {
            anchors: vec![vec![-((n / 2) as i64); dim]],
            n,
        }
    }

    /// `p` blocks in a row along the first axis, adjacent blocks overlapping
    /// in `alpha * n` layers, centred on the origin as a group.
    pub fn row(dim: usize, n: usize, p: usize, alpha: f64) -> Self {
        let step = n as i64 - (alpha * n as f64).round() as i64;
        let span = step * (p as i64 - 1) + n as i64;
        let start = -span / 2;
        let anchors = (0..p as i64)
            .map(|q| {
                let mut a = vec![-((n / 2) as i64); dim];
                a[0] = start + q * step;
                a
            })
            .collect();
        BlockObservable { anchors, n }
    }

    pub fn p(&self) -> usize {
        self.anchors.len()
    }
}

/// Checks `min_{q != s} |k_q - k_s|_inf >= (1 - alpha) n`.
pub fn check_separation(obs: &BlockObservable, alpha: f64) -> Result<()> {
    let need = (1.0 - alpha) * obs.n as f64;
    for (q, a) in obs.anchors.iter().enumerate() {
        for b in &obs.anchors[q + 1..] {
            let sep = a.iter().zip(b).map(|(x, y)| (x - y).abs()).max().unwrap_or(0);
            if (sep as f64) < need - 1e-9 {
                return Err(LatticeError::Geometry(format!(
                    "anchors {a:?} and {b:?} are {sep} apart, need at least (1 - alpha) n = {need}"
                )));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_enumeration_and_margin() {
        let b = SimBox::new(2, 10).unwrap();
        let s = b.block_sites(&[-1, -1], 3, 2).unwrap();
        assert_eq!(s.len(), 9);
        assert_eq!(s[0], b.index(&[4, 4]));
        assert_eq!(s[8], b.index(&[6, 6]));
        assert!(b.block_sites(&[-5, 0], 3, 1).is_err());
        assert!(b.block_sites(&[2, 0], 3, 1).is_err());
        assert!(b.block_sites(&[2, 0], 3, 0).is_ok());
        assert_eq!(b.depth(b.index(&[0, 5])), 0);
        assert_eq!(b.depth(b.index(&[4, 5])), 4);
    }

    #[test]
    fn separated_rows() {
        let obs = BlockObservable::row(2, 8, 3, 0.25);
        assert_eq!(obs.anchors[1][0] - obs.anchors[0][0], 6);
        check_separation(&obs, 0.25).unwrap();
        assert!(check_separation(&obs, 0.1).is_err());
    }
}
