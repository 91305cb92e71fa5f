use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::{BoundsError, Result};
use crate::Scalar;

/// Eigenvalues at or below this fraction of the largest eigenvalue are
/// treated as zero.
pub const PD_TOLERANCE: f64 = 1e-10;

/// Symmetric `p x p` covariance matrix, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct CovMatrix<S: Scalar> {
    p: usize,
    data: Vec<S>,
}

impl<S: Scalar> CovMatrix<S> {
    /// Builds a matrix from rows, rejecting non-square or asymmetric input.
    /// Entries may differ from their transpose by `1e-12` relative to the
    /// largest entry.
    pub fn from_rows(rows: &[Vec<S>]) -> Result<Self> {
        let p = rows.len();
        let mut data = Vec::with_capacity(p * p);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != p {
                return Err(BoundsError::Dimension(format!(
                    "row {i} has {} entries, expected {p}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        let m = CovMatrix { p, data };
        m.check_symmetric()?;
        Ok(m)
    }

    pub fn identity(p: usize) -> Self {
        let mut data = vec![S::zero(); p * p];
        for i in 0..p {
            data[i * p + i] = S::one();
        }
        CovMatrix { p, data }
    }

    fn check_symmetric(&self) -> Result<()> {
        let scale = self
            .data
            .iter()
            .fold(0.0f64, |m, x| m.max(x.as_f64().abs()));
        for i in 0..self.p {
            for j in (i + 1)..self.p {
                let diff = (self.get(i, j) - self.get(j, i)).as_f64().abs();
                if !(diff <= 1e-12 * scale) {
                    return Err(BoundsError::Asymmetric {
                        row: i,
                        col: j,
                        diff,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.p
    }

    pub fn get(&self, i: usize, j: usize) -> S {
        self.data[i * self.p + j]
    }

    pub fn trace(&self) -> S {
        (0..self.p).fold(S::zero(), |acc, i| acc + self.get(i, i))
    }

    /// `sum_{j != l} Sigma_{jl}`.
    pub fn offdiag_sum(&self) -> S {
        let mut s = S::zero();
        for i in 0..self.p {
            for j in 0..self.p {
                if i != j {
                    s = s + self.get(i, j);
                }
            }
        }
        s
    }

    pub fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.p, self.p, |i, j| self.get(i, j).as_f64())
    }

    pub fn from_nalgebra(m: &DMatrix<f64>) -> Result<Self> {
        let rows: Vec<Vec<S>> = (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| S::lit(m[(i, j)])).collect())
            .collect();
        Self::from_rows(&rows)
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.to_nalgebra())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    /// `Sigma^{-1/2}` through the symmetric eigendecomposition.
    pub fn inv_sqrt(&self) -> Result<DMatrix<f64>> {
        let eig = SymmetricEigen::new(self.to_nalgebra());
        let max = eig.eigenvalues.iter().fold(0.0f64, |m, &x| m.max(x));
        let tol = PD_TOLERANCE * max;
        if let Some(&bad) = eig
            .eigenvalues
            .iter()
            .filter(|&&x| !(x > tol))
            .min_by(|a, b| a.total_cmp(b))
        {
            return Err(BoundsError::NotPositiveDefinite {
                eigenvalue: bad,
                tolerance: tol,
            });
        }
        let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|x| x.sqrt().recip()));
        Ok(&eig.eigenvectors * d * eig.eigenvectors.transpose())
    }
}

/// `|Sigma^{-1/2}|_inf`, the largest absolute entry of the inverse square root.
pub fn inv_sqrt_max_abs<S: Scalar>(sigma: &CovMatrix<S>) -> Result<S> {
    let m = sigma.inv_sqrt()?;
    Ok(S::lit(m.iter().fold(0.0f64, |acc, x| acc.max(x.abs()))))
}
