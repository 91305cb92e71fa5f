use serde::{Deserialize, Serialize};

use super::{Result, SampleMatrix, StatsError};
use crate::bounds::CovMatrix;

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample mean and its standard error.
pub fn mean_with_se(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = mean(x);
    if x.len() < 2 {
        return (m, f64::INFINITY);
    }
    let var = x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

/// Unbiased sample covariance with a normal-theory standard error taken
/// from the spread of the centred products.
pub fn cov_with_se(x: &[f64], y: &[f64]) -> (f64, f64) {
    assert_eq!(x.len(), y.len(), "covariance of unequal-length samples");
    let n = x.len();
    let (mx, my) = (mean(x), mean(y));
    let prods: Vec<f64> = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).collect();
    let nf = n as f64;
    let c = prods.iter().sum::<f64>() / (nf - 1.0);
    let mp = prods.iter().sum::<f64>() / nf;
    let vp = prods.iter().map(|p| (p - mp) * (p - mp)).sum::<f64>() / (nf - 1.0);
    (c, (vp / nf).sqrt())
}

/// Unbiased (`N-1`) covariance of the columns of `samples`, computed in Gram
/// form so the result is positive semidefinite.
pub fn empirical_cov_matrix(samples: &SampleMatrix) -> Result<CovMatrix<f64>> {
    let (n, p) = (samples.rows(), samples.cols());
    if n <= p {
        return Err(StatsError::TooFew { need: p + 1, got: n });
    }
    let means: Vec<f64> = (0..p).map(|j| mean(&samples.column(j))).collect();
    let mut acc = vec![vec![0.0; p]; p];
    for i in 0..n {
        let row = samples.row(i);
        for a in 0..p {
            let da = row[a] - means[a];
            for b in a..p {
                acc[a][b] += da * (row[b] - means[b]);
            }
        }
    }
    for a in 0..p {
        for b in a..p {
            acc[a][b] /= (n - 1) as f64;
            acc[b][a] = acc[a][b];
        }
    }
    Ok(CovMatrix::from_rows(&acc)?)
}

/// `sum_{i != j} Cov(X_i, X_j)` over the columns of `samples`, with a
/// standard error. Per row, `(sum_i (x_i - mean_i))^2 - sum_i (x_i - mean_i)^2`
/// is the cross-product total; its mean (scaled by `N/(N-1)`) is unbiased.
pub fn offdiag_cov_sum(samples: &SampleMatrix) -> Result<(f64, f64)> {
    let (n, p) = (samples.rows(), samples.cols());
    if n < 2 {
        return Err(StatsError::TooFew { need: 2, got: n });
    }
    let means: Vec<f64> = (0..p).map(|j| mean(&samples.column(j))).collect();
    let scale = n as f64 / (n - 1) as f64;
    let q: Vec<f64> = (0..n)
        .map(|i| {
            let row = samples.row(i);
            let (mut tot, mut sq) = (0.0, 0.0);
            for (x, m) in row.iter().zip(&means) {
                tot += x - m;
                sq += (x - m) * (x - m);
            }
            scale * (tot * tot - sq)
        })
        .collect();
    Ok(mean_with_se(&q))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum StandardizeMode {
    /// Subtract a known mean, divide by a known scale (`sqrt(n^d A_n)`).
    Population { mean: f64, scale: f64 },
    /// Replicate mean and standard deviation.
    Empirical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardized {
    pub values: Vec<f64>,
    pub mode: StandardizeMode,
    pub mean: f64,
    pub scale: f64,
}

pub fn standardize(x: &[f64], mode: StandardizeMode) -> Result<Standardized> {
    if x.len() < 2 {
        return Err(StatsError::TooFew { need: 2, got: x.len() });
    }
    let (m, s) = match mode {
        StandardizeMode::Population { mean, scale } => {
            if !(scale > 0.0) {
                return Err(StatsError::ZeroVariance);
            }
            (mean, scale)
        }
        StandardizeMode::Empirical => {
            let m = mean(x);
            let var = x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() - 1) as f64;
            if !(var > 0.0) {
                return Err(StatsError::ZeroVariance);
            }
            (m, var.sqrt())
        }
    };
    Ok(Standardized {
        values: x.iter().map(|v| (v - m) / s).collect(),
        mode,
        mean: m,
        scale: s,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceRate {
    pub value: f64,
    pub se: f64,
}

/// `Var(x) / t` with a jackknife standard error.
pub fn variance_rate(x: &[f64], t: f64) -> Result<VarianceRate> {
    let n = x.len();
    if n < 30 {
        return Err(StatsError::TooFew { need: 30, got: n });
    }
    let nf = n as f64;
    let m = mean(x);
    let ss: f64 = x.iter().map(|v| (v - m) * (v - m)).sum();
    let var = ss / (nf - 1.0);
    let loo: Vec<f64> = x
        .iter()
        .map(|v| (ss - (v - m) * (v - m) * nf / (nf - 1.0)) / (nf - 2.0))
        .collect();
    let lm = mean(&loo);
    let jk = ((nf - 1.0) / nf * loo.iter().map(|l| (l - lm) * (l - lm)).sum::<f64>()).sqrt();
    Ok(VarianceRate {
        value: var / t,
        se: jk / t,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand_distr::{Distribution, Normal, StandardNormal};

    #[test]
    fn standardize_modes() {
        let x = [1.0, 2.0, 4.0, 7.0];
        let s = standardize(&x, StandardizeMode::Empirical).unwrap();
        let again = standardize(&s.values, StandardizeMode::Empirical).unwrap();
        for (a, b) in s.values.iter().zip(&again.values) {
            assert!((a - b).abs() < 1e-12);
        }
        let y: Vec<f64> = x.iter().map(|v| -3.0 * v + 2.0).collect();
        let sy = standardize(&y, StandardizeMode::Empirical).unwrap();
        for (a, b) in s.values.iter().zip(&sy.values) {
            assert!((a + b).abs() < 1e-12);
        }
        let z: Vec<f64> = x.iter().map(|v| 0.5 * v + 9.0).collect();
        let sz = standardize(&z, StandardizeMode::Empirical).unwrap();
        for (a, b) in s.values.iter().zip(&sz.values) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(standardize(&[3.0; 5], StandardizeMode::Empirical).is_err());
        let p = standardize(&x, StandardizeMode::Population { mean: 1.0, scale: 2.0 }).unwrap();
        assert_eq!(p.values[2], 1.5);
    }

    #[test]
    fn variance_rate_cases() {
        assert_eq!(variance_rate(&[2.0; 40], 3.0).unwrap().value, 0.0);
        assert!(variance_rate(&[2.0; 29], 3.0).is_err());
        let t = 5.0f64;
        let mut r = rng::stream(9, 0, 0);
        let d = Normal::new(0.0, t.sqrt()).unwrap();
        let x: Vec<f64> = (0..20_000).map(|_| d.sample(&mut r)).collect();
        let v = variance_rate(&x, t).unwrap();
        assert!((v.value - 1.0).abs() < 4.0 * v.se, "{v:?}");
        // jackknife SE of a normal variance is about sqrt(2/N)
        assert!((v.se - (2.0f64 / 20_000.0).sqrt()).abs() < 0.003);
    }

    #[test]
    fn offdiag_sum_matches_matrix() {
        let mut r = rng::stream(11, 0, 0);
        let n = 5000;
        let mut data = Vec::with_capacity(3 * n);
        for _ in 0..n {
            let c: f64 = StandardNormal.sample(&mut r);
            for _ in 0..3 {
                let e: f64 = StandardNormal.sample(&mut r);
                data.push(c + e);
            }
        }
        let m = SampleMatrix::new(data, 3, vec!["a".into(), "b".into(), "c".into()], "t").unwrap();
        let (s, se) = offdiag_cov_sum(&m).unwrap();
        let c = empirical_cov_matrix(&m).unwrap();
        assert!((s - c.offdiag_sum()).abs() < 1e-9 * s.abs().max(1.0));
        assert!((s - 6.0).abs() < 4.0 * se, "{s} {se}");
    }

    #[test]
    fn cov_matrix_recovers_known_sigma() {
        // (x, y) = (a, 0.6 a + 0.8 b): unit variances, covariance 0.6
        let mut r = rng::stream(10, 0, 0);
        let n = 20_000;
        let mut data = Vec::with_capacity(2 * n);
        for _ in 0..n {
            let a: f64 = StandardNormal.sample(&mut r);
            let b: f64 = StandardNormal.sample(&mut r);
            data.push(a);
            data.push(0.6 * a + 0.8 * b);
        }
        let m = SampleMatrix::new(data, 2, vec!["x".into(), "y".into()], "test").unwrap();
        let c = empirical_cov_matrix(&m).unwrap();
        let (x, y) = (m.column(0), m.column(1));
        let (cxy, se) = cov_with_se(&x, &y);
        assert!((c.get(0, 1) - cxy).abs() < 1e-12);
        assert!((cxy - 0.6).abs() < 4.0 * se);
        let (vx, sex) = cov_with_se(&x, &x);
        assert!((vx - 1.0).abs() < 4.0 * sex);
        assert!(c.eigenvalues()[0] >= 0.0);

        let single = SampleMatrix::new(x.clone(), 1, vec!["x".into()], "test").unwrap();
        let c1 = empirical_cov_matrix(&single).unwrap();
        assert!((c1.get(0, 0) - vx).abs() < 1e-12);
        let tiny = SampleMatrix::new(vec![1.0, 2.0, 3.0, 4.0], 2, vec!["a".into(), "b".into()], "t").unwrap();
        assert!(empirical_cov_matrix(&tiny).is_err());
    }
}
