use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendTest {
    pub s: i64,
    pub z: f64,
    /// True when `|z| > 1.96`, a monotone trend at the 5% level.
    pub trend: bool,
}

/// Mann-Kendall test on a series: `S = sum_{i<j} sign(x_j - x_i)` against
/// its no-trend variance `n(n-1)(2n+5)/18` (ties ignored).
pub fn mann_kendall(x: &[f64]) -> TrendTest {
    let n = x.len();
    let mut s = 0i64;
    for i in 0..n {
        for j in i + 1..n {
            s += match x[j].partial_cmp(&x[i]) {
                Some(std::cmp::Ordering::Greater) => 1,
                Some(std::cmp::Ordering::Less) => -1,
                _ => 0,
            };
        }
    }
    let nf = n as f64;
    let var = nf * (nf - 1.0) * (2.0 * nf + 5.0) / 18.0;
    let z = if var <= 0.0 {
        0.0
    } else if s > 0 {
        (s as f64 - 1.0) / var.sqrt()
    } else if s < 0 {
        (s as f64 + 1.0) / var.sqrt()
    } else {
        0.0
    };
    TrendTest { s, z, trend: z.abs() > 1.96 }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn detects_ramps_not_noise() {
        let ramp: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let t = mann_kendall(&ramp);
        assert_eq!(t.s, 50 * 49 / 2);
        assert!(t.trend);
        let alt: Vec<f64> = (0..50).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        assert!(!mann_kendall(&alt).trend);
        assert!(!mann_kendall(&[1.0]).trend);
    }
}
