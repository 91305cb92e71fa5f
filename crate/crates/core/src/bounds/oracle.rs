//! Brute-force reference implementations used to cross-check the closed
//! forms, plus a self-contained check suite.

use std::ops::Range;

use rand::Rng;

use super::{
    a_n_exponential, a_n_from_covariance, block_decompose, gershgorin_check, lemma_cov_sum_bound,
    lemma_cross_block_bound, optimize_block_size, sum_identity_u, sum_identity_v, sum_identity_w,
    CovDecayParams, CovMatrix, ExponentialCovariance,
};

pub fn sum_w_loop(n: u64, w: f64) -> f64 {
    (1..n).map(|k| (n - k) as f64 * w.powi(k as i32)).sum()
}

pub fn sum_v_loop(n: u64, v: f64) -> f64 {
    n as f64
        + (1..n)
            .map(|a| (n - a) as f64 * (v.powi(a as i32) + v.powi(-(a as i32))))
            .sum::<f64>()
}

pub fn sum_u_loop(n: u64, u: f64) -> f64 {
    n as f64 + 2.0 * (1..n).map(|b| (n - b) as f64 * u.powi(b as i32)).sum::<f64>()
}

/// Calls `f` on every site of the box given by per-axis ranges.
pub fn for_each_site(ranges: &[Range<u64>], mut f: impl FnMut(&[u64])) {
    if ranges.iter().any(|r| r.is_empty()) {
        return;
    }
    let mut site: Vec<u64> = ranges.iter().map(|r| r.start).collect();
    loop {
        f(&site);
        let mut q = 0;
        loop {
            if q == ranges.len() {
                return;
            }
            site[q] += 1;
            if site[q] < ranges[q].end {
                break;
            }
            site[q] = ranges[q].start;
            q += 1;
        }
    }
}

fn collect_sites(ranges: &[Range<u64>]) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    for_each_site(ranges, |s| out.push(s.iter().map(|&x| x as i64).collect()));
    out
}

fn exp_cov(p: &CovDecayParams<f64>, a: &[i64], b: &[i64]) -> f64 {
    let l1: i64 = a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum();
    p.kappa0 * (-p.lambda * l1 as f64).exp()
}

/// `sum_{i != j} Cov(xi_i, xi_j)` over the sub-blocks of `B^n` with side
/// `l`, by enumerating every pair of sites, under `R(k) = kappa0 e^{-lambda|k|_1}`.
pub fn exact_block_cov_sum(p: &CovDecayParams<f64>, n: u64, l: u64) -> f64 {
    let spec = block_decompose(n, l, p.dim).expect("valid block");
    let blocks: Vec<Vec<Vec<i64>>> = spec.blocks().map(|b| collect_sites(&b)).collect();
    let mut total = 0.0;
    for (i, bi) in blocks.iter().enumerate() {
        for (j, bj) in blocks.iter().enumerate() {
            if i == j {
                continue;
            }
            for s in bi {
                for t in bj {
                    total += exp_cov(p, s, t);
                }
            }
        }
    }
    total
}

/// `Cov(S_0^n, S_offset^n)` by enumerating all site pairs.
pub fn exact_cross_block_cov(p: &CovDecayParams<f64>, n: u64, offset: &[i64]) -> f64 {
    let ranges: Vec<Range<u64>> = (0..p.dim).map(|_| 0..n).collect();
    let sites = collect_sites(&ranges);
    let mut total = 0.0;
    for s in &sites {
        for t in &sites {
            let shifted: Vec<i64> = t.iter().zip(offset).map(|(x, o)| x + o).collect();
            total += exp_cov(p, s, &shifted);
        }
    }
    total
}

pub fn integer_block_min(a: f64, b: f64, d: u32, n: u64) -> f64 {
    (1..=n)
        .map(|l| a * (l as f64).powi(d as i32) + b / l as f64)
        .fold(f64::INFINITY, f64::min)
}

/// `h(q) = sum_{a=-n+1}^{n-1} (n-|a|) e^{-lambda |q+a|}`.
pub fn block_convolution(n: u64, lambda: f64, q: i64) -> f64 {
    let n = n as i64;
    (-(n - 1)..n)
        .map(|a| (n - a.abs()) as f64 * (-lambda * (q + a).abs() as f64).exp())
        .sum()
}

/// `sum_{i != j} int_{I_i} int_{I_j} kappa e^{-gamma|u-v|}` for `m` equal
/// segments of `[0, t]`, summed pair by pair.
pub fn exponential_segment_cov_sum(kappa: f64, gamma: f64, t: f64, m: u64) -> f64 {
    let h = t / m as f64;
    let one_pair = |gap: u64| {
        // int_0^h int_{gap h}^{gap h + h} e^{-gamma(v-u)} dv du
        let e = (-gamma * h).exp_m1();
        kappa * e * e * (-gamma * h * (gap as f64 - 1.0)).exp() / (gamma * gamma)
    };
    let mut total = 0.0;
    for i in 0..m {
        for j in 0..m {
            if i != j {
                total += one_pair(i.abs_diff(j));
            }
        }
    }
    total
}

/// One line of the check suite.
#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub cases: usize,
    pub failures: usize,
    pub worst: f64,
}

impl CheckOutcome {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Draws a ratio in `[0.05, 0.95] ∪ [1.05, 1.6]`, keeping `n <= 200` powers
/// well inside double range and away from the removable singularity at 1.
fn ratio(rng: &mut impl Rng) -> f64 {
    if rng.random_bool(0.5) {
        rng.random_range(0.05..0.95)
    } else {
        rng.random_range(1.05..1.6)
    }
}

/// Closed forms against brute force: summation identities, `A_n`, the two
/// covariance lemmas, the block-size optimum and the dominance bound.
pub fn run_suite(seed: u64) -> Vec<CheckOutcome> {
    let mut rng = crate::rng::stream(seed, 0x0c1e_0001, 0);
    let mut out = Vec::new();

    for (name, f, g) in [
        ("sum_identity_w", sum_identity_w::<f64> as fn(u64, f64) -> _, sum_w_loop as fn(u64, f64) -> f64),
        ("sum_identity_v", sum_identity_v::<f64>, sum_v_loop),
        ("sum_identity_u", sum_identity_u::<f64>, sum_u_loop),
    ] {
        let mut c = CheckOutcome { name, cases: 0, failures: 0, worst: 0.0 };
        for _ in 0..200 {
            let n = rng.random_range(2..=200u64);
            let x = ratio(&mut rng);
            let e = rel_err(f(n, x).expect("valid identity input"), g(n, x));
            c.cases += 1;
            c.worst = c.worst.max(e);
            if e > 1e-12 {
                c.failures += 1;
            }
        }
        out.push(c);
    }

    let mut c = CheckOutcome { name: "a_n_direct_vs_closed", cases: 0, failures: 0, worst: 0.0 };
    for d in 1..=3u32 {
        for _ in 0..3 {
            let p = CovDecayParams::new(rng.random_range(0.2..2.0), rng.random_range(0.1..2.0), d)
                .expect("valid params");
            let sep = ExponentialCovariance(p);
            let direct = |k: &[i64]| super::CovarianceFn::cov(&sep, k);
            for n in [1u64, 2, 5, 11, 20] {
                let e = rel_err(a_n_from_covariance(&direct, n, d), a_n_exponential(&p, n).unwrap());
                c.cases += 1;
                c.worst = c.worst.max(e);
                if e > 1e-10 {
                    c.failures += 1;
                }
            }
        }
    }
    out.push(c);

    let mut c = CheckOutcome { name: "block_cov_sum_lemma", cases: 0, failures: 0, worst: 0.0 };
    for &(k0, l) in &[(1.0, 1.0), (0.5, 0.2), (2.0, 3.0)] {
        let p = CovDecayParams::new(k0, l, 1).unwrap();
        for n in 2..=12u64 {
            for b in 1..=n {
                let exact = exact_block_cov_sum(&p, n, b);
                let bound = lemma_cov_sum_bound(&p, n, b).unwrap();
                c.cases += 1;
                c.worst = c.worst.max(exact / bound);
                if exact > bound * (1.0 + 1e-9) {
                    c.failures += 1;
                }
            }
        }
    }
    out.push(c);

    let mut c = CheckOutcome { name: "cross_block_lemma", cases: 0, failures: 0, worst: 0.0 };
    for &(k0, l) in &[(1.0, 1.0), (0.5, 0.3)] {
        for d in 1..=2u32 {
            let p = CovDecayParams::new(k0, l, d).unwrap();
            for n in 2..=6u64 {
                for b in 1..=n {
                    let mut offset = vec![0i64; d as usize];
                    offset[d as usize - 1] = (n - b) as i64;
                    let exact = exact_cross_block_cov(&p, n, &offset);
                    let bound = lemma_cross_block_bound(&p, n, b).unwrap();
                    c.cases += 1;
                    c.worst = c.worst.max(exact / bound);
                    if exact > bound * (1.0 + 1e-9) {
                        c.failures += 1;
                    }
                }
            }
        }
    }
    out.push(c);

    let mut c = CheckOutcome { name: "block_size_optimum", cases: 0, failures: 0, worst: 0.0 };
    while c.cases < 1000 {
        let a = 10f64.powf(rng.random_range(-3.0..1.0));
        let b = 10f64.powf(rng.random_range(-1.0..3.0));
        let d = rng.random_range(1..=4u32);
        let n = 200;
        let o = optimize_block_size(a, b, d, n).unwrap();
        if !o.in_range {
            continue;
        }
        let min = integer_block_min(a, b, d, n);
        c.cases += 1;
        c.worst = c.worst.max(min / o.guarantee);
        if min > o.guarantee {
            c.failures += 1;
        }
    }
    out.push(c);

    let mut c = CheckOutcome { name: "dominance_inverse_bound", cases: 0, failures: 0, worst: 0.0 };
    while c.cases < 500 {
        let m = random_dominant(&mut rng, 8);
        let chk = gershgorin_check(&m).unwrap();
        let Some(bound) = chk.inv_inf_bound else { continue };
        let inv = m.to_nalgebra().try_inverse().expect("dominant matrices are invertible");
        let actual = inv.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
        c.cases += 1;
        c.worst = c.worst.max(actual / bound);
        if actual > bound * (1.0 + 1e-12) {
            c.failures += 1;
        }
    }
    out.push(c);
    out
}

/// Random symmetric, strictly diagonally dominant matrix of size `1..=max_p`.
pub fn random_dominant(rng: &mut impl Rng, max_p: usize) -> CovMatrix<f64> {
    let p = rng.random_range(1..=max_p);
    let mut rows = vec![vec![0.0f64; p]; p];
    for i in 0..p {
        for j in (i + 1)..p {
            let x = rng.random_range(-1.0..1.0);
            rows[i][j] = x;
            rows[j][i] = x;
        }
    }
    for i in 0..p {
        let off: f64 = rows[i].iter().map(|x| x.abs()).sum();
        rows[i][i] = off + rng.random_range(0.01..2.0);
    }
    CovMatrix::from_rows(&rows).expect("symmetric by construction")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes() {
        for c in run_suite(1) {
            assert!(c.passed(), "{c:?}");
        }
    }

    #[test]
    fn segment_oracle_matches_identity_form() {
        // the lemma's proof sums the same pairs through the w-identity
        let (k, g, t, m) = (0.7, 0.4, 12.0, 9u64);
        let w = (-g * t / m as f64).exp();
        let pref = 2.0 * k / (g * g) * (2.0 * (g * t / (2.0 * m as f64)).sinh()).powi(2);
        let via_identity = pref * sum_identity_w(m, w).unwrap();
        assert!((exponential_segment_cov_sum(k, g, t, m) - via_identity).abs() < 1e-12);
    }
}
