//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion.
//!
//! Simulation criteria use the shipped configs at their full sizes.
//! `STEINPA_ACCEPTANCE=quick` cuts the Ising, percolation and contact
//! replicate counts by ten.

use std::path::PathBuf;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use steinpa_core::bounds::oracle::{random_dominant, run_suite, CheckOutcome};
use steinpa_core::bounds::{
    a_n_exponential, field_multivariate_bound, gershgorin_check, stein_bound_univariate, CovDecayParams,
};
use steinpa_core::harness::{self, CommonShock, Estimate, ExperimentRun, GridRecord};
use steinpa_core::particles::{direct_covariance, dual_covariance};
use steinpa_core::rng;
use steinpa_core::stats::{d1_exact, d1_riemann};

/// Consecutive d1 values may rise by at most this many combined SEs, and the
/// last may exceed the first by no more than that.
const DECREASE_SLACK_SE: f64 = 2.0;
/// Agreement between two Monte Carlo routes to the same covariance.
const AGREEMENT_SE: f64 = 4.0;
const IDENTITY_REL_TOL: f64 = 1e-12;
const A_N_REL_TOL: f64 = 1e-10;
const A_N_LIMIT_GAP: f64 = 5.0;
const POINT_MASS_TOL: f64 = 1e-9;
const RIEMANN_TOL: f64 = 1e-4;
const ISING_RATE_REL_TOL: f64 = 0.10;
const FORMULA_REL_TOL: f64 = 1e-12;

/// Criteria that cannot be met on this implementation, with the reason.
/// They still run and print FAIL; they do not fail the test.
const KNOWN_UNATTAINABLE: &[(u32, &str)] = &[];

struct Line {
    id: u32,
    title: &'static str,
    passed: bool,
    detail: String,
    secs: f64,
    limit_s: f64,
}

fn full_scale() -> bool {
    std::env::var("STEINPA_ACCEPTANCE").map_or(true, |v| v != "quick")
}

fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn run_config(name: &str, quick: bool) -> ExperimentRun {
    let (mut cfg, hash) = harness::load_config(&config_path(name)).expect("shipped config parses");
    if quick {
        cfg = cfg.quick();
    }
    harness::run(&cfg, &hash, quick).expect("simulation runs")
}

fn combined(a: &Estimate, b: &Estimate) -> f64 {
    (a.se * a.se + b.se * b.se).sqrt()
}

/// d1 falls along the grid up to [`DECREASE_SLACK_SE`] of noise.
fn decreasing(recs: &[GridRecord]) -> (bool, String) {
    let d: Vec<Estimate> = recs.iter().map(|r| Estimate { value: r.d1.value, se: r.d1.se }).collect();
    let steps = d.windows(2).all(|w| w[1].value <= w[0].value + DECREASE_SLACK_SE * combined(&w[0], &w[1]));
    let (first, last) = (&d[0], &d[d.len() - 1]);
    let ends = last.value <= first.value + DECREASE_SLACK_SE * combined(first, last);
    let shown: Vec<String> = d.iter().map(|e| format!("{:.4}±{:.4}", e.value, e.se)).collect();
    (steps && ends, format!("d1 [{}]", shown.join(", ")))
}

/// Every applicable bound dominates d1 + 4 SE.
fn dominated(recs: &[GridRecord]) -> (bool, String) {
    let mut ok = true;
    let mut parts = Vec::new();
    for r in recs {
        match (&r.bound, r.dominated) {
            (Some(b), Some(dom)) => {
                ok &= dom;
                parts.push(format!("{}: {:.3} vs {:.4}", r.key, b.value, r.d1.value + 4.0 * r.d1.se));
            }
            (Some(b), None) => parts.push(format!("{}: below valid_from {:.3}", r.key, b.valid_from)),
            (None, _) => {
                parts.push(format!("{}: no bound ({})", r.key, r.bound_error.clone().unwrap_or_default()));
            }
        }
    }
    let any = recs.iter().any(|r| r.dominated.is_some());
    (ok && any, format!("bound vs d1+4SE [{}]", parts.join("; ")))
}

fn check_holds(recs: &[GridRecord], name: &str) -> (bool, String) {
    let mut ok = true;
    let mut seen = 0;
    let mut worst = f64::NEG_INFINITY;
    for r in recs {
        for c in r.checks.iter().filter(|c| c.name.starts_with(name)) {
            seen += 1;
            ok &= c.holds;
            let slack = (c.empirical - c.bound) / (c.se * c.se + c.bound_se * c.bound_se).sqrt().max(1e-300);
            worst = worst.max(slack);
        }
    }
    (ok && seen == recs.len(), format!("{name} holds at {seen}/{} (worst {worst:.2} SE)", recs.len()))
}

fn suite_line(outcomes: &[CheckOutcome], names: &[&str]) -> (bool, String) {
    let picked: Vec<&CheckOutcome> = outcomes.iter().filter(|o| names.contains(&o.name)).collect();
    assert_eq!(picked.len(), names.len(), "suite lines {names:?}");
    let ok = picked.iter().all(|o| o.passed());
    let detail = picked
        .iter()
        .map(|o| format!("{} {}/{} worst {:.2e}", o.name, o.cases - o.failures, o.cases, o.worst))
        .collect::<Vec<_>>()
        .join("; ");
    (ok, detail)
}

fn all(parts: &[(bool, String)]) -> (bool, String) {
    (parts.iter().all(|p| p.0), parts.iter().map(|p| p.1.as_str()).collect::<Vec<_>>().join(" | "))
}

fn identities() -> (bool, String) {
    let s = run_suite(1);
    let (ok, d) = suite_line(&s, &["sum_identity_w", "sum_identity_v", "sum_identity_u"]);
    let cases: usize = s.iter().filter(|o| o.name.starts_with("sum_identity")).map(|o| o.cases).sum();
    let worst = s.iter().filter(|o| o.name.starts_with("sum_identity")).map(|o| o.worst).fold(0.0, f64::max);
    (ok && cases == 600 && worst <= IDENTITY_REL_TOL, format!("{cases} cases; {d}"))
}

fn a_n_oracle() -> (bool, String) {
    let s = run_suite(2);
    let (ok1, d1) = suite_line(&s, &["a_n_direct_vs_closed"]);
    let ok1 = ok1 && s.iter().find(|o| o.name == "a_n_direct_vs_closed").unwrap().worst <= A_N_REL_TOL;
    // limit gap at n = 1000 against kappa0 coth^d(lambda / 2)
    let mut r = rng::stream(2, 0xacce_0002, 0);
    let n = 1000u64;
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for d in 1..=2u32 {
        for _ in 0..50 {
            let k0: f64 = r.random_range(0.2..2.0);
            let lam: f64 = r.random_range(1.5..3.0);
            let p = CovDecayParams::new(k0, lam, d).unwrap();
            let limit = k0 * (1.0 / (lam / 2.0).tanh()).powi(d as i32);
            let gap = (limit - a_n_exponential(&p, n).unwrap()).abs();
            worst = worst.max(gap / (k0 * A_N_LIMIT_GAP / n as f64));
            cases += 1;
        }
    }
    (ok1 && worst <= 1.0, format!("{d1}; limit gap / (5 kappa0 / n) worst {worst:.3} over {cases} cases"))
}

fn lemmas() -> (bool, String) {
    suite_line(&run_suite(3), &["block_cov_sum_lemma", "cross_block_lemma"])
}

fn block_optimum() -> (bool, String) {
    suite_line(&run_suite(4), &["block_size_optimum"])
}

fn synthetic_dominance() -> (bool, String) {
    let run = run_config("synthetic_common_shock.json", false);
    let rec = &run.report.records[0];
    // closed form of the design, computed here from scratch
    let (m, b) = (100.0f64, 0.05f64);
    let eps = (6.0 + 278f64.sqrt()) / 44.0;
    let c2 = (m + m * m * eps * eps) / 3.0;
    let b_design = (1.0 + eps) / c2.sqrt();
    let sigma_sum = m * (m - 1.0) * eps * eps / (3.0 * c2);
    let bound = 5.0 * b + (8.0 / std::f64::consts::PI).sqrt() * sigma_sum;
    let lib = stein_bound_univariate(b, sigma_sum).unwrap();
    let design = CommonShock { m: 100, p: 1, epsilon: CommonShock::epsilon_for_bound(100, b).unwrap(), delta: 0.0 };
    let got = rec.bound.as_ref().map_or(f64::NAN, |r| r.value);
    let formula_ok = (b_design - b).abs() < 1e-12
        && (lib - bound).abs() <= FORMULA_REL_TOL * bound
        && (got - bound).abs() <= FORMULA_REL_TOL * bound
        && (design.within_offdiag() - sigma_sum).abs() <= 1e-12 * sigma_sum;
    let dom = rec.d1.value + 4.0 * rec.d1.se <= bound;
    (
        formula_ok && dom && rec.replicates == 100_000,
        format!(
            "N = {}, d1 + 4SE = {:.4} <= bound {:.4} (5B = {:.2}, sum sigma = {:.4})",
            rec.replicates,
            rec.d1.value + 4.0 * rec.d1.se,
            bound,
            5.0 * b,
            sigma_sum
        ),
    )
}

fn ising_1d(quick: bool) -> (bool, String) {
    let run = run_config("ising_1d.json", quick);
    let recs = &run.report.records;
    let exact = -(0.5f64.tanh()).ln();
    let rate_ok = recs
        .iter()
        .all(|r| r.decay.as_ref().is_some_and(|d| (d.rate - exact).abs() <= ISING_RATE_REL_TOL * exact));
    let rates: Vec<String> = recs.iter().filter_map(|r| r.decay.as_ref()).map(|d| format!("{:.4}", d.rate)).collect();
    all(&[
        (rate_ok, format!("lambda fit [{}] vs {exact:.4}", rates.join(", "))),
        decreasing(recs),
        dominated(recs),
    ])
}

fn ising_2d(quick: bool) -> (bool, String) {
    let run = run_config("ising_2d.json", quick);
    let recs = &run.report.records;
    let every = recs.iter().all(|r| r.dominated == Some(true));
    let (dok, dd) = dominated(recs);
    all(&[(every && dok, dd), decreasing(recs)])
}

fn percolation_2d(quick: bool) -> (bool, String) {
    let run = run_config("percolation_2d.json", quick);
    let recs = &run.report.records;
    all(&[check_holds(recs, "density_vs_box_"), decreasing(recs)])
}

fn voter_duality() -> (bool, String) {
    let theta = 0.5;
    let triples = [(0.5, 1.0, 1, 64), (1.0, 2.5, 1, 64), (0.25, 1.0, 2, 16), (1.0, 2.0, 2, 16), (0.5, 1.5, 3, 8), (1.0, 1.5, 3, 8)];
    let reps = 20_000;
    let mut ok = true;
    let mut parts = Vec::new();
    for (i, &(u, v, d, side)) in triples.iter().enumerate() {
        let (a, sa) = dual_covariance(theta, u, v, d, reps, 100 + i as u64).unwrap();
        let (b, sb) = direct_covariance(theta, u, v, d, side, reps, 200 + i as u64).unwrap();
        let z = (a - b).abs() / (sa * sa + sb * sb).sqrt();
        ok &= z <= AGREEMENT_SE;
        parts.push(format!("({u},{v},d={d}) {a:.4}/{b:.4} z={z:.2}"));
    }
    (ok, parts.join("; "))
}

fn voter_d7() -> (bool, String) {
    let run = run_config("voter_d7.json", false);
    let recs = &run.report.records;
    let flagged = recs.iter().all(|r| r.approximate);
    let (dok, dd) = dominated(recs);
    all(&[
        check_holds(recs, "mean_equals_theta_t"),
        check_holds(recs, "segment_cov_sum"),
        decreasing(recs),
        (dok && flagged, format!("{dd} (approximate: {flagged})")),
    ])
}

fn contact(quick: bool) -> (bool, String) {
    let run = run_config("contact_1d.json", quick);
    let recs = &run.report.records;
    let gamma = recs[0].decay.as_ref().map_or(f64::NAN, |d| d.rate);
    all(&[
        (gamma > 0.0, format!("gamma fit {gamma:.4}")),
        check_holds(recs, "segment_cov_sum"),
        decreasing(recs),
        dominated(recs),
    ])
}

fn d1_cross_validation() -> (bool, String) {
    let phi1 = (-0.5f64).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let at_one = 2.0 * phi1 + libm::erf(1.0 / 2f64.sqrt());
    let e0 = (d1_exact(&[0.0]).unwrap() - (2.0 / std::f64::consts::PI).sqrt()).abs();
    let e1 = (d1_exact(&[1.0]).unwrap() - at_one).abs();
    let printed = (at_one - 1.16663).abs() < 5e-6;
    let mut r = rng::stream(12, 0xacce_0012, 0);
    let mut worst: f64 = 0.0;
    for k in 0..20 {
        let n = 10 + 50 * k;
        let shift: f64 = r.random_range(-1.0..1.0);
        let x: Vec<f64> = (0..n).map(|_| r.sample::<f64, _>(StandardNormal) * 1.3 + shift).collect();
        worst = worst.max((d1_exact(&x).unwrap() - d1_riemann(&x, 1e-3).unwrap()).abs());
    }
    (
        e0 <= POINT_MASS_TOL && e1 <= POINT_MASS_TOL && printed && worst <= RIEMANN_TOL,
        format!("point masses {e0:.1e}, {e1:.1e}; riemann worst {worst:.1e}"),
    )
}

fn multivariate() -> (bool, String) {
    // dominance inverse bound soundness
    let mut r = rng::stream(13, 0xacce_0013, 0);
    let (mut cases, mut bad) = (0, 0);
    while cases < 500 {
        let m = random_dominant(&mut r, 8);
        let Some(bound) = gershgorin_check(&m).unwrap().inv_inf_bound else { continue };
        let dm = DMatrix::from_fn(m.dim(), m.dim(), |i, j| m.get(i, j));
        let inv = dm.try_inverse().unwrap();
        let actual = inv.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        cases += 1;
        if actual > bound * (1.0 + 1e-12) {
            bad += 1;
        }
    }
    // smooth-function dominance on the bivariate design
    let run = run_config("synthetic_bivariate.json", false);
    let mv = run.report.records[0].multivariate.clone().expect("multivariate record");
    let b = mv.bound.as_ref().map_or(f64::NAN, |b| b.value);
    let smooth_ok = mv.dominated == Some(true) && b >= mv.proxy + 4.0 * mv.proxy_se;
    // multivariate field bound against its formula written out here
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let d = r.random_range(1..=3u32);
        let p = CovDecayParams::new(r.random_range(0.2..2.0), r.random_range(0.2..2.0), d).unwrap();
        let n = r.random_range(4..400u64);
        let (a_n, psi, c): (f64, f64, f64) = (r.random_range(0.5..4.0), r.random_range(0.5..3.0), r.random_range(0.5..2.0));
        let rep = field_multivariate_bound(&p, 1.0, n, 2, 0.3, a_n, psi, c).unwrap();
        let alpha = rep.inputs["alpha"];
        let df = d as f64;
        let shape = (a_n + alpha).powf(1.0 / (df + 1.0))
            * psi.powf((2.0 * df + 3.0) / (df + 1.0))
            * (df.powf(-df / (df + 1.0)) + 2.0 * df.powf(1.0 / (df + 1.0)))
            * (n as f64).powf(-df / (2.0 * (df + 1.0)))
            + alpha * psi * psi;
        worst = worst.max((rep.value - c * shape).abs() / (c * shape));
        if rep.constant_tracked {
            worst = f64::INFINITY;
        }
    }
    (
        bad == 0 && smooth_ok && worst <= FORMULA_REL_TOL,
        format!(
            "inverse bound {}/{cases} sound; smooth proxy {:.4}+4*{:.4} <= {b:.4}; field formula worst rel {worst:.1e}",
            cases - bad,
            mv.proxy,
            mv.proxy_se
        ),
    )
}

#[test]
fn acceptance() {
    let full = full_scale();
    let quick = !full;
    let scale = if full { "full" } else { "quick" };
    println!("acceptance scale: {scale}");
    type Crit = (u32, &'static str, f64, Box<dyn Fn() -> (bool, String)>);
    let criteria: Vec<Crit> = vec![
        (1, "summation identities vs loops", 1.0, Box::new(identities)),
        (2, "A_n closed form and limit", 10.0, Box::new(a_n_oracle)),
        (3, "covariance lemmas dominate exact sums", 30.0, Box::new(lemmas)),
        (4, "block-size guarantee vs integer minimum", 5.0, Box::new(block_optimum)),
        (5, "univariate dominance, common-shock sums", 120.0, Box::new(synthetic_dominance)),
        (6, "Ising d=1 decay rate, d1 and bound", 600.0, Box::new(move || ising_1d(quick))),
        (7, "Ising d=2 dominance and decrease", if full { 1800.0 } else { 180.0 }, Box::new(move || ising_2d(quick))),
        (8, "percolation density stability and decrease", 900.0, Box::new(move || percolation_2d(quick))),
        (9, "voter dual vs direct covariance", 600.0, Box::new(voter_duality)),
        (10, "voter d=7 mean, segment covariances, d1", 1800.0, Box::new(voter_d7)),
        (11, "contact decay, segment covariances, d1", 1800.0, Box::new(move || contact(quick))),
        (12, "d1 estimator cross-validation", 60.0, Box::new(d1_cross_validation)),
        (13, "multivariate dominance and shape", 600.0, Box::new(multivariate)),
    ];
    let mut lines = Vec::new();
    for (id, title, limit_s, f) in criteria {
        let t0 = Instant::now();
        let (passed, detail) = f();
        let secs = t0.elapsed().as_secs_f64();
        let line = Line { id, title, passed: passed && secs <= limit_s, detail, secs, limit_s };
        println!(
            "{} [{:>2}] {} ({:.1}s / {:.0}s): {}",
            if line.passed { "PASS" } else { "FAIL" },
            line.id,
            line.title,
            line.secs,
            line.limit_s,
            line.detail
        );
        lines.push(line);
    }
    let failed: Vec<u32> = lines
        .iter()
        .filter(|l| !l.passed && !KNOWN_UNATTAINABLE.iter().any(|(id, _)| *id == l.id))
        .map(|l| l.id)
        .collect();
    for (id, why) in KNOWN_UNATTAINABLE {
        println!("known unattainable [{id}]: {why}");
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
