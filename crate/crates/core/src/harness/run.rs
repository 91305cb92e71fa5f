use std::time::Instant;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ModelKind, MultivariateSection, SyntheticKind};
use super::report::ExperimentReport;
use super::{CommonShock, HarnessError};
use crate::bounds::{
    self, a_n_exponential, contact_bound, contact_cov_sum_bound, contact_cross_cov_bound,
    contact_gershgorin, contact_multivariate_bound, field_gershgorin, field_multivariate_bound,
    field_univariate_bound, inv_sqrt_max_abs, stein_bound_multivariate, stein_bound_univariate,
    voter_bound, voter_cov_sum_bound, voter_cross_cov_bound, voter_gershgorin,
    voter_multivariate_bound, BoundKind, BoundReport, CovMatrix, DominanceCheck,
};
use crate::lattice::{empirical_decay_fit, ising_sample, percolation_sample};
use crate::particles::{
    contact_decay_from_params, contact_simulate, last_exit_stats, voter_occupation, ContactDecay,
    LastExitStats, Trajectory,
};
use crate::rng;
use crate::stats::{
    cov_with_se, d1_to_standard_normal, empirical_cov_matrix, mean_with_se,
    multivariate_smooth_check, offdiag_cov_sum, standard_suite, standardize, variance_rate,
    D1Estimate, SampleMatrix, SmoothReport, StandardizeMode,
};

/// A bound must exceed the empirical distance by this many standard errors.
pub const DOMINANCE_SE: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

/// Fitted covariance envelope `kappa exp(-rate |k|)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayRecord {
    pub kappa: f64,
    pub rate: f64,
    pub kappa_fit: f64,
    pub used_lags: Vec<f64>,
}

/// An inequality checked against an estimate: holds when
/// `empirical <= bound + 4 sqrt(se^2 + bound_se^2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub empirical: f64,
    pub se: f64,
    pub bound: f64,
    pub bound_se: f64,
    pub holds: bool,
}

impl Check {
    pub fn new(name: &str, empirical: f64, se: f64, bound: f64, bound_se: f64) -> Self {
        let slack = DOMINANCE_SE * (se * se + bound_se * bound_se).sqrt();
        Check {
            name: name.to_string(),
            empirical,
            se,
            bound,
            bound_se,
            holds: empirical <= bound + slack,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultivariateRecord {
    pub p: usize,
    pub alpha: Option<f64>,
    pub sigma: Vec<Vec<f64>>,
    /// `|Sigma^{-1/2}|_inf` times the model's scale (`n^{d/2}`, `t^{1/2}`
    /// or 1).
    pub psi: f64,
    pub dominance: Option<DominanceCheck<f64>>,
    /// Largest smooth-suite gap, a lower proxy for the smooth distance.
    pub proxy: f64,
    pub proxy_se: f64,
    pub smooth: SmoothReport,
    pub bound: Option<BoundReport<f64>>,
    pub bound_error: Option<String>,
    pub dominated: Option<bool>,
}

/// Everything measured at one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRecord {
    /// Block side `n`, window length `t` or summand count `m`.
    pub key: f64,
    pub replicates: usize,
    pub seed: u64,
    pub d1: D1Estimate,
    pub mean: Estimate,
    pub expected_mean: Option<f64>,
    /// `Var / n^d` (lattice), `Var / t` (particles) or `Var` (synthetic).
    pub variance_rate: Estimate,
    /// Normalized block variance implied by the fitted envelope.
    pub variance_rate_envelope: Option<f64>,
    pub decay: Option<DecayRecord>,
    pub bound: Option<BoundReport<f64>>,
    pub bound_error: Option<String>,
    /// Bound evaluated, in range and for a model it covers.
    pub applicable: bool,
    /// `bound >= d1 + 4 SE`, when applicable.
    pub dominated: Option<bool>,
    /// Inputs of the bound are estimates from a finite approximation of
    /// the model.
    pub approximate: bool,
    pub checks: Vec<Check>,
    pub multivariate: Option<MultivariateRecord>,
    pub warnings: Vec<String>,
    pub runtime_s: f64,
}

impl GridRecord {
    fn new(key: f64, seed: u64, x: &[f64], unit: f64, mode: StandardizeMode) -> Result<Self, HarnessError> {
        let (m, se) = mean_with_se(x);
        let vr = variance_rate(x, unit).map_err(sim("variance rate"))?;
        let w = standardize(x, mode).map_err(sim("standardize"))?;
        let d1 = d1_to_standard_normal(&w.values).map_err(sim("d1"))?;
        Ok(GridRecord {
            key,
            replicates: x.len(),
            seed,
            d1,
            mean: Estimate { value: m, se },
            expected_mean: None,
            variance_rate: Estimate { value: vr.value, se: vr.se },
            variance_rate_envelope: None,
            decay: None,
            bound: None,
            bound_error: None,
            applicable: false,
            dominated: None,
            approximate: false,
            checks: Vec::new(),
            multivariate: None,
            warnings: Vec::new(),
            runtime_s: 0.0,
        })
    }

    fn set_bound(&mut self, bound: Result<BoundReport<f64>, String>, covered: bool) {
        match bound {
            Ok(b) => {
                self.applicable = covered && b.usable();
                self.dominated = self
                    .applicable
                    .then(|| b.value >= self.d1.value + DOMINANCE_SE * self.d1.se);
                self.bound = Some(b);
            }
            Err(e) => {
                self.applicable = false;
                self.bound_error = Some(e);
            }
        }
    }
}

/// A finished run: the report plus the raw artifacts it was computed from.
#[derive(Debug, Clone)]
pub struct ExperimentRun {
    pub report: ExperimentReport,
    pub samples: Vec<(String, SampleMatrix)>,
    pub trajectories: Vec<(String, Trajectory)>,
}

fn sim<E: std::fmt::Display>(at: &'static str) -> impl Fn(E) -> HarnessError {
    move |e| HarnessError::Simulation {
        at: at.to_string(),
        message: e.to_string(),
    }
}

/// Independent seed for grid point `i`.
pub fn grid_seed(seed: u64, i: usize) -> u64 {
    rng::mix64(seed ^ rng::mix64(i as u64 + 1))
}

const DECAY_SALT: u64 = 0xdeca_7000;
const REFERENCE_SALT: u64 = 0x2ef0_0000;

fn bound_err(e: bounds::BoundsError) -> String {
    e.to_string()
}

/// Rows `Sigma^{-1/2} (x - center)`.
fn whiten(samples: &SampleMatrix, center: &[f64], inv_sqrt: &DMatrix<f64>) -> Result<SampleMatrix, HarnessError> {
    let p = samples.cols();
    let mut data = Vec::with_capacity(samples.rows() * p);
    for i in 0..samples.rows() {
        let row = samples.row(i);
        for a in 0..p {
            data.push((0..p).map(|b| inv_sqrt[(a, b)] * (row[b] - center[b])).sum::<f64>());
        }
    }
    SampleMatrix::new(data, p, (0..p).map(|j| format!("Z_{j}")).collect(), &samples.model)
        .map_err(sim("whiten"))
}

struct Whitened {
    sigma: CovMatrix<f64>,
    inv_sqrt_max: f64,
    smooth: SmoothReport,
}

/// Covariance (exact when given, empirical otherwise), `|Sigma^{-1/2}|_inf`
/// and the smooth-suite comparison of the whitened samples.
fn whitened_check(
    samples: &SampleMatrix,
    center: &[f64],
    exact: Option<CovMatrix<f64>>,
    mv: &MultivariateSection,
    seed: u64,
) -> Result<Whitened, HarnessError> {
    let sigma = match exact {
        Some(s) => s,
        None => empirical_cov_matrix(samples).map_err(sim("covariance matrix"))?,
    };
    let inv = sigma.inv_sqrt().map_err(sim("covariance matrix"))?;
    let inv_sqrt_max = inv_sqrt_max_abs(&sigma).map_err(sim("covariance matrix"))?;
    let z = whiten(samples, center, &inv)?;
    let smooth = multivariate_smooth_check(&z, &standard_suite(mv.p), mv.quadrature_points, seed)
        .map_err(sim("smooth check"))?;
    Ok(Whitened { sigma, inv_sqrt_max, smooth })
}

fn mv_record(
    w: Whitened,
    mv: &MultivariateSection,
    psi: f64,
    dominance: Option<DominanceCheck<f64>>,
    bound: Result<BoundReport<f64>, String>,
) -> MultivariateRecord {
    let sigma = (0..w.sigma.dim())
        .map(|i| (0..w.sigma.dim()).map(|j| w.sigma.get(i, j)).collect())
        .collect();
    let (proxy, proxy_se) = (w.smooth.max_gap, w.smooth.max_gap_se);
    let (bound, bound_error) = match bound {
        Ok(b) => (Some(b), None),
        Err(e) => (None, Some(e)),
    };
    let dominated = bound
        .as_ref()
        .filter(|b| b.usable())
        .map(|b| b.value >= proxy + DOMINANCE_SE * proxy_se);
    MultivariateRecord {
        p: mv.p,
        alpha: mv.alpha,
        sigma,
        psi,
        dominance,
        proxy,
        proxy_se,
        smooth: w.smooth,
        bound,
        bound_error,
        dominated,
    }
}

fn column_means(s: &SampleMatrix) -> Vec<f64> {
    (0..s.cols()).map(|j| mean_with_se(&s.column(j)).0).collect()
}

/// Window starts `s, s + (1 - alpha) t, ...`.
fn starts(s: f64, t: f64, mv: Option<&MultivariateSection>) -> Vec<f64> {
    match mv {
        Some(mv) => {
            let step = (1.0 - mv.alpha.unwrap_or(0.0)) * t;
            (0..mv.p).map(|k| s + k as f64 * step).collect()
        }
        None => vec![s],
    }
}

struct Point {
    record: GridRecord,
    samples: Vec<(String, SampleMatrix)>,
    trajectories: Vec<(String, Trajectory)>,
}

fn lattice_point(cfg: &ExperimentConfig, n: usize, seed: u64) -> Result<Point, HarnessError> {
    let (dim, samples, lags, mut warnings, reference) = match cfg.model {
        ModelKind::Ising => {
            let s = cfg.ising.as_ref().expect("validated");
            let obs = cfg.observable(s.dim, n);
            let out = ising_sample(&s.params(seed), &obs, cfg.replicates).map_err(sim("ising"))?;
            let w = out.samples.warnings.clone();
            (s.dim, out.samples, out.lags, w, None)
        }
        ModelKind::Percolation => {
            let s = cfg.percolation.as_ref().expect("validated");
            let obs = cfg.observable(s.dim, n);
            let params = s.params(seed);
            let out = percolation_sample(&params, &obs, cfg.replicates).map_err(sim("percolation"))?;
            let mut w = out.samples.warnings.clone();
            if !params.supercritical() {
                w.push(format!("theta = {} is not above the critical value; U is degenerate", s.theta));
            }
            let reference = match s.reference_box_side {
                Some(side) => {
                    let mut rp = params.clone();
                    rp.box_side = side;
                    rp.max_lag = 0;
                    rp.seed = seed ^ REFERENCE_SALT;
                    let r = percolation_sample(&rp, &obs, cfg.replicates).map_err(sim("percolation"))?;
                    Some((side, r.samples.column(0)))
                }
                None => None,
            };
            (s.dim, out.samples, out.lags, w, reference)
        }
        _ => unreachable!("lattice model"),
    };
    let unit = (n as f64).powi(dim as i32);
    let x = samples.column(0);
    let mut rec = GridRecord::new(n as f64, seed, &x, unit, StandardizeMode::Empirical)?;
    rec.warnings.append(&mut warnings);
    rec.approximate = true;

    if let Some((side, y)) = reference {
        let (ma, sa) = mean_with_se(&x);
        let (mb, sb) = mean_with_se(&y);
        rec.checks.push(Check::new(
            &format!("density_vs_box_{side}"),
            (ma - mb).abs() / unit,
            sa / unit,
            0.0,
            sb / unit,
        ));
    }

    let fit = empirical_decay_fit(&lags, dim as u32);
    match fit {
        Ok(fit) => {
            rec.decay = Some(DecayRecord {
                kappa: fit.params.kappa0,
                rate: fit.params.lambda,
                kappa_fit: fit.kappa_fit,
                used_lags: fit.used_lags.iter().map(|&l| l as f64).collect(),
            });
            rec.variance_rate_envelope = a_n_exponential(&fit.params, n as u64).ok();
            let a_n = rec.variance_rate.value;
            let b = field_univariate_bound(&fit.params, 1.0, n as u64, a_n).map_err(bound_err);
            rec.set_bound(b, true);
            if let Some(mv) = &cfg.multivariate {
                let alpha = mv.alpha.expect("validated");
                let w = whitened_check(&samples, &column_means(&samples), None, mv, seed)?;
                let psi = unit.sqrt() * w.inv_sqrt_max;
                let dom = field_gershgorin(&fit.params, n as u64, mv.p, a_n, alpha).ok();
                if dom.is_some_and(|d| !d.invertible) {
                    rec.warnings.push("alpha fails the diagonal-dominance condition at the fitted envelope".into());
                }
                let b = field_multivariate_bound(&fit.params, 1.0, n as u64, mv.p, alpha, a_n, psi, mv.constant)
                    .map_err(bound_err);
                rec.multivariate = Some(mv_record(w, mv, psi, dom, b));
            }
        }
        Err(e) => {
            rec.set_bound(Err(e.to_string()), false);
            if let Some(mv) = &cfg.multivariate {
                let w = whitened_check(&samples, &column_means(&samples), None, mv, seed)?;
                let psi = unit.sqrt() * w.inv_sqrt_max;
                rec.multivariate = Some(mv_record(w, mv, psi, None, Err(e.to_string())));
            }
        }
    }
    Ok(Point {
        record: rec,
        samples: vec![(format!("n{n}"), samples)],
        trajectories: Vec::new(),
    })
}

fn voter_point(cfg: &ExperimentConfig, t: f64, seed: u64) -> Result<Point, HarnessError> {
    let s = cfg.voter.as_ref().expect("validated");
    let mv = cfg.multivariate.as_ref();
    let params = s.params(starts(s.s, t, mv), t, seed);
    let out = voter_occupation(&params, cfg.replicates).map_err(sim("voter"))?;
    let x = out.samples.column(0);
    let mut rec = GridRecord::new(t, seed, &x, t, StandardizeMode::Empirical)?;
    rec.approximate = true;
    let theta = s.theta;
    rec.expected_mean = Some(theta * t);
    rec.checks.push(Check::new(
        "mean_equals_theta_t",
        (rec.mean.value - theta * t).abs(),
        rec.mean.se,
        0.0,
        0.0,
    ));

    let walk: Option<LastExitStats> = if s.dim >= 3 {
        let reps = s.walk_replicates.unwrap_or(10_000.max(cfg.replicates));
        Some(last_exit_stats(s.dim, 2.0 * params.horizon(), reps, seed ^ DECAY_SALT).map_err(sim("last exit"))?)
    } else {
        None
    };
    let a_t = rec.variance_rate.value;
    match &walk {
        Some(w) => {
            let covered = s.dim >= 7;
            if !covered {
                rec.warnings.push(format!("the voter bound covers d >= 7; d = {} is reported only", s.dim));
            }
            rec.set_bound(voter_bound(theta, a_t, w.mean_l2, t).map_err(bound_err), covered);
        }
        None => rec.set_bound(Err(format!("last exit time is infinite for d = {}", s.dim)), false),
    }

    let var = theta * (1.0 - theta);
    if let (Some(seg), Some(w)) = (&out.segments, &walk) {
        let (emp, se) = offdiag_cov_sum(seg).map_err(sim("segment covariance"))?;
        let m = seg.cols() as u64;
        if let Ok(b) = voter_cov_sum_bound(theta, m, w.mean_l2) {
            rec.checks.push(Check::new("segment_cov_sum", emp, se, b, var * (m - 1) as f64 * w.se_l2));
        }
    }

    if let Some(mv) = mv {
        let alpha = mv.alpha.expect("validated");
        let b_overlap = alpha * t;
        let center = vec![theta * t; mv.p];
        let w = whitened_check(&out.samples, &center, None, mv, seed)?;
        let psi = t.sqrt() * w.inv_sqrt_max;
        let a_list: Vec<f64> = (0..mv.p)
            .map(|k| variance_rate(&out.samples.column(k), t).map(|v| v.value))
            .collect::<Result<_, _>>()
            .map_err(sim("variance rate"))?;
        let (dom, bound) = match &walk {
            Some(lw) => {
                let (c, cse) = cov_with_se(&out.samples.column(0), &out.samples.column(1));
                if let Ok(cb) = voter_cross_cov_bound(theta, lw.mean_l, lw.mean_l2, b_overlap) {
                    let bse = var * (lw.se_l2 + 2.0 * b_overlap * lw.se_l);
                    rec.checks.push(Check::new("cross_window_cov", c, cse, cb, bse));
                }
                (
                    voter_gershgorin(theta, &a_list, lw.mean_l, lw.mean_l2, t, b_overlap).ok(),
                    voter_multivariate_bound(mv.p, theta, &a_list, alpha, t, psi, mv.constant).map_err(bound_err),
                )
            }
            None => (None, Err(format!("last exit time is infinite for d = {}", s.dim))),
        };
        rec.multivariate = Some(mv_record(w, mv, psi, dom, bound));
    }

    let key = format!("t{t}");
    let mut samples = vec![(key.clone(), out.samples)];
    if let Some(seg) = out.segments {
        samples.push((format!("{key}_segments"), seg));
    }
    Ok(Point {
        record: rec,
        samples,
        trajectories: vec![(key, out.example)],
    })
}

fn contact_point(
    cfg: &ExperimentConfig,
    t: f64,
    seed: u64,
    decay: &Result<ContactDecay, String>,
) -> Result<Point, HarnessError> {
    let s = cfg.contact.as_ref().expect("validated");
    let mv = cfg.multivariate.as_ref();
    let params = s.params(starts(s.s, t, mv), t, seed);
    let out = contact_simulate(&params, cfg.replicates).map_err(sim("contact"))?;
    let x = out.samples.column(0);
    let mut rec = GridRecord::new(t, seed, &x, t, StandardizeMode::Empirical)?;
    rec.approximate = true;
    let a_ft = rec.variance_rate.value;
    let m_f = params.f.sup_norm();

    match decay {
        Ok(d) => {
            rec.decay = Some(DecayRecord {
                kappa: d.kappa,
                rate: d.gamma,
                kappa_fit: d.fit.kappa_fit,
                used_lags: d.fit.used.clone(),
            });
            rec.set_bound(contact_bound(d.kappa, d.gamma, m_f, a_ft, t).map_err(bound_err), true);
            if let Some(seg) = &out.segments {
                let (emp, se) = offdiag_cov_sum(seg).map_err(sim("segment covariance"))?;
                if let Ok(b) = contact_cov_sum_bound(d.kappa, d.gamma, seg.cols() as u64) {
                    rec.checks.push(Check::new("segment_cov_sum", emp, se, b, 0.0));
                }
            }
        }
        Err(e) => rec.set_bound(Err(e.to_string()), false),
    }

    if let Some(mv) = mv {
        let alpha = mv.alpha.expect("validated");
        let b_overlap = alpha * t;
        let w = whitened_check(&out.samples, &column_means(&out.samples), None, mv, seed)?;
        let psi = t.sqrt() * w.inv_sqrt_max;
        let rates: Vec<f64> = (0..mv.p)
            .map(|k| variance_rate(&out.samples.column(k), t).map(|v| v.value))
            .collect::<Result<_, _>>()
            .map_err(sim("variance rate"))?;
        let a_mean = rates.iter().sum::<f64>() / rates.len() as f64;
        let a_min = rates.iter().copied().fold(f64::INFINITY, f64::min);
        let (dom, bound) = match decay {
            Ok(d) => {
                let (c, cse) = cov_with_se(&out.samples.column(0), &out.samples.column(1));
                if let Ok(cb) = contact_cross_cov_bound(d.kappa, d.gamma, b_overlap) {
                    rec.checks.push(Check::new("cross_window_cov", c, cse, cb, 0.0));
                }
                (
                    contact_gershgorin(d.kappa, d.gamma, a_min, t, b_overlap, mv.p).ok(),
                    contact_multivariate_bound(mv.p, d.kappa, d.gamma, a_mean, alpha, t, psi, mv.constant)
                        .map_err(bound_err),
                )
            }
            Err(e) => (None, Err(e.to_string())),
        };
        rec.multivariate = Some(mv_record(w, mv, psi, dom, bound));
    }

    let key = format!("t{t}");
    let mut samples = vec![(key.clone(), out.samples)];
    if let Some(seg) = out.segments {
        samples.push((format!("{key}_segments"), seg));
    }
    Ok(Point {
        record: rec,
        samples,
        trajectories: vec![(key, out.example)],
    })
}

/// The synthetic design at summand count `m`.
pub fn synthetic_design(cfg: &ExperimentConfig, m: usize) -> CommonShock {
    let s = cfg.synthetic.as_ref().expect("validated");
    let p = cfg.multivariate.as_ref().map_or(1, |mv| mv.p);
    let epsilon = match (s.kind, s.epsilon, s.b) {
        (SyntheticKind::Iid, _, _) => 0.0,
        (_, Some(e), _) => e,
        (_, None, Some(b)) => CommonShock::epsilon_for_bound(m, b).expect("validated"),
        _ => unreachable!("validated"),
    };
    let delta = if s.kind == SyntheticKind::Iid { 0.0 } else { s.delta };
    CommonShock { m, p, epsilon, delta }
}

fn synthetic_point(cfg: &ExperimentConfig, m: usize, seed: u64) -> Result<Point, HarnessError> {
    let design = synthetic_design(cfg, m);
    let samples = design.sample(cfg.replicates, seed).map_err(sim("synthetic"))?;
    let x = samples.column(0);
    let mut rec = GridRecord::new(m as f64, seed, &x, 1.0, StandardizeMode::Population { mean: 0.0, scale: 1.0 })?;
    rec.expected_mean = Some(0.0);
    let b = design.bound();
    let within = design.within_offdiag();
    let value = stein_bound_univariate(b, within).map_err(bound_err);
    let inputs = [
        ("B", b),
        ("offdiag_cov_sum", within),
        ("m", m as f64),
        ("epsilon", design.epsilon),
        ("delta", design.delta),
    ];
    rec.set_bound(
        value.map(|v| BoundReport::unconditional(BoundKind::SteinUnivariate, v, &inputs)),
        true,
    );
    if let Some(mv) = &cfg.multivariate {
        let sigma = design.sigma();
        let w = whitened_check(&samples, &vec![0.0; mv.p], Some(sigma.clone()), mv, seed)?;
        let psi = w.inv_sqrt_max;
        let bound = stein_bound_multivariate(mv.p, b, &sigma, &vec![within; mv.p])
            .map(|v| {
                BoundReport::unconditional(
                    BoundKind::SteinMultivariate,
                    v,
                    &[
                        ("p", mv.p as f64),
                        ("B", b),
                        ("within_offdiag", within),
                        ("cross_cov", design.cross_cov()),
                        ("inv_sqrt_max", psi),
                    ],
                )
            })
            .map_err(bound_err);
        let dom = bounds::gershgorin_check(&sigma).ok();
        rec.multivariate = Some(mv_record(w, mv, psi, dom, bound));
    }
    Ok(Point {
        record: rec,
        samples: vec![(format!("m{m}"), samples)],
        trajectories: Vec::new(),
    })
}

/// Runs every grid point in order and assembles the report.
pub fn run(cfg: &ExperimentConfig, config_hash: &str, quick: bool) -> Result<ExperimentRun, HarnessError> {
    let started = Instant::now();
    let decay = match (&cfg.model, &cfg.contact) {
        (ModelKind::Contact, Some(s)) => {
            let params = s.params(vec![s.s], s.decay_window(), cfg.seed ^ DECAY_SALT);
            let reps = s.decay_replicates.unwrap_or(cfg.replicates);
            Some(contact_decay_from_params(&params, reps, &s.lag_grid()).map_err(|e| e.to_string()))
        }
        _ => None,
    };
    let mut records = Vec::with_capacity(cfg.grid.len());
    let mut samples = Vec::new();
    let mut trajectories = Vec::new();
    for (i, &g) in cfg.grid.iter().enumerate() {
        let t0 = Instant::now();
        let seed = grid_seed(cfg.seed, i);
        log::info!("{} grid point {g} (seed {seed})", cfg.model);
        let point = match cfg.model {
            ModelKind::Ising | ModelKind::Percolation => lattice_point(cfg, g as usize, seed),
            ModelKind::Voter => voter_point(cfg, g, seed),
            ModelKind::Contact => contact_point(cfg, g, seed, decay.as_ref().expect("computed above")),
            ModelKind::Synthetic => synthetic_point(cfg, g as usize, seed),
        }
        .map_err(|e| match e {
            HarnessError::Simulation { at, message } => HarnessError::Simulation {
                at: format!("{at} (grid value {g})"),
                message,
            },
            other => other,
        })?;
        let mut rec = point.record;
        rec.runtime_s = t0.elapsed().as_secs_f64();
        records.push(rec);
        samples.extend(point.samples);
        trajectories.extend(point.trajectories);
    }
    records.sort_by(|a, b| a.key.total_cmp(&b.key));
    let report = ExperimentReport::new(cfg, config_hash, quick, records, started.elapsed().as_secs_f64());
    Ok(ExperimentRun {
        report,
        samples,
        trajectories,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::parse_config;

    #[test]
    fn check_slack() {
        assert!(Check::new("a", 1.0, 0.1, 0.7, 0.0).holds);
        assert!(!Check::new("a", 1.0, 0.05, 0.7, 0.0).holds);
        assert!(Check::new("a", 1.0, 0.0, 0.7, 0.1).holds);
    }

    #[test]
    fn grid_seeds_differ() {
        assert_ne!(grid_seed(1, 0), grid_seed(1, 1));
        assert_ne!(grid_seed(1, 0), grid_seed(2, 0));
    }

    #[test]
    fn iid_synthetic_is_dominated() {
        let cfg = parse_config(
            r#"{"schema_version": 1, "model": "synthetic", "replicates": 2000, "grid": [10, 40],
                "synthetic": {"kind": "iid"}}"#,
        )
        .unwrap();
        let run = run(&cfg, "h", false).unwrap();
        for r in &run.report.records {
            let b = r.bound.as_ref().unwrap();
            assert!((b.value - 5.0 * (3.0 / r.key).sqrt()).abs() < 1e-12);
            assert_eq!(r.dominated, Some(true));
        }
        assert_eq!(run.report.exit_code(), 0);
    }

    #[test]
    fn multivariate_synthetic_record() {
        let cfg = parse_config(
            r#"{"schema_version": 1, "model": "synthetic", "replicates": 500, "grid": [30],
                "synthetic": {"kind": "common_shock", "epsilon": 0.1, "delta": 0.1},
                "multivariate": {"p": 2, "quadrature_points": 2000}}"#,
        )
        .unwrap();
        let run = run(&cfg, "h", false).unwrap();
        let mv = run.report.records[0].multivariate.as_ref().unwrap();
        assert_eq!(mv.p, 2);
        assert!(mv.proxy >= 0.0);
        assert_eq!(mv.dominated, Some(true));
        assert!(mv.sigma[0][1] > 0.0);
    }
}
