use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::lattice::{BlockObservable, Boundary, IsingParams, LatticeError, PercolationParams, SimBox};
use crate::particles::{ContactParams, CylFunction, ParticleError, VoterMethod, VoterParams};

pub const SCHEMA_VERSION: u32 = 1;

/// Replicate counts below this are rejected; every run estimates variances.
pub const MIN_REPLICATES: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Ising,
    Percolation,
    Voter,
    Contact,
    Synthetic,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Ising => "ising",
            ModelKind::Percolation => "percolation",
            ModelKind::Voter => "voter",
            ModelKind::Contact => "contact",
            ModelKind::Synthetic => "synthetic",
        }
    }

    /// Lattice and synthetic grids are integer sizes; particle grids are
    /// window lengths.
    pub fn integer_grid(self) -> bool {
        !matches!(self, ModelKind::Voter | ModelKind::Contact)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One experiment: a model, a grid of block sides `n` (lattice models),
/// window lengths `t` (voter, contact) or summand counts `m` (synthetic),
/// and the replicate count per grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub name: String,
    pub model: ModelKind,
    #[serde(default)]
    pub seed: u64,
    pub replicates: usize,
    pub grid: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ising: Option<IsingSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub percolation: Option<PercolationSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub voter: Option<VoterSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contact: Option<ContactSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub multivariate: Option<MultivariateSection>,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IsingSection {
    pub dim: usize,
    pub box_side: usize,
    pub beta: f64,
    #[serde(default)]
    pub h: f64,
    #[serde(default, alias = "J")]
    pub coupling: Option<f64>,
    #[serde(default)]
    pub boundary: Boundary,
    #[serde(default)]
    pub sweeps_burnin: Option<usize>,
    #[serde(default)]
    pub sweeps_between: Option<usize>,
    #[serde(default)]
    pub chains: Option<usize>,
    #[serde(default)]
    pub margin: Option<usize>,
    #[serde(default)]
    pub max_lag: Option<usize>,
}

impl IsingSection {
    pub fn params(&self, seed: u64) -> IsingParams {
        let mut p = IsingParams::new(self.dim, self.box_side, self.beta, self.h);
        p.boundary = self.boundary;
        p.margin = self.margin;
        p.seed = seed;
        if let Some(v) = self.coupling {
            p.coupling = v;
        }
        if let Some(v) = self.sweeps_burnin {
            p.sweeps_burnin = v;
        }
        if let Some(v) = self.sweeps_between {
            p.sweeps_between = v;
        }
        if let Some(v) = self.chains {
            p.chains = v;
        }
        if let Some(v) = self.max_lag {
            p.max_lag = v;
        }
        p
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PercolationSection {
    pub dim: usize,
    pub box_side: usize,
    pub theta: f64,
    #[serde(default)]
    pub margin: Option<usize>,
    #[serde(default)]
    pub max_lag: Option<usize>,
    /// Second box side for the finite-size check on `E U / n^d`.
    #[serde(default)]
    pub reference_box_side: Option<usize>,
}

impl PercolationSection {
    pub fn params(&self, seed: u64) -> PercolationParams {
        let mut p = PercolationParams::new(self.dim, self.box_side, self.theta);
        p.margin = self.margin;
        p.seed = seed;
        if let Some(v) = self.max_lag {
            p.max_lag = v;
        }
        p
    }
}

fn default_segments() -> usize {
    8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VoterSection {
    pub dim: usize,
    #[serde(default)]
    pub torus_side: Option<usize>,
    pub theta: f64,
    #[serde(default)]
    pub s: f64,
    /// Pieces for the segment-covariance check.
    #[serde(default = "default_segments")]
    pub segments: usize,
    #[serde(default)]
    pub method: VoterMethod,
    /// Random-walk paths for the last-exit moments; `max(replicates, 10^4)`
    /// when unset.
    #[serde(default)]
    pub walk_replicates: Option<usize>,
}

impl VoterSection {
    pub fn params(&self, starts: Vec<f64>, t: f64, seed: u64) -> VoterParams {
        VoterParams {
            dim: self.dim,
            torus_side: self.torus_side,
            theta: self.theta,
            starts,
            t,
            segments: self.segments,
            method: self.method,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContactSection {
    pub infection_rate: f64,
    #[serde(default)]
    pub interval_radius: Option<usize>,
    #[serde(default)]
    pub burnin_time: Option<f64>,
    #[serde(default)]
    pub s: f64,
    /// Defaults to `1(A contains 0)`.
    #[serde(default)]
    pub f: Option<CylFunction>,
    #[serde(default = "default_segments")]
    pub segments: usize,
    /// Time lags for the covariance envelope; `0, 0.25, ..., 3` when unset.
    #[serde(default)]
    pub lag_grid: Option<Vec<f64>>,
    /// Runs used for the envelope fit; `replicates` when unset.
    #[serde(default)]
    pub decay_replicates: Option<usize>,
    /// Length of the window the envelope is measured over; `4 * max lag`
    /// (at least 10) when unset.
    #[serde(default)]
    pub decay_window: Option<f64>,
}

impl ContactSection {
    pub fn f(&self) -> CylFunction {
        self.f.clone().unwrap_or_else(|| CylFunction::indicator(vec![0]))
    }

    pub fn lag_grid(&self) -> Vec<f64> {
        self.lag_grid
            .clone()
            .unwrap_or_else(|| (0..=12).map(|i| 0.25 * i as f64).collect())
    }

    pub fn decay_window(&self) -> f64 {
        self.decay_window.unwrap_or_else(|| {
            let max_lag = self.lag_grid().iter().copied().fold(0.0, f64::max);
            (4.0 * max_lag).max(10.0)
        })
    }

    pub fn params(&self, starts: Vec<f64>, t: f64, seed: u64) -> ContactParams {
        ContactParams {
            infection_rate: self.infection_rate,
            interval_radius: self.interval_radius,
            burnin_time: self.burnin_time,
            starts,
            t,
            f: self.f(),
            segments: self.segments,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyntheticKind {
    Iid,
    CommonShock,
}

/// Bounded summands `xi_i = (U_i + epsilon V + delta V_0) / c` with
/// `U_i, V, V_0` uniform on `[-1, 1]`; see [`super::CommonShock`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSection {
    pub kind: SyntheticKind,
    /// Shock amplitude; give this or `b`, not both.
    #[serde(default)]
    pub epsilon: Option<f64>,
    /// Target summand bound `B`; `epsilon` is solved for at each `m`.
    #[serde(default)]
    pub b: Option<f64>,
    /// Amplitude of the shock shared across coordinates in multivariate
    /// runs.
    #[serde(default)]
    pub delta: f64,
}

fn default_constant() -> f64 {
    1.0
}
fn default_points() -> usize {
    100_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultivariateSection {
    pub p: usize,
    /// Overlap fraction between neighbouring blocks or windows; unused by
    /// the synthetic model.
    #[serde(default)]
    pub alpha: Option<f64>,
    /// Multiplier for bounds whose constant is not known explicitly.
    #[serde(default = "default_constant")]
    pub constant: f64,
    /// Halton points per shift for the normal expectations.
    #[serde(default = "default_points")]
    pub quadrature_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleFormat {
    #[default]
    Csv,
    Binary,
    None,
}

fn default_dir() -> PathBuf {
    PathBuf::from("steinpa-out")
}
fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default)]
    pub samples: SampleFormat,
    #[serde(default = "yes")]
    pub plot: bool,
    #[serde(default = "yes")]
    pub trajectories: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: default_dir(),
            samples: SampleFormat::Csv,
            plot: true,
            trajectories: true,
        }
    }
}

/// A rejected configuration, located as precisely as the failure allows.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub column: Option<usize>,
    /// Dotted path of the offending field, e.g. `ising.beta`.
    pub field: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error")?;
        match (self.line, self.column) {
            (Some(l), Some(c)) => write!(f, " at line {l}, column {c}")?,
            (Some(l), None) => write!(f, " at line {l}")?,
            _ => {}
        }
        if let Some(field) = &self.field {
            write!(f, " (field `{field}`)")?;
        }
        write!(f, ": {}", self.message)
    }
}

impl std::error::Error for ConfigError {}

/// Line and column of the last key of `path`, searching each component
/// after the previous one.
fn locate(text: &str, path: &str) -> Option<(usize, usize)> {
    let mut pos = 0;
    let mut found = None;
    for key in path.split('.') {
        let needle = format!("\"{key}\"");
        let at = pos + text[pos..].find(&needle)?;
        found = Some(at);
        pos = at + needle.len();
    }
    let at = found?;
    let line = text[..at].matches('\n').count() + 1;
    let column = at - text[..at].rfind('\n').map_or(0, |i| i + 1) + 1;
    Some((line, column))
}

pub(crate) struct Validator<'a> {
    text: &'a str,
}

impl Validator<'_> {
    fn fail<T>(&self, field: &str, message: impl Into<String>) -> Result<T, ConfigError> {
        let (line, column) = match locate(self.text, field) {
            Some((l, c)) => (Some(l), Some(c)),
            None => (None, None),
        };
        Err(ConfigError {
            line,
            column,
            field: Some(field.to_string()),
            message: message.into(),
        })
    }
}

fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}

/// Parses and validates a configuration. Unknown fields are errors.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        ConfigError {
            line: Some(inner.line()),
            column: Some(inner.column()),
            field: (path != ".").then_some(path),
            message: strip_position(&inner.to_string()),
        }
    })?;
    cfg.validate_against(text)?;
    Ok(cfg)
}

/// Hex SHA-256 of the configuration text, recorded in every report.
pub fn config_hash(text: &str) -> String {
    Sha256::digest(text.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

impl ExperimentConfig {
    /// Grid values as integers (lattice sides or summand counts).
    pub fn int_grid(&self) -> Vec<usize> {
        self.grid.iter().map(|&g| g as usize).collect()
    }

    /// Checks with positions resolved in `text`, the document the config
    /// was read from.
    pub fn validate_against(&self, text: &str) -> Result<(), ConfigError> {
        let v = Validator { text };
        if self.schema_version != SCHEMA_VERSION {
            return v.fail(
                "schema_version",
                format!("unsupported schema version {}, expected {SCHEMA_VERSION}", self.schema_version),
            );
        }
        if self.replicates < MIN_REPLICATES {
            return v.fail("replicates", format!("need at least {MIN_REPLICATES} replicates"));
        }
        if self.grid.is_empty() {
            return v.fail("grid", "grid must not be empty");
        }
        for &g in &self.grid {
            if !(g > 0.0 && g.is_finite()) {
                return v.fail("grid", format!("grid value {g} is not positive"));
            }
            if self.model.integer_grid() && g.fract() != 0.0 {
                return v.fail("grid", format!("grid value {g} must be an integer for {}", self.model));
            }
        }
        let present = [
            (ModelKind::Ising, self.ising.is_some()),
            (ModelKind::Percolation, self.percolation.is_some()),
            (ModelKind::Voter, self.voter.is_some()),
            (ModelKind::Contact, self.contact.is_some()),
            (ModelKind::Synthetic, self.synthetic.is_some()),
        ];
        for (kind, there) in present {
            if kind == self.model && !there {
                return v.fail("model", format!("model is {kind} but there is no `{kind}` section"));
            }
            if kind != self.model && there {
                return v.fail(kind.as_str(), format!("section `{kind}` given but model is {}", self.model));
            }
        }
        if let Some(mv) = &self.multivariate {
            if mv.p < 2 {
                return v.fail("multivariate.p", "multivariate runs need p >= 2");
            }
            if !(mv.constant > 0.0 && mv.constant.is_finite()) {
                return v.fail("multivariate.constant", "must be positive");
            }
            if mv.quadrature_points < 1000 {
                return v.fail("multivariate.quadrature_points", "need at least 1000 points");
            }
            match (self.model, mv.alpha) {
                (ModelKind::Synthetic, _) => {}
                (_, None) => return v.fail("multivariate", "`alpha` is required for this model"),
                (_, Some(a)) if !(a > 0.0 && a < 1.0) => {
                    return v.fail("multivariate.alpha", format!("{a} is not in (0, 1)"))
                }
                _ => {}
            }
        }
        match self.model {
            ModelKind::Ising => self.validate_ising(&v),
            ModelKind::Percolation => self.validate_percolation(&v),
            ModelKind::Voter => self.validate_voter(&v),
            ModelKind::Contact => self.validate_contact(&v),
            ModelKind::Synthetic => self.validate_synthetic(&v),
        }
    }

    /// Anchors for block side `n`: a single centred block, or a row of `p`
    /// blocks overlapping by `alpha n`.
    pub fn observable(&self, dim: usize, n: usize) -> BlockObservable {
        match &self.multivariate {
            Some(mv) => BlockObservable::row(dim, n, mv.p, mv.alpha.unwrap_or(0.0)),
            None => BlockObservable::centred(dim, n),
        }
    }

    fn check_blocks(
        &self,
        v: &Validator,
        section: &str,
        dim: usize,
        side: usize,
        margin: Option<usize>,
    ) -> Result<(), ConfigError> {
        let sim = SimBox::new(dim, side).or_else(|e| v.fail(&format!("{section}.box_side"), e.to_string()))?;
        for n in self.int_grid() {
            let obs = self.observable(dim, n);
            let margin = margin.unwrap_or(3 * n);
            for a in &obs.anchors {
                if let Err(e) = sim.block_sites(a, n, margin) {
                    return v.fail(
                        &format!("{section}.box_side"),
                        format!("block side {n} with margin {margin} does not fit: {e}"),
                    );
                }
            }
        }
        Ok(())
    }

    fn validate_ising(&self, v: &Validator) -> Result<(), ConfigError> {
        let s = self.ising.as_ref().expect("checked");
        s.params(self.seed)
            .validate()
            .or_else(|e| lattice_fail(v, "ising", e))?;
        self.check_blocks(v, "ising", s.dim, s.box_side, s.margin)
    }

    fn validate_percolation(&self, v: &Validator) -> Result<(), ConfigError> {
        let s = self.percolation.as_ref().expect("checked");
        s.params(self.seed)
            .validate()
            .or_else(|e| lattice_fail(v, "percolation", e))?;
        self.check_blocks(v, "percolation", s.dim, s.box_side, s.margin)?;
        if let Some(r) = s.reference_box_side {
            self.check_blocks(v, "percolation", s.dim, r, s.margin)
                .or_else(|e| v.fail("percolation.reference_box_side", e.message))?;
        }
        Ok(())
    }

    fn validate_voter(&self, v: &Validator) -> Result<(), ConfigError> {
        let s = self.voter.as_ref().expect("checked");
        for &t in &self.grid {
            s.params(vec![s.s], t, self.seed)
                .validate()
                .or_else(|e| particle_fail(v, "voter", e))?;
        }
        if self.multivariate.is_some() && !(s.theta > 0.0 && s.theta < 1.0) {
            return v.fail("voter.theta", "multivariate runs need theta in (0, 1)");
        }
        if s.walk_replicates.is_some_and(|w| w < MIN_REPLICATES) {
            return v.fail("voter.walk_replicates", format!("need at least {MIN_REPLICATES}"));
        }
        Ok(())
    }

    fn validate_contact(&self, v: &Validator) -> Result<(), ConfigError> {
        let s = self.contact.as_ref().expect("checked");
        for &t in &self.grid {
            s.params(vec![s.s], t, self.seed)
                .validate()
                .or_else(|e| particle_fail(v, "contact", e))?;
        }
        let lags = s.lag_grid();
        if lags.len() < 3 || lags.iter().any(|l| !(*l >= 0.0 && l.is_finite())) {
            return v.fail("contact.lag_grid", "need at least 3 nonnegative lags");
        }
        if s.decay_window() < lags.iter().copied().fold(0.0, f64::max) {
            return v.fail("contact.decay_window", "window is shorter than the largest lag");
        }
        if s.decay_replicates.is_some_and(|r| r < MIN_REPLICATES) {
            return v.fail("contact.decay_replicates", format!("need at least {MIN_REPLICATES}"));
        }
        Ok(())
    }

    fn validate_synthetic(&self, v: &Validator) -> Result<(), ConfigError> {
        let s = self.synthetic.as_ref().expect("checked");
        if !(s.delta >= 0.0 && s.delta.is_finite()) {
            return v.fail("synthetic.delta", "must be nonnegative");
        }
        match (s.kind, s.epsilon, s.b) {
            (SyntheticKind::Iid, None, None) => {}
            (SyntheticKind::Iid, _, _) => {
                return v.fail("synthetic.kind", "iid summands take neither `epsilon` nor `b`")
            }
            (SyntheticKind::CommonShock, Some(e), None) => {
                if !(e >= 0.0 && e.is_finite()) {
                    return v.fail("synthetic.epsilon", "must be nonnegative");
                }
            }
            (SyntheticKind::CommonShock, None, Some(b)) => {
                if s.delta != 0.0 {
                    return v.fail("synthetic.b", "`b` can only be targeted with delta = 0");
                }
                for m in self.int_grid() {
                    if super::CommonShock::epsilon_for_bound(m, b).is_none() {
                        return v.fail(
                            "synthetic.b",
                            format!("no shock amplitude gives B = {b} with m = {m} (need sqrt(3)/m < B <= sqrt(3/m))"),
                        );
                    }
                }
            }
            (SyntheticKind::CommonShock, _, _) => {
                return v.fail("synthetic", "give exactly one of `epsilon` and `b`")
            }
        }
        Ok(())
    }

    /// Replicate counts divided by ten (with floors), grid unchanged.
    pub fn quick(mut self) -> Self {
        let scale = |n: usize, floor: usize| (n / 10).max(floor).min(n);
        self.replicates = scale(self.replicates, 100);
        if let Some(s) = &mut self.voter {
            s.walk_replicates = Some(scale(s.walk_replicates.unwrap_or(10_000.max(self.replicates * 10)), 1000));
        }
        if let Some(s) = &mut self.contact {
            s.decay_replicates = s.decay_replicates.map(|r| scale(r, 100));
        }
        if let Some(mv) = &mut self.multivariate {
            mv.quadrature_points = scale(mv.quadrature_points, 10_000);
        }
        self
    }
}

fn lattice_fail(v: &Validator, section: &str, e: LatticeError) -> Result<(), ConfigError> {
    match e {
        LatticeError::Param { field, reason } => v.fail(&format!("{section}.{field}"), reason),
        other => v.fail(section, other.to_string()),
    }
}

fn particle_fail(v: &Validator, section: &str, e: ParticleError) -> Result<(), ConfigError> {
    match e {
        ParticleError::Param { field, reason } => {
            let field = match field {
                "starts" => "s",
                "t" => return v.fail("grid", format!("{section}: {reason}")),
                other => other,
            };
            v.fail(&format!("{section}.{field}"), reason)
        }
        other => v.fail(section, other.to_string()),
    }
}
