use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use plotters::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ModelKind, OutputSection, SampleFormat, SCHEMA_VERSION};
use super::run::{ExperimentRun, GridRecord, DOMINANCE_SE};
use super::HarnessError;

pub const CODE_VERSION: &str = concat!("steinpa-core ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub name: String,
    pub model: ModelKind,
    pub config_hash: String,
    pub seed: u64,
    pub quick: bool,
    pub code_version: String,
    pub replicates: usize,
    /// Sorted by grid key.
    pub records: Vec<GridRecord>,
    /// One line per applicable bound that failed to dominate.
    pub violations: Vec<String>,
    pub runtime_s: f64,
}

impl ExperimentReport {
    pub fn new(
        cfg: &ExperimentConfig,
        config_hash: &str,
        quick: bool,
        records: Vec<GridRecord>,
        runtime_s: f64,
    ) -> Self {
        let mut violations = Vec::new();
        for r in &records {
            if let (Some(false), Some(b)) = (r.dominated, &r.bound) {
                violations.push(format!(
                    "{} = {}: {} bound {:.6} < d1 {:.6} + {DOMINANCE_SE} x {:.6}",
                    key_name(cfg.model),
                    r.key,
                    b.theorem_id,
                    b.value,
                    r.d1.value,
                    r.d1.se
                ));
            }
            if let Some(mv) = &r.multivariate {
                if let (Some(false), Some(b)) = (mv.dominated, &mv.bound) {
                    if b.constant_tracked {
                        violations.push(format!(
                            "{} = {}: {} bound {:.6} < smooth proxy {:.6} + {DOMINANCE_SE} x {:.6}",
                            key_name(cfg.model),
                            r.key,
                            b.theorem_id,
                            b.value,
                            mv.proxy,
                            mv.proxy_se
                        ));
                    }
                }
            }
        }
        ExperimentReport {
            schema_version: SCHEMA_VERSION,
            name: cfg.name.clone(),
            model: cfg.model,
            config_hash: config_hash.to_string(),
            seed: cfg.seed,
            quick,
            code_version: CODE_VERSION.to_string(),
            replicates: cfg.replicates,
            records,
            violations,
            runtime_s,
        }
    }

    /// 0 when every applicable bound dominates, 1 otherwise. Bounds with
    /// an untracked constant never count.
    pub fn exit_code(&self) -> i32 {
        if self.violations.is_empty() {
            0
        } else {
            1
        }
    }

    /// The report as JSON with every `runtime_s` zeroed, for comparing runs.
    pub fn deterministic_json(&self) -> String {
        let mut r = self.clone();
        r.runtime_s = 0.0;
        for rec in &mut r.records {
            rec.runtime_s = 0.0;
        }
        serde_json::to_string_pretty(&r).expect("report serializes")
    }
}

pub fn key_name(model: ModelKind) -> &'static str {
    match model {
        ModelKind::Ising | ModelKind::Percolation => "n",
        ModelKind::Voter | ModelKind::Contact => "t",
        ModelKind::Synthetic => "m",
    }
}

/// Per-record columns of the CSV table; every row is prefixed by the
/// config hash and seed.
pub const CSV_FIELDS: &[&str] = &[
    "key",
    "replicates",
    "d1",
    "d1_se",
    "mean",
    "mean_se",
    "variance_rate",
    "variance_rate_se",
    "decay_kappa",
    "decay_rate",
    "theorem_id",
    "bound",
    "valid_from",
    "constant_tracked",
    "applicable",
    "dominated",
    "approximate",
    "checks_failed",
    "mv_proxy",
    "mv_proxy_se",
    "mv_bound",
    "mv_dominated",
    "runtime_s",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn optb(v: Option<bool>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_csv<W: Write>(report: &ExperimentReport, w: W) -> Result<(), HarnessError> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["config_hash", "seed"];
    header.extend_from_slice(CSV_FIELDS);
    out.write_record(&header).map_err(out_err)?;
    for r in &report.records {
        let mv = r.multivariate.as_ref();
        let row = vec![
            report.config_hash.clone(),
            report.seed.to_string(),
            r.key.to_string(),
            r.replicates.to_string(),
            r.d1.value.to_string(),
            r.d1.se.to_string(),
            r.mean.value.to_string(),
            r.mean.se.to_string(),
            r.variance_rate.value.to_string(),
            r.variance_rate.se.to_string(),
            opt(r.decay.as_ref().map(|d| d.kappa)),
            opt(r.decay.as_ref().map(|d| d.rate)),
            r.bound.as_ref().map(|b| b.theorem_id.to_string()).unwrap_or_default(),
            opt(r.bound.as_ref().map(|b| b.value)),
            opt(r.bound.as_ref().map(|b| b.valid_from)),
            optb(r.bound.as_ref().map(|b| b.constant_tracked)),
            r.applicable.to_string(),
            optb(r.dominated),
            r.approximate.to_string(),
            r.checks.iter().filter(|c| !c.holds).count().to_string(),
            opt(mv.map(|m| m.proxy)),
            opt(mv.map(|m| m.proxy_se)),
            opt(mv.and_then(|m| m.bound.as_ref()).map(|b| b.value)),
            optb(mv.and_then(|m| m.dominated)),
            r.runtime_s.to_string(),
        ];
        out.write_record(&row).map_err(out_err)?;
    }
    out.flush().map_err(out_err)?;
    Ok(())
}

fn out_err<E: std::fmt::Display>(e: E) -> HarnessError {
    HarnessError::Output(e.to_string())
}

/// `d1` and the bound against the grid key on log-log axes.
pub fn write_plot(report: &ExperimentReport, path: &Path) -> Result<(), HarnessError> {
    let d1: Vec<(f64, f64)> = report
        .records
        .iter()
        .filter(|r| r.d1.value > 0.0)
        .map(|r| (r.key, r.d1.value))
        .collect();
    let bound: Vec<(f64, f64)> = report
        .records
        .iter()
        .filter_map(|r| r.bound.as_ref().map(|b| (r.key, b.value)))
        .filter(|(_, v)| *v > 0.0 && v.is_finite())
        .collect();
    let all: Vec<&(f64, f64)> = d1.iter().chain(&bound).collect();
    if all.is_empty() {
        return Err(HarnessError::Output("nothing to plot".into()));
    }
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, 0.0f64, f64::INFINITY, 0.0f64);
    for &&(x, y) in &all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let (x0, x1) = (x0 / 1.5, x1 * 1.5);
    let (y0, y1) = (y0 / 2.0, y1 * 2.0);

    let root = SVGBackend::new(path, (800, 560)).into_drawing_area();
    root.fill(&WHITE).map_err(out_err)?;
    let mut chart = ChartBuilder::on(&root)
        .margin(20)
        .x_label_area_size(40)
        .y_label_area_size(60)
        .build_cartesian_2d((x0..x1).log_scale(), (y0..y1).log_scale())
        .map_err(out_err)?;
    chart
        .configure_mesh()
        .x_desc(key_name(report.model))
        .y_desc("distance to normal")
        .draw()
        .map_err(out_err)?;
    chart
        .draw_series(LineSeries::new(d1.iter().copied(), &BLUE))
        .map_err(out_err)?
        .label("empirical d1")
        .legend(|(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], BLUE));
    chart
        .draw_series(d1.iter().map(|&p| Circle::new(p, 3, BLUE.filled())))
        .map_err(out_err)?;
    if !bound.is_empty() {
        chart
            .draw_series(LineSeries::new(bound.iter().copied(), &RED))
            .map_err(out_err)?
            .label("bound")
            .legend(|(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], RED));
        chart
            .draw_series(bound.iter().map(|&p| Circle::new(p, 3, RED.filled())))
            .map_err(out_err)?;
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(out_err)?;
    root.present().map_err(out_err)?;
    Ok(())
}

/// Writes `report.json`, `report.csv`, the plot and the raw samples and
/// trajectories into `dir`. Returns the files written.
pub fn render(run: &ExperimentRun, dir: &Path, output: &OutputSection) -> Result<Vec<PathBuf>, HarnessError> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::Output(format!("{}: {e}", dir.display())))?;
    let mut written = Vec::new();
    let json = dir.join("report.json");
    fs::write(&json, serde_json::to_string_pretty(&run.report).map_err(out_err)?)
        .map_err(|e| HarnessError::Output(format!("{}: {e}", json.display())))?;
    written.push(json);
    let csv_path = dir.join("report.csv");
    let f = fs::File::create(&csv_path).map_err(|e| HarnessError::Output(format!("{}: {e}", csv_path.display())))?;
    write_csv(&run.report, f)?;
    written.push(csv_path);
    if output.plot && !run.report.records.is_empty() {
        let p = dir.join("d1_vs_bound.svg");
        match write_plot(&run.report, &p) {
            Ok(()) => written.push(p),
            Err(e) => log::warn!("plot skipped: {e}"),
        }
    }
    for (name, s) in &run.samples {
        let p = match output.samples {
            SampleFormat::Csv => dir.join(format!("samples_{name}.csv")),
            SampleFormat::Binary => dir.join(format!("samples_{name}.bin")),
            SampleFormat::None => continue,
        };
        let res = match output.samples {
            SampleFormat::Csv => s.save_csv(&p),
            _ => s.save_binary(&p),
        };
        res.map_err(|e| HarnessError::Output(format!("{}: {e}", p.display())))?;
        written.push(p);
    }
    if output.trajectories {
        for (name, tr) in &run.trajectories {
            let p = dir.join(format!("trajectory_{name}.csv"));
            let f = fs::File::create(&p).map_err(|e| HarnessError::Output(format!("{}: {e}", p.display())))?;
            tr.write_csv(std::io::BufWriter::new(f))
                .map_err(|e| HarnessError::Output(format!("{}: {e}", p.display())))?;
            written.push(p);
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::parse_config;
    use crate::harness::run::run;

    fn cfg(grid: &str) -> ExperimentConfig {
        parse_config(&format!(
            r#"{{"schema_version": 1, "model": "synthetic", "seed": 4, "replicates": 300, "grid": {grid},
                "synthetic": {{"kind": "common_shock", "epsilon": 0.2}}}}"#
        ))
        .unwrap()
    }

    #[test]
    fn empty_report_gives_header_only_csv() {
        let r = ExperimentReport::new(&cfg("[10]"), "abc", false, Vec::new(), 0.0);
        let mut buf = Vec::new();
        write_csv(&r, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert_eq!(text.trim_end().split(',').count(), 2 + CSV_FIELDS.len());
    }

    #[test]
    fn csv_rows_and_json_round_trip() {
        let c = cfg("[10, 20]");
        let run = run(&c, "abc", false).unwrap();
        let mut buf = Vec::new();
        write_csv(&run.report, &mut buf).unwrap();
        let mut rdr = csv::Reader::from_reader(buf.as_slice());
        assert_eq!(rdr.headers().unwrap().len(), 2 + CSV_FIELDS.len());
        let rows: Vec<_> = rdr.records().map(|r| r.unwrap()).collect();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.len() == 2 + CSV_FIELDS.len()));
        let json = serde_json::to_string(&run.report).unwrap();
        let back: ExperimentReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, run.report);
    }

    #[test]
    fn render_writes_files() {
        let c = cfg("[10, 20]");
        let run = run(&c, "abc", false).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let files = render(&run, dir.path(), &OutputSection::default()).unwrap();
        let names: Vec<String> = files
            .iter()
            .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
            .collect();
        for want in ["report.json", "report.csv", "d1_vs_bound.svg", "samples_m10.csv"] {
            assert!(names.iter().any(|n| n == want), "missing {want} in {names:?}");
        }
        let svg = fs::read_to_string(dir.path().join("d1_vs_bound.svg")).unwrap();
        assert!(svg.starts_with("<svg"));
    }
}
