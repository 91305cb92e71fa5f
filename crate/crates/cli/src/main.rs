use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use steinpa_core::bounds::oracle::run_suite;
use steinpa_core::harness::{self, key_name, HarnessError};
use steinpa_core::stats::{d1_to_standard_normal, standardize, StandardizeMode, BINARY_MAGIC};
use steinpa_core::SampleMatrix;

/// Normal-approximation bounds for positively associated sums, checked
/// against simulation.
#[derive(Parser)]
#[command(name = "steinpa", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Run {
        config: PathBuf,
        /// Divide replicate counts by ten.
        #[arg(long)]
        quick: bool,
        /// Output directory (overrides `output.dir`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Master seed (overrides `seed`).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check the closed-form identities and lemmas against brute force.
    VerifyIdentities {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Distance to the standard normal of every column of a sample file.
    D1 {
        samples: PathBuf,
        /// Use values as given instead of standardizing each column.
        #[arg(long)]
        raw: bool,
    },
}

fn init_threads() {
    if let Ok(v) = std::env::var("STEINPA_THREADS") {
        match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    log::warn!("STEINPA_THREADS ignored: {e}");
                }
            }
            _ => log::warn!("STEINPA_THREADS={v:?} is not a positive integer; ignored"),
        }
    }
}

fn run(config: &Path, quick: bool, out: Option<PathBuf>, seed: Option<u64>) -> Result<i32, HarnessError> {
    let (mut cfg, hash) = harness::load_config(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if quick {
        cfg = cfg.quick();
    }
    let dir = out.unwrap_or_else(|| cfg.output.dir.clone());
    let result = harness::run(&cfg, &hash, quick)?;
    harness::render(&result, &dir, &cfg.output)?;
    let r = &result.report;
    let key = key_name(r.model);
    for rec in &r.records {
        let bound = rec
            .bound
            .as_ref()
            .map(|b| format!("{:.5} (valid from {:.4})", b.value, b.valid_from))
            .or_else(|| rec.bound_error.clone())
            .unwrap_or_default();
        let verdict = match rec.dominated {
            Some(true) => "dominated",
            Some(false) => "VIOLATED",
            None => "not applicable",
        };
        println!(
            "{key} = {:<8} d1 = {:.5} +- {:.5}  bound = {bound}  {verdict}",
            rec.key, rec.d1.value, rec.d1.se
        );
        if let Some(mv) = &rec.multivariate {
            let b = mv
                .bound
                .as_ref()
                .map(|b| format!("{:.5}", b.value))
                .or_else(|| mv.bound_error.clone())
                .unwrap_or_default();
            println!(
                "    p = {}: smooth proxy = {:.5} +- {:.5}  bound = {b}  psi = {:.4}",
                mv.p, mv.proxy, mv.proxy_se, mv.psi
            );
        }
        for c in rec.checks.iter().filter(|c| !c.holds) {
            println!("    check {} failed: {:.6} > {:.6}", c.name, c.empirical, c.bound);
        }
        for w in &rec.warnings {
            println!("    warning: {w}");
        }
    }
    for v in &r.violations {
        eprintln!("violation: {v}");
    }
    println!("report written to {}", dir.display());
    Ok(r.exit_code())
}

fn load_samples(path: &Path) -> Result<SampleMatrix, String> {
    let bytes = std::fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let res = if bytes.starts_with(BINARY_MAGIC) {
        SampleMatrix::read_binary(bytes.as_slice())
    } else {
        SampleMatrix::read_csv(bytes.as_slice())
    };
    res.map_err(|e| format!("{}: {e}", path.display()))
}

fn d1(path: &Path, raw: bool) -> Result<(), String> {
    let s = load_samples(path)?;
    println!("column,n,d1,se");
    for j in 0..s.cols() {
        let col = s.column(j);
        let x = if raw {
            col
        } else {
            standardize(&col, StandardizeMode::Empirical).map_err(|e| format!("{}: {e}", s.columns[j]))?.values
        };
        let est = d1_to_standard_normal(&x).map_err(|e| format!("{}: {e}", s.columns[j]))?;
        println!("{},{},{},{}", s.columns[j], est.n, est.value, est.se);
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    init_threads();
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run { config, quick, out, seed } => match run(&config, quick, out, seed) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("{e}");
                e.exit_code()
            }
        },
        Command::VerifyIdentities { seed } => {
            let outcomes = run_suite(seed);
            let mut ok = true;
            for o in &outcomes {
                ok &= o.passed();
                println!(
                    "{} {:<28} cases {:>5}  failures {:>3}  worst {:.3e}",
                    if o.passed() { "PASS" } else { "FAIL" },
                    o.name,
                    o.cases,
                    o.failures,
                    o.worst
                );
            }
            i32::from(!ok)
        }
        Command::D1 { samples, raw } => match d1(&samples, raw) {
            Ok(()) => 0,
            Err(e) => {
                eprintln!("{e}");
                2
            }
        },
    };
    ExitCode::from(code as u8)
}
