//! `dcn` — run timestamp-agreement scenarios and experiment suites from the
//! command line.
//!
//! * `dcn run --scenario FILE` simulates a TOML scenario across one or more
//!   seeds, feeds every event log to the checker, prints one verdict line per
//!   run, and optionally exports logs and per-instance reports.
//! * `dcn suite NAME` runs a named experiment suite and prints one PASS/FAIL
//!   line per verdict with the measured numbers.
//! * `dcn suites` lists the available suites.
//!
//! Exit codes: 0 when everything checked out, 1 when any guarantee or suite
//! failed, 2 on configuration or I/O errors. All output is deterministic for
//! a fixed invocation.

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use dcn_core::checker::{self, FlatRow};
use dcn_core::sim::config::Scenario;
use dcn_core::sim::kernel;
use dcn_core::suites;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "dcn",
    version,
    about = "Deterministic timestamp-agreement simulator and property checker"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate a scenario file across seeds and check every guarantee.
    Run {
        /// Scenario document (TOML, schema = 1).
        #[arg(long)]
        scenario: PathBuf,
        /// First seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of consecutive seeds to run.
        #[arg(long, default_value_t = 1)]
        seeds: u64,
        /// Directory for event logs and the per-instance report.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Report format.
        #[arg(long, value_enum, default_value_t = Format::Jsonl)]
        format: Format,
        /// Worker threads (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Run a named experiment suite.
    Suite {
        /// Suite name (see `dcn suites`).
        name: String,
        /// Scale override: seeds per cell / trials, suite-specific default.
        #[arg(long)]
        seeds: Option<usize>,
        /// Worker threads (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
        /// Directory for the per-instance rows the suite produced.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Report format.
        #[arg(long, value_enum, default_value_t = Format::Jsonl)]
        format: Format,
    },
    /// List available suites.
    Suites,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Jsonl,
    Csv,
}

impl Format {
    fn ext(self) -> &'static str {
        match self {
            Format::Jsonl => "jsonl",
            Format::Csv => "csv",
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Result<bool> {
    match cli.cmd {
        Cmd::Run { scenario, seed, seeds, out, format, jobs } => {
            run_scenario(&scenario, seed, seeds, out.as_deref(), format, jobs)
        }
        Cmd::Suite { name, seeds, jobs, out, format } => {
            run_suites(&name, seeds, jobs, out.as_deref(), format)
        }
        Cmd::Suites => {
            for name in suites::SUITE_NAMES {
                println!("{name}");
            }
            Ok(true)
        }
    }
}

fn run_scenario(
    path: &Path,
    seed: u64,
    seeds: u64,
    out: Option<&Path>,
    format: Format,
    jobs: Option<usize>,
) -> Result<bool> {
    let doc = fs::read_to_string(path)
        .with_context(|| format!("reading scenario {}", path.display()))?;
    let sc = Scenario::from_toml(&doc)
        .with_context(|| format!("loading scenario {}", path.display()))?;
    sc.validate().context("validating scenario")?;
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("scenario").to_string();

    let seed_list: Vec<u64> = (seed..seed.checked_add(seeds).context("seed range overflows")?)
        .collect();
    let runs = suites::par_map(&seed_list, jobs.unwrap_or_else(suites::default_jobs), |&s| {
        let run = kernel::run(&sc, s).expect("scenario validated above");
        let report = checker::check(run.log.records());
        (s, run, report)
    });

    let mut healthy = true;
    let mut all_rows: Vec<FlatRow> = Vec::new();
    for (s, run, report) in &runs {
        let ok = report.guarantees_ok();
        healthy &= ok;
        let completed = report.instances.iter().filter(|i| i.completed).count();
        println!(
            "seed {s}: {} — {completed}/{} instances accepted, digest {}",
            if ok { "ok" } else { "GUARANTEE VIOLATION" },
            report.instances.len(),
            &run.digest[..16]
        );
        all_rows.extend(report.flat_rows());
    }

    if let Some(dir) = out {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for (s, run, _) in &runs {
            let log_path = dir.join(format!("{stem}-seed{s}.log.jsonl"));
            fs::write(&log_path, run.log.to_jsonl())
                .with_context(|| format!("writing {}", log_path.display()))?;
        }
        let report_path = dir.join(format!("{stem}-report.{}", format.ext()));
        write_rows(&report_path, &all_rows, format)?;
        println!("wrote {} logs and {} to {}", runs.len(), report_path.display(), dir.display());
    }

    println!(
        "{} runs, {} instances, {} guarantee violations",
        runs.len(),
        all_rows.len(),
        all_rows.iter().filter(|r| !r.guarantees_ok).count()
    );
    Ok(healthy)
}

fn run_suites(
    name: &str,
    seeds: Option<usize>,
    jobs: Option<usize>,
    out: Option<&Path>,
    format: Format,
) -> Result<bool> {
    let outcomes = suites::run_suite(name, seeds, jobs.unwrap_or_else(suites::default_jobs))
        .ok_or_else(|| {
            anyhow!("unknown suite '{name}'; available: {}", suites::SUITE_NAMES.join(", "))
        })?;
    let mut healthy = true;
    for o in &outcomes {
        healthy &= o.pass;
        println!("{} {} — {}", if o.pass { "PASS" } else { "FAIL" }, o.name, o.detail);
    }
    if let Some(dir) = out {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for o in &outcomes {
            if o.rows.is_empty() {
                continue;
            }
            let path = dir.join(format!("{name}-{}.{}", o.name, format.ext()));
            write_rows(&path, &o.rows, format)?;
            println!("wrote {} rows to {}", o.rows.len(), path.display());
        }
    }
    Ok(healthy)
}

fn write_rows(path: &Path, rows: &[FlatRow], format: Format) -> Result<()> {
    match format {
        Format::Jsonl => {
            let mut text = String::new();
            for row in rows {
                text.push_str(&serde_json::to_string(row).expect("rows serialize"));
                text.push('\n');
            }
            fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
        }
        Format::Csv => {
            let mut w = csv::Writer::from_path(path)
                .with_context(|| format!("writing {}", path.display()))?;
            for row in rows {
                w.serialize(row).context("serializing report row")?;
            }
            w.flush().context("flushing report")?;
        }
    }
    Ok(())
}
