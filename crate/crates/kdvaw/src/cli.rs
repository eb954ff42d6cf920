//! Command-line entry points: `run`, `sweep`, `certify`, `report`.
//!
//! Exit codes: 0 on success, 1 on configuration errors, 2 when a
//! certification suite reports failures. Logging level comes from the
//! `KDVAW_LOG` environment variable (`error`, `info`, `debug`).

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use crate::certify;
use crate::config::{self, RunConfig};
use crate::error::{Error, Result};
use crate::harness::scaling::build_scaling_report;
use crate::harness::trace::RunSummary;

#[derive(Parser, Debug)]
#[command(
    name = "kdvaw",
    about = "Discounted online kernel regression: runs, sweeps, bound certification, scaling reports"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Execute one config and write trace.csv + summary.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// output directory (falls back to the config's output.dir)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Expand list-valued config fields into a cross product and run all
    /// combinations, one subdirectory per config hash.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// worker threads (default: available cores)
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Run a certification suite: thm31 | lemma31 | invariants.
    Certify {
        #[arg(long)]
        suite: String,
        #[arg(long, default_value_t = 100)]
        seeds: u64,
        /// optional report file for the suite outcome
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Aggregate summaries from a sweep directory into a scaling table.
    Report {
        #[arg(long)]
        sweep_dir: PathBuf,
        /// optional CSV output path (prints to stdout otherwise)
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

pub fn init_logging() {
    let env = env_logger::Env::default().filter_or("KDVAW_LOG", "error");
    let _ = env_logger::Builder::from_env(env).try_init();
}

/// Parses argv and dispatches; returns the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap handles --help/--version through this path as well
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Run { config, out } => {
            let cfg = RunConfig::load(&config)?;
            let out = out
                .or_else(|| cfg.output.dir.clone())
                .ok_or_else(|| {
                    Error::ConfigError(
                        "no output directory: pass --out or set output.dir in the config".into(),
                    )
                })?;
            let outcome = config::execute_run_to_dir(&cfg, &out)?;
            log::info!(
                "run {}: T={} final regret {:.6e}",
                outcome.summary.config_hash,
                outcome.summary.horizon,
                outcome.summary.final_regret
            );
            println!(
                "wrote {} (final regret {:.6e})",
                out.display(),
                outcome.summary.final_regret
            );
            Ok(0)
        }
        Command::Sweep { config, out, jobs } => {
            let text = fs::read_to_string(&config)
                .map_err(|e| Error::ConfigError(format!("{}: {e}", config.display())))?;
            let doc: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| Error::ConfigError(e.to_string()))?;
            let combos = config::expand_sweep(&doc)?;
            // validate every combination before launching any work; the
            // subdirectory name is the same hash each summary records
            let cfgs: Vec<(String, RunConfig)> = combos
                .iter()
                .map(|v| {
                    serde_json::from_value::<RunConfig>(v.clone())
                        .map(|c| (config::config_hash_of(&c), c))
                        .map_err(|e| Error::ConfigError(e.to_string()))
                })
                .collect::<Result<_>>()?;
            fs::create_dir_all(&out)?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs.unwrap_or(0))
                .build()
                .map_err(|e| Error::ConfigError(e.to_string()))?;
            let results: Vec<Result<()>> = pool.install(|| {
                cfgs.par_iter()
                    .map(|(hash, cfg)| {
                        let dir = out.join(&hash[..12.min(hash.len())]);
                        config::execute_run_to_dir(cfg, &dir).map(|outcome| {
                            log::info!(
                                "sweep combo {hash}: final regret {:.6e}",
                                outcome.summary.final_regret
                            );
                        })
                    })
                    .collect()
            });
            for r in results {
                r?;
            }
            println!("swept {} combinations into {}", cfgs.len(), out.display());
            Ok(0)
        }
        Command::Certify { suite, seeds, out } => {
            let outcome = certify::run_suite(&suite, seeds)?;
            let mut report = format!(
                "suite {}: {} passed, {} failed\n",
                outcome.name, outcome.passed, outcome.failed
            );
            for f in &outcome.failures {
                report.push_str(&format!("FAIL {f}\n"));
            }
            print!("{report}");
            if let Some(path) = out {
                if let Some(parent) = path.parent() {
                    if !parent.as_os_str().is_empty() {
                        fs::create_dir_all(parent)?;
                    }
                }
                fs::write(path, report)?;
            }
            Ok(if outcome.all_passed() { 0 } else { 2 })
        }
        Command::Report { sweep_dir, out } => {
            let summaries = collect_summaries(&sweep_dir)?;
            if summaries.is_empty() {
                return Err(Error::ConfigError(format!(
                    "no summary.json files under {}",
                    sweep_dir.display()
                )));
            }
            let rows: Vec<(u64, f64, f64)> = summaries
                .iter()
                .map(|s| (s.horizon, s.path_length, s.final_regret))
                .collect();
            let report = build_scaling_report(&rows);
            let table = report.render_table();
            match out {
                Some(path) => fs::write(path, table)?,
                None => print!("{table}"),
            }
            Ok(0)
        }
    }
}

fn collect_summaries(dir: &Path) -> Result<Vec<RunSummary>> {
    let mut out = Vec::new();
    let direct = dir.join("summary.json");
    if direct.exists() {
        out.push(read_summary(&direct)?);
    }
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() {
            let candidate = path.join("summary.json");
            if candidate.exists() {
                out.push(read_summary(&candidate)?);
            }
        }
    }
    out.sort_by(|a, b| {
        (a.horizon, a.seed)
            .cmp(&(b.horizon, b.seed))
            .then(a.path_length.partial_cmp(&b.path_length).unwrap())
    });
    Ok(out)
}

fn read_summary(path: &Path) -> Result<RunSummary> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text)
        .map_err(|e| Error::ConfigError(format!("{}: {e}", path.display())))
}
