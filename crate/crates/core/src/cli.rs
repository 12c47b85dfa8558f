//! Command-line front end: `run`, `sweep`, and `check` over a JSON config.
//!
//! Exit codes are part of the contract: 0 for a completed run (frozen,
//! horizon reached, or event cap hit — the last with a warning), 1 for a
//! configuration or I/O error, 2 when a verification monitor flags the
//! produced trace, 3 when `check` finds the configured parameters outside
//! their guarantees.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;
use crate::output::{write_run_artifacts, write_sweep_artifacts};
use crate::runner::{check_config, execute_run, execute_sweep, RunArtifacts, SweepRow};

/// Environment variable consulted for the output directory when neither
/// `--out` nor the config's `out_dir` is given.
pub const OUT_DIR_ENV: &str = "STCSIM_OUT_DIR";

const EXIT_OK: u8 = 0;
const EXIT_CONFIG: u8 = 1;
const EXIT_MONITOR: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;

#[derive(Parser)]
#[command(
    name = "stcsim",
    version,
    about = "Exact event-driven simulation and verification of self-triggered \
             ternary consensus protocols"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one run and write trace.csv, events.csv, summary.json
    Run(CommonArgs),
    /// Run every threshold/seed cell of the configured sweep and write sweep.csv
    Sweep(CommonArgs),
    /// Evaluate dwell floors and feasibility margins without simulating
    Check(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Path to the JSON run configuration
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config's out_dir and STCSIM_OUT_DIR)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Suppress the status line on stdout
    #[arg(long)]
    quiet: bool,
}

/// Entry point for the `stcsim` binary.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Check(args) => cmd_check(args),
    };
    ExitCode::from(code)
}

/// `--out`, then the config's `out_dir` (taken relative to the config file's
/// directory), then `$STCSIM_OUT_DIR`, then `./out`.
fn resolve_out_dir(args: &CommonArgs, cfg: &RunConfig) -> PathBuf {
    if let Some(out) = &args.out {
        return out.clone();
    }
    if let Some(out) = &cfg.out_dir {
        return cfg.base_dir.join(out);
    }
    if let Some(out) = std::env::var_os(OUT_DIR_ENV) {
        if !out.is_empty() {
            return PathBuf::from(out);
        }
    }
    PathBuf::from("out")
}

fn load_config(path: &Path) -> Result<RunConfig, u8> {
    RunConfig::load(path).map_err(|e| {
        eprintln!("error: {e}");
        EXIT_CONFIG
    })
}

fn warn_event_cap(artifacts: &RunArtifacts) {
    if artifacts.summary.event_cap_hit {
        eprintln!(
            "warning: event cap of {} reached at t = {}; the run is truncated",
            artifacts.summary.events_applied, artifacts.summary.t_end
        );
    }
}

fn run_status_line(artifacts: &RunArtifacts, dir: &Path) -> String {
    let s = &artifacts.summary;
    let ending = match s.t_freeze {
        Some(t) => format!("froze at t = {t}"),
        None => format!("ended at t = {} with spread {}", s.t_end, s.w_final),
    };
    format!(
        "{}: n = {}, {}, {} events, monitors {} -> {}",
        s.protocol,
        s.n,
        ending,
        s.events_applied,
        if s.monitors.all_passed {
            "passed"
        } else {
            "FAILED"
        },
        dir.display()
    )
}

fn report_violations(artifacts: &RunArtifacts) -> u8 {
    if artifacts.summary.monitors.all_passed {
        return EXIT_OK;
    }
    for v in artifacts.summary.monitors.violations() {
        eprintln!("monitor violation: {}: {}", v.name, v.detail);
    }
    EXIT_MONITOR
}

fn cmd_run(args: &CommonArgs) -> u8 {
    let cfg = match load_config(&args.config) {
        Ok(cfg) => cfg,
        Err(code) => return code,
    };
    let artifacts = match execute_run(&cfg) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let dir = resolve_out_dir(args, &cfg);
    if let Err(e) = write_run_artifacts(&dir, &artifacts) {
        eprintln!("error: cannot write artifacts to {}: {e}", dir.display());
        return EXIT_CONFIG;
    }
    warn_event_cap(&artifacts);
    if !args.quiet {
        println!("{}", run_status_line(&artifacts, &dir));
    }
    report_violations(&artifacts)
}

fn cmd_sweep(args: &CommonArgs) -> u8 {
    let cfg = match load_config(&args.config) {
        Ok(cfg) => cfg,
        Err(code) => return code,
    };
    let rows: Vec<SweepRow> = match execute_sweep(&cfg) {
        Ok(rows) => rows,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let dir = resolve_out_dir(args, &cfg);
    if let Err(e) = write_sweep_artifacts(&dir, &rows) {
        eprintln!("error: cannot write sweep.csv to {}: {e}", dir.display());
        return EXIT_CONFIG;
    }
    let mut code = EXIT_OK;
    for row in &rows {
        if !row.summary.monitors.all_passed {
            for v in row.summary.monitors.violations() {
                eprintln!(
                    "monitor violation at eps = {}, seed = {}: {}: {}",
                    row.eps, row.seed, v.name, v.detail
                );
            }
            code = EXIT_MONITOR;
        }
    }
    if !args.quiet {
        println!(
            "{} runs -> {}",
            rows.len(),
            dir.join("sweep.csv").display()
        );
    }
    code
}

fn cmd_check(args: &CommonArgs) -> u8 {
    let cfg = match load_config(&args.config) {
        Ok(cfg) => cfg,
        Err(code) => return code,
    };
    let report = match check_config(&cfg) {
        Ok(report) => report,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    if !args.quiet {
        println!("protocol {}", report.protocol);
        for line in &report.lines {
            let mark = if line.satisfied { "ok" } else { "VIOLATED" };
            println!("  [{mark}] {}: {}", line.name, line.detail);
        }
    }
    if report.feasible {
        EXIT_OK
    } else {
        let first = report.lines.iter().find(|l| !l.satisfied);
        if let Some(line) = first {
            eprintln!("infeasible: {}: {}", line.name, line.detail);
        }
        EXIT_INFEASIBLE
    }
}
