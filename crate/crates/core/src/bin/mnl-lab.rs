//! Command-line driver: experiments, sweeps, verification suites and
//! adversarial instance generation.
//!
//! Exit codes: 0 success, 1 failed verification or runtime error,
//! 2 configuration or usage error.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use mnl_lab::adversary::InstanceSpec;
use mnl_lab::harness::{run_experiment, sweep, write_artifacts, ExperimentConfig, SweepConfig};
use mnl_lab::suites::Suite;
use mnl_lab::{Error, Result};

#[derive(Debug, Parser)]
#[command(
    name = "mnl-lab",
    version,
    about = "Non-stationary MNL-Bandit simulation laboratory"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an experiment config and write CSV and JSON artifacts.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `master_seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides `replications`.
        #[arg(long)]
        reps: Option<usize>,
        /// Overrides `output`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep one parameter of a base config and fit a log-log slope.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        reps: Option<usize>,
        /// Directory for `sweep.json`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a verification suite; exits 1 when any check fails.
    Verify {
        #[arg(long)]
        suite: Suite,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory for `verify_<suite>.json`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate an adversarial instance from an instance request.
    GenInstance {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory for `schedule.json` and `metadata.json`.
        #[arg(long)]
        out: PathBuf,
    },
}

/// Prints to stdout, ignoring a closed pipe.
fn say(text: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn print_json(value: &impl Serialize) {
    say(&serde_json::to_string_pretty(value).expect("serializable"));
}

fn write_json(dir: &Path, name: &str, value: &impl Serialize) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(name);
    let text = serde_json::to_string_pretty(value).expect("serializable");
    std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
}

fn execute(command: Command) -> Result<bool> {
    match command {
        Command::Run {
            config,
            seed,
            reps,
            out,
        } => {
            let mut config = ExperimentConfig::load(config)?;
            config.master_seed = seed.unwrap_or(config.master_seed);
            config.replications = reps.unwrap_or(config.replications);
            config.output = out.or(config.output);
            let (summary, records) = run_experiment(&config)?;
            if let Some(dir) = &config.output {
                write_artifacts(dir, &config, &summary, &records)?;
            }
            print_json(&summary);
            Ok(true)
        }
        Command::Sweep {
            config,
            seed,
            reps,
            out,
        } => {
            let mut config = SweepConfig::load(config)?;
            config.base.master_seed = seed.unwrap_or(config.base.master_seed);
            config.base.replications = reps.unwrap_or(config.base.replications);
            let report = sweep(&config)?;
            if let Some(dir) = out {
                write_json(&dir, "sweep.json", &report)?;
            }
            print_json(&report);
            Ok(true)
        }
        Command::Verify { suite, seed, out } => {
            let report = suite.run(seed)?;
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
                report.write(dir.join(format!("verify_{suite}.json")))?;
            }
            for check in &report.checks {
                say(&format!(
                    "{} {}",
                    if check.pass { "PASS" } else { "FAIL" },
                    check.name
                ));
            }
            say(&format!(
                "suite {suite}: {}",
                if report.pass { "PASS" } else { "FAIL" }
            ));
            Ok(report.pass)
        }
        Command::GenInstance { config, seed, out } => {
            let instance = InstanceSpec::load(config)?.generate(seed)?;
            instance.write(&out)?;
            print_json(&instance.metadata);
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
