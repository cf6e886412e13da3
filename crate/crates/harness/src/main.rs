use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lfsm_harness::{default_workers, run_experiment, ExperimentConfig, HarnessError, Scenario};

#[derive(Parser)]
#[command(name = "lfsm", version, about = "Monte Carlo experiments for linear processes and their local times")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write summary.json, reps.csv and plots/.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// `dotted.key=value`, value parsed as JSON when possible.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        #[arg(long)]
        workers: Option<usize>,
        /// Replaces `master_seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Replaces the configured output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the scenario names.
    ListScenarios,
    /// Check a configuration without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
}

fn load(config: &Path, overrides: &[String], seed: Option<u64>) -> Result<ExperimentConfig, HarnessError> {
    let mut cfg = ExperimentConfig::load(config, overrides)?;
    if let Some(s) = seed {
        cfg.master_seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn fail(e: HarnessError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(if e.is_config() { 2 } else { 1 })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::ListScenarios => {
            for s in Scenario::ALL {
                println!("{:<24}{}", s.name(), s.description());
            }
            ExitCode::SUCCESS
        }
        Command::Validate { config, overrides } => match load(&config, &overrides, None) {
            Ok(cfg) => {
                println!("ok {} config_hash={}", cfg.scenario, cfg.hash());
                ExitCode::SUCCESS
            }
            Err(e) => fail(e),
        },
        Command::Run { config, overrides, workers, seed, out } => {
            let cfg = match load(&config, &overrides, seed) {
                Ok(c) => c,
                Err(e) => return fail(e),
            };
            let dir =
                out.or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("out").join(cfg.scenario.name()));
            let report = match run_experiment(&cfg, workers.unwrap_or_else(default_workers)) {
                Ok(r) => r,
                Err(e) => return fail(e),
            };
            if let Err(e) = report.write(&dir) {
                return fail(e);
            }
            let s = &report.summary;
            for v in &s.verdicts {
                let rel = if v.relation == lfsm_harness::report::Relation::AtMost { "<=" } else { ">=" };
                println!(
                    "{} {:<28} {:.6e} {rel} {:e}",
                    if v.pass { "PASS" } else { "FAIL" },
                    v.name,
                    v.value,
                    v.threshold
                );
            }
            println!("{} of {} replications succeeded; results in {}", s.successes, s.replications, dir.display());
            if s.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
    }
}
