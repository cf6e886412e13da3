//! Configuration-driven Monte Carlo runner for `lfsm-core`.
//!
//! A run validates an [`ExperimentConfig`], fans the master seed out to the
//! replications, runs them on a worker pool and aggregates the records in
//! replication order. Outputs do not depend on the number of workers.

// Negated comparisons are how NaN inputs get rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod monte_carlo;
pub mod report;
pub mod scenarios;

pub use config::{ExperimentConfig, Scenario};
pub use error::{HarnessError, Result};
pub use monte_carlo::{monte_carlo, split_seed, RepRecord};
pub use report::{read_reps_csv, Report, Summary, Verdict};

use report::FailureRecord;

/// Worker count used when none is given.
pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Validates `cfg`, runs every replication and aggregates the records.
pub fn run_experiment(cfg: &ExperimentConfig, workers: usize) -> Result<Report> {
    cfg.validate()?;
    let runner = scenarios::build(cfg)?;
    let records = monte_carlo(cfg.replications, cfg.master_seed, workers, &cfg.params.inject_failures, |r, s| {
        runner.replicate(r, s).map_err(|e| e.to_string())
    })?;
    Ok(assemble(cfg, runner.as_ref(), records))
}

/// Recomputes statistics and verdicts from records alone, e.g. those read
/// back from `reps.csv`.
pub fn recompute(cfg: &ExperimentConfig, records: Vec<RepRecord>) -> Result<Report> {
    cfg.validate()?;
    let runner = scenarios::build(cfg)?;
    Ok(assemble(cfg, runner.as_ref(), records))
}

fn assemble(cfg: &ExperimentConfig, runner: &dyn scenarios::Runner, records: Vec<RepRecord>) -> Report {
    let mut agg = runner.aggregate(&records);
    let failures: Vec<FailureRecord> = records
        .iter()
        .filter_map(|r| {
            r.outcome.as_ref().err().map(|m| FailureRecord { rep: r.rep, seed: r.seed, message: m.clone() })
        })
        .collect();
    agg.verdicts.push(Verdict::at_most("replications_completed", failures.len() as f64, 0.0));
    let pass = agg.verdicts.iter().all(|v| v.pass);
    let summary = Summary {
        scenario: cfg.scenario.name().to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: cfg.hash(),
        master_seed: cfg.master_seed,
        replications: records.len(),
        successes: records.len() - failures.len(),
        failures,
        statistics: agg.statistics,
        verdicts: agg.verdicts,
        pass,
    };
    Report { config: cfg.clone(), summary, records, plots: agg.plots }
}
