//! One runner per scenario: a per-replication step and an aggregation that
//! reads nothing but the records.

use std::collections::BTreeMap;

use lfsm_core::stats;
use lfsm_core::{InnovationModel, PathBundle, ProcessSpec};

use crate::config::{ExperimentConfig, Scenario};
use crate::error::Result;
use crate::monte_carlo::{column, split_seed, Outputs, RepRecord};
use crate::report::{PlotSeries, Verdict};

mod lfsm;
mod local_time;
mod norms;
mod regression;
mod zero_energy;

/// Thresholds of the scenario verdicts.
pub mod thresholds {
    pub const MASS_CLOSED_FORM: f64 = 1e-12;
    pub const MASS_GRID: f64 = 1e-3;
    pub const LAW_MEAN_RELATIVE: f64 = 0.05;
    pub const LAW_KS_LEVEL: f64 = 0.01;
    pub const RECONSTRUCTION_RELATIVE: f64 = 1e-6;
    pub const TOWER_RELATIVE: f64 = 0.05;
    pub const HOLDER_SLOPE_SLACK: f64 = 0.1;
    pub const VARIANCE_SLOPE_LO: f64 = 0.8;
    pub const VARIANCE_SLOPE_HI: f64 = 1.2;
    pub const NORM_GRID_TOL: f64 = 1e-8;
    pub const FLOOR_FACTOR: f64 = 0.95;
    pub const FLOOR_FRACTION: f64 = 0.95;
    pub const CONSTANT_FIT: f64 = 1e-12;
    pub const DECREASING_FRACTION: f64 = 0.8;
    pub const LFSM_VARIANCE_RELATIVE: f64 = 0.05;
    pub const LFSM_SLOPE: f64 = 0.1;
}

/// Statistics, verdicts and plot tables of a run.
#[derive(Debug, Clone, Default)]
pub struct Aggregate {
    pub statistics: BTreeMap<String, f64>,
    pub verdicts: Vec<Verdict>,
    pub plots: Vec<PlotSeries>,
}

impl Aggregate {
    pub fn stat(&mut self, name: impl Into<String>, value: f64) {
        self.statistics.insert(name.into(), value);
    }
}

pub trait Runner: Sync {
    fn replicate(&self, rep: usize, seed: u64) -> lfsm_core::Result<Outputs>;
    fn aggregate(&self, records: &[RepRecord]) -> Aggregate;
}

pub fn build(cfg: &ExperimentConfig) -> Result<Box<dyn Runner>> {
    Ok(match cfg.scenario {
        Scenario::MassIdentity => Box::new(local_time::MassIdentity::new(cfg)?),
        Scenario::LocalTimeLaw => Box::new(local_time::LocalTimeLaw::new(cfg)?),
        Scenario::HolderIncrements => Box::new(local_time::HolderIncrements::new(cfg)?),
        Scenario::SupportCoverage => Box::new(local_time::SupportCoverage::new(cfg)?),
        Scenario::ZeroEnergyScaling => Box::new(zero_energy::ZeroEnergyScaling::new(cfg)?),
        Scenario::DecompositionIdentity => Box::new(zero_energy::DecompositionIdentity::new(cfg)?),
        Scenario::NormInequalities => Box::new(norms::NormInequalities::new(cfg)?),
        Scenario::RegressionUniform => Box::new(regression::RegressionUniform::new(cfg)?),
        Scenario::LfsmSanity => Box::new(lfsm::LfsmSanity::new(cfg)?),
    })
}

pub(crate) fn put(o: &mut Outputs, name: impl Into<String>, value: f64) {
    o.push((name.into(), value));
}

/// Path `j` of a replication: ladder entries get independent sub-streams.
pub(crate) fn ladder_path(
    spec: &ProcessSpec,
    model: &InnovationModel,
    n: usize,
    seed: u64,
    j: usize,
) -> lfsm_core::Result<PathBundle> {
    PathBundle::simulate(spec, model, n, split_seed(seed, j as u64))
}

/// Mean, variance and quantiles of `name` as statistics `name.mean`, ...
pub(crate) fn describe(agg: &mut Aggregate, records: &[RepRecord], name: &str) -> Vec<f64> {
    let v = column(records, name);
    if !v.is_empty() {
        agg.stat(format!("{name}.mean"), stats::mean(&v));
        agg.stat(format!("{name}.variance"), if v.len() > 1 { stats::variance(&v) } else { 0.0 });
        agg.stat(format!("{name}.q05"), stats::quantile(&v, 0.05));
        agg.stat(format!("{name}.median"), stats::median(&v));
        agg.stat(format!("{name}.q95"), stats::quantile(&v, 0.95));
    }
    v
}

pub(crate) fn max_of(v: &[f64]) -> f64 {
    // NaN propagates so that a broken replication cannot pass silently.
    v.iter().fold(f64::NEG_INFINITY, |m, &x| if x.is_nan() || m.is_nan() { f64::NAN } else { m.max(x) })
}
