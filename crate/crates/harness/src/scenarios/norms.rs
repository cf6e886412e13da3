use lfsm_core::function_space::library_kernels;
use lfsm_core::{beta_moment, beta_norm, LambdaGrid, RealFunction};

use super::{put, thresholds as th, Aggregate, Runner};
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::monte_carlo::{column, Outputs, RepRecord};
use crate::report::{PlotSeries, Verdict};

/// Grid checks of the Fourier-domain norm inequalities over the kernel
/// library and its shifted differences. Deterministic: every replication
/// repeats the same computation.
pub struct NormInequalities {
    betas: Vec<f64>,
    shift_gaps: Vec<f64>,
    grid: LambdaGrid,
}

impl NormInequalities {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let mut shift_gaps = cfg.params.shift_gaps.clone();
        shift_gaps.sort_by(f64::total_cmp);
        Ok(NormInequalities { betas: cfg.params.betas.clone(), shift_gaps, grid: LambdaGrid::default() })
    }
}

fn exceeds(value: f64, bound: f64) -> bool {
    !(value <= bound + th::NORM_GRID_TOL * bound.abs().max(1.0))
}

#[derive(Default)]
struct Tally {
    checks: usize,
    violations: usize,
    worst_ratio: f64,
}

impl Tally {
    fn check(&mut self, value: f64, bound: f64) {
        self.checks += 1;
        if exceeds(value, bound) {
            self.violations += 1;
        }
        if bound > 0.0 {
            self.worst_ratio = self.worst_ratio.max(value / bound);
        }
    }
}

impl Runner for NormInequalities {
    fn replicate(&self, _rep: usize, _seed: u64) -> lfsm_core::Result<Outputs> {
        let lambdas = self.grid.points(self.grid.per_decade);
        let (mut t1, mut t2, mut t3) = (Tally::default(), Tally::default(), Tally::default());
        let mut o = Outputs::new();
        for g in library_kernels() {
            let diffs: Vec<(f64, RealFunction)> =
                self.shift_gaps.iter().map(|&d| (d, RealFunction::shifted_diff(&g, 0.0, d))).collect();
            for &beta in &self.betas {
                // (i) on the frequency grid behind each estimate.
                let mut first = |f: &RealFunction| -> lfsm_core::Result<f64> {
                    let est = beta_norm(f, beta, &self.grid)?;
                    for &l in &lambdas {
                        let v = f.fhat(l).norm();
                        t1.check(v, f.l1_norm());
                        t1.check(v, l.powf(beta) * est.value);
                    }
                    Ok(est.value)
                };
                first(&g)?;
                for (d, f) in &diffs {
                    let est = first(f)?;
                    // (ii): zero-integral functions with a finite β-moment.
                    t2.check(est, 2f64.powf(1.0 - beta) * beta_moment(f, beta)?);
                    // (iii): shifted differences.
                    let bound = 2f64.powf(1.0 - beta) * d.powf(beta) * g.l1_norm();
                    t3.check(est, bound);
                    if g.name() == "triangular" {
                        put(&mut o, format!("triangular_norm_b{beta}_d{d}"), est);
                    }
                }
            }
        }
        for (name, t) in [("i", &t1), ("ii", &t2), ("iii", &t3)] {
            put(&mut o, format!("checks_{name}"), t.checks as f64);
            put(&mut o, format!("violations_{name}"), t.violations as f64);
            put(&mut o, format!("worst_ratio_{name}"), t.worst_ratio);
        }
        Ok(o)
    }

    fn aggregate(&self, records: &[RepRecord]) -> Aggregate {
        let mut agg = Aggregate::default();
        let mut total = 0.0;
        for name in ["i", "ii", "iii"] {
            let v = column(records, &format!("violations_{name}")).iter().sum::<f64>();
            let c = column(records, &format!("checks_{name}")).iter().sum::<f64>();
            let w = column(records, &format!("worst_ratio_{name}")).iter().fold(0.0, |a: f64, b| a.max(*b));
            agg.stat(format!("violations_{name}"), v);
            agg.stat(format!("checks_{name}"), c);
            agg.stat(format!("worst_ratio_{name}"), w);
            total += v;
        }
        if records.iter().all(|r| !r.is_ok()) {
            total = f64::NAN;
        }
        agg.verdicts.push(Verdict::at_most("norm_violations", total, 0.0));
        let mut plot = PlotSeries::new(
            "triangular_shift_norms",
            "grid estimate of the [beta] norm of triangular shifted differences with the shift bound",
            &["beta", "gap", "estimate", "bound"],
        );
        if let Some(r) = records.iter().find(|r| r.is_ok()) {
            for &beta in &self.betas {
                for &d in &self.shift_gaps {
                    if let Some(est) = r.get(&format!("triangular_norm_b{beta}_d{d}")) {
                        plot.push(vec![beta, d, est, 2f64.powf(1.0 - beta) * d.powf(beta)]);
                    }
                }
            }
        }
        agg.plots.push(plot);
        agg
    }
}
