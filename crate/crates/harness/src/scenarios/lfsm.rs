use lfsm_core::stats;
use lfsm_core::{LfsmParams, LfsmSimulator};

use super::{put, thresholds as th, Aggregate, Runner};
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::monte_carlo::{column, split_seed, Outputs, RepRecord};
use crate::report::{PlotSeries, Verdict};

/// Gaussian LFSM checks: `Var X(1) = 2` on the Lévy line `H = 1/α`, and the
/// `2H` growth of `Var X(r)` at the configured `H`. The truncation ladder only
/// reports how these move with the past cutoff `T`.
pub struct LfsmSanity {
    params: LfsmParams,
    levy: LfsmSimulator,
    main: LfsmSimulator,
    ladder: Vec<(f64, LfsmSimulator)>,
}

impl LfsmSanity {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let p = cfg.params.lfsm;
        let levy = LfsmSimulator::new(LfsmParams { h: 1.0 / p.alpha, ..p })?;
        let ladder = cfg
            .params
            .truncation_ladder
            .iter()
            .map(|&t| Ok((t, LfsmSimulator::new(LfsmParams { truncation: t, ..p })?)))
            .collect::<Result<_>>()?;
        Ok(LfsmSanity { params: p, levy, main: LfsmSimulator::new(p)?, ladder })
    }

    fn slope(&self, records: &[RepRecord], suffix: &str) -> (f64, f64, Vec<f64>, Vec<f64>) {
        let m = self.params.grid;
        let r: Vec<f64> = (1..=m).map(|j| j as f64 / m as f64).collect();
        let var: Vec<f64> = (1..=m).map(|j| stats::variance(&column(records, &format!("x{j}{suffix}")))).collect();
        (stats::log_log_slope(&r, &var), var[m - 1], r, var)
    }
}

impl Runner for LfsmSanity {
    fn replicate(&self, _rep: usize, seed: u64) -> lfsm_core::Result<Outputs> {
        let mut o = Outputs::new();
        let b = self.levy.sample(split_seed(seed, 0));
        put(&mut o, "levy_x1", b[b.len() - 1]);
        let x = self.main.sample(split_seed(seed, 1));
        put(&mut o, "x0", x[0].abs().max(b[0].abs()));
        for (j, v) in x.iter().enumerate().skip(1) {
            put(&mut o, format!("x{j}"), *v);
        }
        for (j, (t, sim)) in self.ladder.iter().enumerate() {
            let x = sim.sample(split_seed(seed, 2 + j as u64));
            for (i, v) in x.iter().enumerate().skip(1) {
                put(&mut o, format!("x{i}_T{t}"), *v);
            }
        }
        Ok(o)
    }

    fn aggregate(&self, records: &[RepRecord]) -> Aggregate {
        let mut agg = Aggregate::default();
        let m = self.params.grid;
        let var1 = stats::variance(&column(records, "levy_x1"));
        agg.stat("levy_variance_x1", var1);
        agg.stat("x0_max", column(records, "x0").iter().fold(0.0, |a: f64, b| a.max(*b)));
        let (slope, _, r, var) = self.slope(records, "");
        agg.stat("variance_slope", slope);
        agg.stat("variance_slope_target", 2.0 * self.params.h);
        let mut plot = PlotSeries::new(
            "lfsm_variance",
            "Var X(r) with the self-similar reference",
            &["r", "variance", "reference"],
        );
        for (ri, v) in r.iter().zip(&var) {
            plot.push(vec![*ri, *v, var[m - 1] * ri.powf(2.0 * self.params.h)]);
        }
        agg.verdicts.push(Verdict::at_most("levy_variance", (var1 / 2.0 - 1.0).abs(), th::LFSM_VARIANCE_RELATIVE));
        agg.verdicts.push(Verdict::at_most("variance_slope", (slope - 2.0 * self.params.h).abs(), th::LFSM_SLOPE));
        agg.plots.push(plot);
        let mut sens = PlotSeries::new(
            "lfsm_truncation",
            "Var X(1) and the variance slope against the past truncation T",
            &["T", "variance_x1", "variance_slope"],
        );
        let mut rows: Vec<(f64, f64, f64)> = self
            .ladder
            .iter()
            .map(|(t, _)| {
                let (s, v1, _, _) = self.slope(records, &format!("_T{t}"));
                agg.stat(format!("variance_slope_T{t}"), s);
                agg.stat(format!("variance_x1_T{t}"), v1);
                (*t, v1, s)
            })
            .collect();
        rows.push((self.params.truncation, var[m - 1], slope));
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (t, v1, s) in rows {
            sens.push(vec![t, v1, s]);
        }
        agg.plots.push(sens);
        agg
    }
}
