use lfsm_core::local_time::uniform_grid;
use lfsm_core::stats;
use lfsm_core::{
    bandwidth_check, local_time_field, nadaraya_watson, norming, support_set, uniform_error, BandwidthRule, Error,
    InnovationModel, NoiseModel, NormingSequence, PathBundle, ProcessSpec, RealFunction, RegressionSample,
    TargetFunction,
};

use super::{describe, max_of, put, thresholds as th, Aggregate, Runner};
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::monte_carlo::{column, split_seed, Outputs, RepRecord};
use crate::report::{PlotSeries, Verdict};

/// Nadaraya-Watson fits on nested prefixes of one path per replication, so
/// that the error sequence across the ladder is a within-path comparison.
pub struct RegressionUniform {
    spec: ProcessSpec,
    model: InnovationModel,
    rho: NormingSequence,
    kernel: RealFunction,
    bandwidth: BandwidthRule,
    target: TargetFunction,
    noise: NoiseModel,
    epsilon: f64,
    constant: f64,
    a_grid: Vec<f64>,
    ladder: Vec<usize>,
}

impl RegressionUniform {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let g = cfg.params.grid;
        Ok(RegressionUniform {
            spec: cfg.spec.clone(),
            model: cfg.model,
            rho: cfg.model.calibrate_norming(),
            kernel: cfg.kernel().build()?,
            bandwidth: cfg.params.bandwidth,
            target: cfg.params.target,
            noise: cfg.params.noise,
            epsilon: cfg.params.support_epsilon,
            constant: cfg.params.constant_value,
            a_grid: uniform_grid(g.lo, g.hi, g.mesh),
            ladder: cfg.n_ladder.clone(),
        })
    }
}

impl Runner for RegressionUniform {
    fn replicate(&self, _rep: usize, seed: u64) -> lfsm_core::Result<Outputs> {
        let mut o = Outputs::new();
        let n_max = *self.ladder.last().expect("nonempty ladder");
        let path = PathBundle::simulate(&self.spec, &self.model, n_max, split_seed(seed, 0))?;
        let full = RegressionSample::generate(&path, self.target, self.noise, split_seed(seed, 1))?;
        let flat = TargetFunction::Constant { value: self.constant };
        for &n in &self.ladder {
            let (_, d_n, e_n) = norming(&self.spec, self.rho, n)?;
            let prefix = PathBundle::from_values(path.x[..n].to_vec(), d_n, e_n)?;
            let sample = full.prefix(n, d_n, e_n);
            let x_grid: Vec<f64> = self.a_grid.iter().map(|a| a * d_n).collect();
            let fit = nadaraya_watson(&sample, &self.kernel, &self.bandwidth, &x_grid)?;
            let field = local_time_field(&prefix, &self.kernel, fit.h_realized, &self.a_grid)?;
            let support = support_set(&field, &prefix, self.epsilon)?;
            let (sup, floor) = match uniform_error(&fit, &self.target, &support) {
                Ok(u) => (u.sup_error, u.inf_denominator / e_n),
                Err(Error::EmptySupport(_)) => (f64::NAN, f64::NAN),
                Err(e) => return Err(e),
            };
            put(&mut o, format!("h@{n}"), fit.h_realized);
            put(&mut o, format!("sup_error@{n}"), sup);
            put(&mut o, format!("denominator_floor@{n}"), floor);
            put(&mut o, format!("coverage@{n}"), support.coverage);
            // Noiseless constant responses on the same covariates.
            let flat_sample = RegressionSample::from_data(sample.x.clone(), vec![self.constant; n], flat, d_n, e_n)?;
            let flat_fit = nadaraya_watson(&flat_sample, &self.kernel, &self.bandwidth, &x_grid)?;
            let err = flat_fit
                .m_hat
                .iter()
                .zip(&flat_fit.defined)
                .filter(|(_, d)| **d)
                .map(|(m, _)| (m - self.constant).abs())
                .fold(0.0, f64::max);
            put(&mut o, format!("constant_error@{n}"), err);
        }
        Ok(o)
    }

    fn aggregate(&self, records: &[RepRecord]) -> Aggregate {
        let mut agg = Aggregate::default();
        let mut plot = PlotSeries::new(
            "regression_uniform",
            "mean sup error on the support set and median bandwidth",
            &["n", "mean_sup_error", "median_h", "mean_coverage"],
        );
        let mut constant = Vec::new();
        let mut medians = Vec::new();
        for &n in &self.ladder {
            let e = describe(&mut agg, records, &format!("sup_error@{n}"));
            let h = describe(&mut agg, records, &format!("h@{n}"));
            let c = describe(&mut agg, records, &format!("coverage@{n}"));
            describe(&mut agg, records, &format!("denominator_floor@{n}"));
            constant.push(max_of(&column(records, &format!("constant_error@{n}"))));
            medians.push(stats::median(&h));
            plot.push(vec![n as f64, stats::mean(&e), stats::median(&h), stats::mean(&c)]);
        }
        let cols: Vec<Vec<f64>> = self.ladder.iter().map(|n| column(records, &format!("sup_error@{n}"))).collect();
        let reps = cols[0].len();
        let decreasing = (0..reps).filter(|&r| cols.windows(2).all(|w| w[1][r] < w[0][r])).count();
        let fraction = if reps == 0 { f64::NAN } else { decreasing as f64 / reps as f64 };
        agg.stat("decreasing_fraction", fraction);
        if let Ok(b) = bandwidth_check(&self.ladder, &medians, &self.spec, self.rho) {
            agg.stat("bandwidth_slope", b.slope);
            agg.stat("bandwidth_admissible", f64::from(u8::from(b.admissible)));
        }
        agg.verdicts.push(Verdict::at_most("constant_exact", max_of(&constant), th::CONSTANT_FIT));
        agg.verdicts.push(Verdict::at_least("sup_error_decreasing", fraction, th::DECREASING_FRACTION));
        agg.plots.push(plot);
        agg
    }
}
