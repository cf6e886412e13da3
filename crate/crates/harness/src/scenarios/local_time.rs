use lfsm_core::local_time::{increment_moments, local_time_at, mass_grid, uniform_grid};
use lfsm_core::stats;
use lfsm_core::{
    beta_bar, local_time_field, nadaraya_watson, support_set, uniform_error, BandwidthRule, Error, InnovationModel,
    LocalTimeField, ProcessSpec, RealFunction, RegressionSample, TargetFunction,
};
use statrs::function::erf::erf;

use super::{describe, ladder_path, max_of, put, thresholds as th, Aggregate, Runner};
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::monte_carlo::{column, Outputs, RepRecord};
use crate::report::{PlotSeries, Verdict};

pub struct MassIdentity {
    spec: ProcessSpec,
    model: InnovationModel,
    f: RealFunction,
    h: f64,
    refinement: usize,
    ladder: Vec<usize>,
}

impl MassIdentity {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        Ok(MassIdentity {
            spec: cfg.spec.clone(),
            model: cfg.model,
            f: cfg.kernel().build()?,
            h: cfg.params.h,
            refinement: cfg.params.mass_refinement,
            ladder: cfg.n_ladder.clone(),
        })
    }
}

impl Runner for MassIdentity {
    fn replicate(&self, _rep: usize, seed: u64) -> lfsm_core::Result<Outputs> {
        let mut o = Outputs::new();
        let mass = self.f.integral();
        for (j, &n) in self.ladder.iter().enumerate() {
            let path = ladder_path(&self.spec, &self.model, n, seed, j)?;
            let grid = mass_grid(&path, &self.f, self.h, self.refinement);
            let field = local_time_field(&path, &self.f, self.h, &grid)?;
            put(&mut o, format!("closed_form_error@{n}"), (field.closed_form_mass() - mass).abs());
            put(&mut o, format!("grid_error@{n}"), (field.trapezoid_mass() - mass).abs());
        }
        Ok(o)
    }

    fn aggregate(&self, records: &[RepRecord]) -> Aggregate {
        let mut agg = Aggregate::default();
        let mut plot =
            PlotSeries::new("mass_errors", "worst mass errors by path length", &["n", "closed_form", "grid"]);
        let (mut closed, mut grid) = (Vec::new(), Vec::new());
        for &n in &self.ladder {
            let c = max_of(&column(records, &format!("closed_form_error@{n}")));
            let g = max_of(&column(records, &format!("grid_error@{n}")));
            agg.stat(format!("closed_form_error@{n}.max"), c);
            agg.stat(format!("grid_error@{n}.max"), g);
            plot.push(vec![n as f64, c, g]);
            closed.push(c);
            grid.push(g);
        }
        agg.verdicts.push(Verdict::at_most("closed_form_mass", max_of(&closed), th::MASS_CLOSED_FORM));
        agg.verdicts.push(Verdict::at_most("grid_mass", max_of(&grid), th::MASS_GRID));
        agg.plots.push(plot);
        agg
    }
}

pub struct LocalTimeLaw {
    spec: ProcessSpec,
    model: InnovationModel,
    f: RealFunction,
    h: f64,
    a0: f64,
    ladder: Vec<usize>,
}

impl LocalTimeLaw {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        Ok(LocalTimeLaw {
            spec: cfg.spec.clone(),
            model: cfg.model,
            f: cfg.kernel().build()?,
            h: cfg.params.h,
            a0: cfg.params.a0,
            ladder: cfg.n_ladder.clone(),
        })
    }
}

/// `P(|N(0,1)|/√2 ≤ x) = erf(x)`, the law of the Brownian local time at 0
/// when `Var X(1) = 2`.
pub fn brownian_local_time_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        erf(x)
    }
}

impl Runner for LocalTimeLaw {
    fn replicate(&self, _rep: usize, seed: u64) -> lfsm_core::Result<Outputs> {
        let mut o = Outputs::new();
        for (j, &n) in self.ladder.iter().enumerate() {
            let path = ladder_path(&self.spec, &self.model, n, seed, j)?;
            put(&mut o, format!("local_time@{n}"), local_time_at(&path, &self.f, self.h, self.a0)?);
        }
        Ok(o)
    }

    fn aggregate(&self, records: &[RepRecord]) -> Aggregate {
        let mut agg = Aggregate::default();
        // The Brownian oracle only applies at a0 = 0; the kernel mass rescales it.
        let mass = self.f.integral();
        let target = mass / std::f64::consts::PI.sqrt();
        agg.stat("oracle_mean", target);
        let mut means =
            PlotSeries::new("local_time_mean", "mean local time at a0 by path length", &["n", "mean", "oracle"]);
        let mut last = (f64::NAN, f64::NAN, Vec::new());
        for &n in &self.ladder {
            let v = describe(&mut agg, records, &format!("local_time@{n}"));
            let m = stats::mean(&v);
            let ks = stats::ks_one_sample(&v.iter().map(|x| x / mass).collect::<Vec<_>>(), brownian_local_time_cdf);
            agg.stat(format!("ks_statistic@{n}"), ks.statistic);
            agg.stat(format!("ks_p_value@{n}"), ks.p_value);
            means.push(vec![n as f64, m, target]);
            last = (m, ks.p_value, v);
        }
        let (m, p, v) = last;
        agg.verdicts.push(Verdict::at_most("mean_relative_error", (m / target - 1.0).abs(), th::LAW_MEAN_RELATIVE));
        agg.verdicts.push(Verdict::at_least("ks_p_value", p, th::LAW_KS_LEVEL));
        let mut ecdf = PlotSeries::new(
            "local_time_ecdf",
            "empirical cdf of the local time at the largest n against erf",
            &["value", "empirical", "oracle"],
        );
        let s = stats::sorted(&v);
        for (i, x) in s.iter().enumerate() {
            ecdf.push(vec![*x, (i + 1) as f64 / s.len() as f64, brownian_local_time_cdf(x / mass)]);
        }
        agg.plots.push(means);
        agg.plots.push(ecdf);
        agg
    }
}

pub struct HolderIncrements {
    spec: ProcessSpec,
    model: InnovationModel,
    f: RealFunction,
    h: f64,
    a0: f64,
    gaps: Vec<f64>,
    beta: f64,
    ladder: Vec<usize>,
}

impl HolderIncrements {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let mut gaps = cfg.params.gaps.clone();
        gaps.sort_by(f64::total_cmp);
        Ok(HolderIncrements {
            spec: cfg.spec.clone(),
            model: cfg.model,
            f: cfg.kernel().build()?,
            h: cfg.params.h,
            a0: cfg.params.a0,
            gaps,
            beta: cfg.params.beta,
            ladder: cfg.n_ladder.clone(),
        })
    }

    fn gap_name(n: usize, g: f64) -> String {
        format!("local_time+{g}@{n}")
    }
}

impl Runner for HolderIncrements {
    fn replicate(&self, _rep: usize, seed: u64) -> lfsm_core::Result<Outputs> {
        let mut o = Outputs::new();
        for (j, &n) in self.ladder.iter().enumerate() {
            let path = ladder_path(&self.spec, &self.model, n, seed, j)?;
            put(&mut o, format!("local_time@{n}"), local_time_at(&path, &self.f, self.h, self.a0)?);
            for &g in &self.gaps {
                put(&mut o, Self::gap_name(n, g), local_time_at(&path, &self.f, self.h, self.a0 + g)?);
            }
        }
        Ok(o)
    }

    fn aggregate(&self, records: &[RepRecord]) -> Aggregate {
        let mut agg = Aggregate::default();
        let bar = beta_bar(self.spec.hurst());
        agg.stat("beta_bar", bar);
        agg.stat("beta_target", self.beta);
        let mut plot = PlotSeries::new(
            "holder_increments",
            "root second moment of local-time increments",
            &["n", "gap", "root_moment"],
        );
        let mut last_slope = f64::NAN;
        for &n in &self.ladder {
            let base = column(records, &format!("local_time@{n}"));
            let cols: Vec<Vec<f64>> = self.gaps.iter().map(|&g| column(records, &Self::gap_name(n, g))).collect();
            let mut a_grid = vec![self.a0];
            a_grid.extend(self.gaps.iter().map(|g| self.a0 + g));
            let fields: Vec<LocalTimeField> = (0..base.len())
                .map(|r| {
                    let mut values = vec![base[r]];
                    values.extend(cols.iter().map(|c| c[r]));
                    LocalTimeField {
                        a_grid: a_grid.clone(),
                        values,
                        f: self.f.clone(),
                        h: self.h,
                        n,
                        d_n: f64::NAN,
                        e_n: f64::NAN,
                    }
                })
                .collect();
            match increment_moments(&fields, self.a0, &self.gaps, 2) {
                Ok(rep) => {
                    agg.stat(format!("slope@{n}"), rep.slope);
                    for (g, m) in rep.gaps.iter().zip(&rep.root_moments) {
                        agg.stat(format!("root_moment+{g}@{n}"), *m);
                        plot.push(vec![n as f64, *g, *m]);
                    }
                    last_slope = rep.slope;
                }
                Err(e) => {
                    agg.stat(format!("slope@{n}"), f64::NAN);
                    debug_assert!(matches!(e, Error::StatisticalPower(_)), "{e}");
                }
            }
            // Moment-growth proxy of the increment norm, only with enough replications.
            for (g, c) in self.gaps.iter().zip(&cols) {
                let d: Vec<f64> = c.iter().zip(&base).map(|(a, b)| (a - b).abs()).collect();
                if let Ok(s) = lfsm_core::orlicz_moment_proxy(&d, lfsm_core::OrliczKind::Tau23) {
                    agg.stat(format!("orlicz_tau23+{g}@{n}"), s);
                }
            }
        }
        agg.verdicts.push(Verdict::at_least("holder_slope", last_slope, self.beta - th::HOLDER_SLOPE_SLACK));
        agg.plots.push(plot);
        agg
    }
}

pub struct SupportCoverage {
    spec: ProcessSpec,
    model: InnovationModel,
    kernel: RealFunction,
    bandwidth: BandwidthRule,
    a_grid: Vec<f64>,
    epsilons: Vec<f64>,
    target: f64,
    ladder: Vec<usize>,
}

impl SupportCoverage {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let g = cfg.params.grid;
        Ok(SupportCoverage {
            spec: cfg.spec.clone(),
            model: cfg.model,
            kernel: cfg.kernel().build()?,
            bandwidth: cfg.params.bandwidth,
            a_grid: uniform_grid(g.lo, g.hi, g.mesh),
            epsilons: cfg.params.epsilons.clone(),
            target: cfg.params.coverage_target,
            ladder: cfg.n_ladder.clone(),
        })
    }
}

impl Runner for SupportCoverage {
    fn replicate(&self, _rep: usize, seed: u64) -> lfsm_core::Result<Outputs> {
        let mut o = Outputs::new();
        for (j, &n) in self.ladder.iter().enumerate() {
            let path = ladder_path(&self.spec, &self.model, n, seed, j)?;
            let h = self.bandwidth.realize(&path.x)?;
            let field = local_time_field(&path, &self.kernel, h, &self.a_grid)?;
            let sample = RegressionSample::from_data(
                path.x.clone(),
                path.x.clone(),
                TargetFunction::Constant { value: 0.0 },
                path.d_n,
                path.e_n,
            )?;
            let x_grid: Vec<f64> = self.a_grid.iter().map(|a| a * path.d_n).collect();
            let fit = nadaraya_watson(&sample, &self.kernel, &BandwidthRule::Fixed { h }, &x_grid)?;
            put(&mut o, format!("h@{n}"), h);
            for &eps in &self.epsilons {
                let s = support_set(&field, &path, eps)?;
                put(&mut o, format!("coverage_{eps}@{n}"), s.coverage);
                let floor = match uniform_error(&fit, &sample.m0, &s) {
                    Ok(u) => u.inf_denominator / path.e_n,
                    Err(Error::EmptySupport(_)) => f64::NAN,
                    Err(e) => return Err(e),
                };
                put(&mut o, format!("denominator_floor_{eps}@{n}"), floor);
            }
        }
        Ok(o)
    }

    fn aggregate(&self, records: &[RepRecord]) -> Aggregate {
        let mut agg = Aggregate::default();
        let mut plot =
            PlotSeries::new("support_coverage", "mean coverage of the support set", &["n", "epsilon", "coverage"]);
        let n = *self.ladder.last().expect("nonempty ladder");
        let mut chosen = None;
        let mut best = f64::INFINITY;
        for &m in &self.ladder {
            describe(&mut agg, records, &format!("h@{m}"));
            for &eps in &self.epsilons {
                let c = stats::mean(&column(records, &format!("coverage_{eps}@{m}")));
                agg.stat(format!("coverage_{eps}@{m}.mean"), c);
                plot.push(vec![m as f64, eps, c]);
                if m == n {
                    best = best.min(c);
                    if chosen.is_none() && c <= self.target {
                        chosen = Some(eps);
                    }
                }
            }
        }
        agg.verdicts.push(Verdict::at_most("coverage_attained", best, self.target));
        let fraction = match chosen {
            Some(eps) => {
                agg.stat("epsilon_selected", eps);
                let floors = column(records, &format!("denominator_floor_{eps}@{n}"));
                let ok = floors.iter().filter(|f| **f >= th::FLOOR_FACTOR * eps).count();
                ok as f64 / floors.len().max(1) as f64
            }
            None => f64::NAN,
        };
        agg.verdicts.push(Verdict::at_least("denominator_floor", fraction, th::FLOOR_FRACTION));
        agg.plots.push(plot);
        agg
    }
}
