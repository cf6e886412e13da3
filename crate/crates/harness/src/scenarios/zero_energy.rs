use lfsm_core::stats;
use lfsm_core::{
    delta_n, martingale_decomposition, sum_zero_energy, DecompositionOptions, FunctionClass, InnovationModel,
    ProcessSpec, RealFunction, WindowedSums,
};

use super::{describe, ladder_path, max_of, put, thresholds as th, Aggregate, Runner};
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::monte_carlo::{column, Outputs, RepRecord};
use crate::report::{PlotSeries, Verdict};

pub struct ZeroEnergyScaling {
    spec: ProcessSpec,
    model: InnovationModel,
    g: RealFunction,
    /// Lattice shifts `θ_j`.
    shifts: Vec<f64>,
    ladder: Vec<usize>,
    e_n: Vec<f64>,
    /// `factor · δ_n log n` per ladder entry.
    envelope: Vec<f64>,
    delta: Vec<f64>,
}

impl ZeroEnergyScaling {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let g = cfg.kernel().build()?;
        let l = cfg.params.lattice;
        let shifts: Vec<f64> = (0..l.size).map(|j| l.start + l.step * j as f64).collect();
        let members: Vec<RealFunction> = shifts.iter().map(|&t| g.shifted(t)).collect();
        let (lo, hi) = g.effective_range();
        let (lo, hi) = (lo + shifts[0], hi + shifts[shifts.len() - 1]);
        let ms = members.clone();
        let envelope_fn = RealFunction::custom("lattice-envelope", lo, hi, move |x| {
            ms.iter().map(|m| m.eval(x).abs()).fold(0.0, f64::max)
        })?;
        let class = FunctionClass::finite(members, envelope_fn);
        let rho = cfg.model.calibrate_norming();
        let mut e_n = Vec::new();
        let mut envelope = Vec::new();
        let mut delta = Vec::new();
        for &n in &cfg.n_ladder {
            let b = delta_n(cfg.params.beta, &class, n, &cfg.spec, rho)?;
            e_n.push(b.e_n);
            delta.push(b.delta);
            envelope.push(cfg.params.envelope_factor * b.envelope);
        }
        Ok(ZeroEnergyScaling {
            spec: cfg.spec.clone(),
            model: cfg.model,
            g,
            shifts,
            ladder: cfg.n_ladder.clone(),
            e_n,
            envelope,
            delta,
        })
    }
}

impl Runner for ZeroEnergyScaling {
    fn replicate(&self, _rep: usize, seed: u64) -> lfsm_core::Result<Outputs> {
        let mut o = Outputs::new();
        for (j, &n) in self.ladder.iter().enumerate() {
            let path = ladder_path(&self.spec, &self.model, n, seed, j)?;
            put(&mut o, format!("sum@{n}"), sum_zero_energy(&path, &self.g, false)?);
            let sums = WindowedSums::new(&path.x);
            let sup = self.shifts.iter().map(|&t| sums.kernel_sum(&self.g, t, 1.0).abs()).fold(0.0, f64::max);
            put(&mut o, format!("lattice_sup@{n}"), sup);
            put(&mut o, format!("envelope_ratio@{n}"), sup / self.envelope[j]);
        }
        Ok(o)
    }

    fn aggregate(&self, records: &[RepRecord]) -> Aggregate {
        let mut agg = Aggregate::default();
        let mut plot = PlotSeries::new(
            "zero_energy_variance",
            "variance of the zero-energy sum and the lattice envelope",
            &["n", "e_n", "variance", "lattice_sup_max", "envelope"],
        );
        let mut vars = Vec::new();
        let mut ratios = Vec::new();
        for (j, &n) in self.ladder.iter().enumerate() {
            let s = describe(&mut agg, records, &format!("sum@{n}"));
            let var = stats::variance(&s);
            let sup = max_of(&column(records, &format!("lattice_sup@{n}")));
            let ratio = max_of(&column(records, &format!("envelope_ratio@{n}")));
            agg.stat(format!("delta@{n}"), self.delta[j]);
            agg.stat(format!("e_n@{n}"), self.e_n[j]);
            agg.stat(format!("envelope_ratio@{n}.max"), ratio);
            plot.push(vec![n as f64, self.e_n[j], var, sup, self.envelope[j]]);
            vars.push(var);
            ratios.push(ratio);
        }
        let slope = stats::log_log_slope(&self.e_n, &vars);
        agg.stat("variance_slope", slope);
        agg.verdicts.push(Verdict::at_least("variance_slope_lower", slope, th::VARIANCE_SLOPE_LO));
        agg.verdicts.push(Verdict::at_most("variance_slope_upper", slope, th::VARIANCE_SLOPE_HI));
        agg.verdicts.push(Verdict::at_most("lattice_envelope", max_of(&ratios), 1.0));
        agg.plots.push(plot);
        agg
    }
}

pub struct DecompositionIdentity {
    spec: ProcessSpec,
    model: InnovationModel,
    f: RealFunction,
    opts: DecompositionOptions,
    ladder: Vec<usize>,
}

impl DecompositionIdentity {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        Ok(DecompositionIdentity {
            spec: cfg.spec.clone(),
            model: cfg.model,
            f: cfg.kernel().build()?,
            opts: DecompositionOptions { compute_v: cfg.params.compute_v, ..Default::default() },
            ladder: cfg.n_ladder.clone(),
        })
    }
}

impl Runner for DecompositionIdentity {
    fn replicate(&self, _rep: usize, seed: u64) -> lfsm_core::Result<Outputs> {
        let mut o = Outputs::new();
        for (j, &n) in self.ladder.iter().enumerate() {
            let path = ladder_path(&self.spec, &self.model, n, seed, j)?;
            let d = martingale_decomposition(&path, &self.f, &self.model, &self.opts)?;
            put(&mut o, format!("sum@{n}"), d.s_n);
            put(&mut o, format!("residual@{n}"), d.residual());
            put(&mut o, format!("quadrature_tol@{n}"), d.quadrature_tol);
            let acf = d.xi_autocorrelations();
            let ok = acf.iter().filter(|(k, a)| a.abs() <= 3.0 / ((n - k) as f64).sqrt()).count();
            put(&mut o, format!("acf_in_band@{n}"), ok as f64 / acf.len().max(1) as f64);
            for (k, m) in d.m.iter().enumerate() {
                put(&mut o, format!("m{k}@{n}"), *m);
            }
            for (k, u) in d.u.iter().enumerate() {
                put(&mut o, format!("u{k}@{n}"), *u);
            }
            for (k, v) in d.v.iter().enumerate() {
                put(&mut o, format!("v{k}@{n}"), *v);
            }
        }
        Ok(o)
    }

    fn aggregate(&self, records: &[RepRecord]) -> Aggregate {
        let mut agg = Aggregate::default();
        let mut worst: f64 = 0.0;
        let mut tower_worst: f64 = 0.0;
        for &n in &self.ladder {
            let s = column(records, &format!("sum@{n}"));
            let r = column(records, &format!("residual@{n}"));
            let rel = max_of(&s.iter().zip(&r).map(|(s, r)| r.abs() / (1.0 + s.abs())).collect::<Vec<_>>());
            agg.stat(format!("relative_residual@{n}.max"), rel);
            worst = max_of(&[worst, rel]);
            describe(&mut agg, records, &format!("acf_in_band@{n}"));
            let mut plot = PlotSeries::new(
                &format!("martingale_pieces_n{n}"),
                "per-lag means of M, U and V",
                &["k", "mean_m", "sd_m", "mean_u", "mean_v"],
            );
            for k in 0..n {
                let m = column(records, &format!("m{k}@{n}"));
                let u = column(records, &format!("u{k}@{n}"));
                let v = column(records, &format!("v{k}@{n}"));
                let (mu, mv) = (stats::mean(&u), stats::mean(&v));
                let sd_m = if m.len() > 1 { stats::std_dev(&m) } else { f64::NAN };
                plot.push(vec![k as f64, stats::mean(&m), sd_m, mu, if v.is_empty() { f64::NAN } else { mv }]);
                if self.opts.compute_v && !v.is_empty() {
                    let gap = if mu == mv { 0.0 } else { (mu - mv).abs() / mv.abs() };
                    agg.stat(format!("tower_gap_k{k}@{n}"), gap);
                    tower_worst = max_of(&[tower_worst, gap]);
                }
            }
            agg.plots.push(plot);
        }
        agg.verdicts.push(Verdict::at_most("reconstruction", worst, th::RECONSTRUCTION_RELATIVE));
        if self.opts.compute_v {
            agg.verdicts.push(Verdict::at_most("tower", tower_worst, th::TOWER_RELATIVE));
        }
        agg
    }
}
