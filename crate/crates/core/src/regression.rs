//! Nadaraya–Watson regression on an integrated covariate, bandwidth rules
//! and uniform errors on the support sets `A_n^ε`.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{config_err, domain_err, Error, Result};
use crate::function_space::RealFunction;
use crate::innovations::NormingSequence;
use crate::linear_process::{PathBundle, ProcessSpec};
use crate::local_time::{SupportSet, WindowedSums};
use crate::stats;

/// Regression function `m_0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "kebab-case")]
pub enum TargetFunction {
    Constant {
        value: f64,
    },
    /// `x / (1 + x²)`.
    Rational,
}

impl TargetFunction {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            TargetFunction::Constant { value } => value,
            TargetFunction::Rational => x / (1.0 + x * x),
        }
    }
}

/// Disturbances `u_t` with marginal standard deviation `sd`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "kebab-case")]
pub enum NoiseModel {
    None,
    Iid { sd: f64 },
    Ar1 { sd: f64, rho: f64 },
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseModel::None => Ok(()),
            NoiseModel::Iid { sd } if sd >= 0.0 && sd.is_finite() => Ok(()),
            NoiseModel::Ar1 { sd, rho } if sd >= 0.0 && sd.is_finite() && rho.abs() <= 0.5 => Ok(()),
            other => Err(config_err(format!("invalid noise model {other:?} (need sd >= 0, |rho| <= 0.5)"))),
        }
    }

    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<f64>> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let std = Normal::new(0.0, 1.0).expect("unit normal");
        Ok(match *self {
            NoiseModel::None => vec![0.0; n],
            NoiseModel::Iid { sd } => (0..n).map(|_| sd * std.sample(&mut rng)).collect(),
            NoiseModel::Ar1 { sd, rho } => {
                let innov = sd * (1.0 - rho * rho).sqrt();
                let mut u = sd * std.sample(&mut rng);
                (0..n)
                    .map(|_| {
                        let out = u;
                        u = rho * u + innov * std.sample(&mut rng);
                        out
                    })
                    .collect()
            }
        })
    }
}

/// Observations `y_t = m_0(x_t) + u_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionSample {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub m0: TargetFunction,
    pub noise: NoiseModel,
    pub d_n: f64,
    pub e_n: f64,
}

impl RegressionSample {
    /// Responses along `path` with noise drawn from its own stream.
    pub fn generate(path: &PathBundle, m0: TargetFunction, noise: NoiseModel, seed: u64) -> Result<Self> {
        let u = noise.sample(path.n, seed)?;
        let y = path.x.iter().zip(&u).map(|(&x, e)| m0.eval(x) + e).collect();
        Ok(RegressionSample { x: path.x.clone(), y, m0, noise, d_n: path.d_n, e_n: path.e_n })
    }

    pub fn from_data(x: Vec<f64>, y: Vec<f64>, m0: TargetFunction, d_n: f64, e_n: f64) -> Result<Self> {
        if x.len() != y.len() || x.is_empty() {
            return Err(domain_err("covariates and responses must be nonempty and of equal length"));
        }
        Ok(RegressionSample { x, y, m0, noise: NoiseModel::None, d_n, e_n })
    }

    /// The first `n` observations.
    pub fn prefix(&self, n: usize, d_n: f64, e_n: f64) -> Self {
        RegressionSample { x: self.x[..n].to_vec(), y: self.y[..n].to_vec(), d_n, e_n, ..*self }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// How the bandwidth is realized from a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "kebab-case")]
pub enum BandwidthRule {
    Fixed {
        h: f64,
    },
    /// `scale · IQR(x_1..x_n) · n^exponent`.
    Iqr {
        scale: f64,
        exponent: f64,
    },
    /// `scale · n^exponent`.
    Power {
        scale: f64,
        exponent: f64,
    },
}

impl Default for BandwidthRule {
    fn default() -> Self {
        BandwidthRule::Iqr { scale: 1.0, exponent: -0.2 }
    }
}

impl BandwidthRule {
    pub fn realize(&self, x: &[f64]) -> Result<f64> {
        let n = x.len() as f64;
        let h = match *self {
            BandwidthRule::Fixed { h } => h,
            BandwidthRule::Iqr { scale, exponent } => scale * stats::iqr(x) * n.powf(exponent),
            BandwidthRule::Power { scale, exponent } => scale * n.powf(exponent),
        };
        if !(h > 0.0 && h.is_finite()) {
            return Err(domain_err(format!("bandwidth rule {self:?} realized h = {h}")));
        }
        Ok(h)
    }
}

/// Estimates on a grid of states.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub x_grid: Vec<f64>,
    /// `NaN` where the denominator vanishes.
    pub m_hat: Vec<f64>,
    /// `Σ_t K_h(x_t − x) = Σ_t h^{−1} K((x_t − x)/h)`.
    pub denominator: Vec<f64>,
    pub defined: Vec<bool>,
    pub h_realized: f64,
    pub e_n: f64,
}

impl FitResult {
    /// CSV with columns `x,m_hat,denominator,in_support`.
    pub fn write_csv<W: Write>(&self, mut w: W, support: Option<&SupportSet>) -> std::io::Result<()> {
        writeln!(w, "x,m_hat,denominator,in_support")?;
        for i in 0..self.x_grid.len() {
            let x = self.x_grid[i];
            let inside = support.is_none_or(|s| s.contains(x));
            writeln!(w, "{x},{},{},{}", self.m_hat[i], self.denominator[i], u8::from(inside))?;
        }
        Ok(())
    }
}

/// `m̂(x) = Σ K_h(x_t − x) y_t / Σ K_h(x_t − x)` for a nonnegative kernel.
pub fn nadaraya_watson(
    sample: &RegressionSample,
    k: &RealFunction,
    rule: &BandwidthRule,
    x_grid: &[f64],
) -> Result<FitResult> {
    if !k.is_nonnegative() || !(k.integral() > 0.0) {
        return Err(domain_err(format!("kernel `{}` must be nonnegative with positive mass", k.name())));
    }
    let h = rule.realize(&sample.x)?;
    let sums = WindowedSums::with_responses(&sample.x, &sample.y);
    let mut m_hat = Vec::with_capacity(x_grid.len());
    let mut denominator = Vec::with_capacity(x_grid.len());
    let mut defined = Vec::with_capacity(x_grid.len());
    for &x in x_grid {
        let (s0, s1) = sums.weighted_sums(k, x, h);
        denominator.push(s0 / h);
        if s0 > 0.0 {
            m_hat.push(s1 / s0);
            defined.push(true);
        } else {
            m_hat.push(f64::NAN);
            defined.push(false);
        }
    }
    Ok(FitResult { x_grid: x_grid.to_vec(), m_hat, denominator, defined, h_realized: h, e_n: sample.e_n })
}

/// Empirical check of `h_n = o(d_n)` and `h_n^{−1} log² n = o(e_n)` along a ladder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandwidthAssessment {
    pub ns: Vec<usize>,
    pub h: Vec<f64>,
    /// Log-log slope of `h_n` against `n`.
    pub slope: f64,
    /// `h_n / d_n`.
    pub ratio_upper: Vec<f64>,
    /// `log² n / (h_n e_n)`.
    pub ratio_lower: Vec<f64>,
    /// Open window `(H − 1, H)` of admissible power exponents.
    pub exponent_window: (f64, f64),
    pub admissible: bool,
}

pub fn bandwidth_check(
    ns: &[usize],
    h_values: &[f64],
    spec: &ProcessSpec,
    rho: NormingSequence,
) -> Result<BandwidthAssessment> {
    if ns.len() != h_values.len() {
        return Err(domain_err("ladder and bandwidths differ in length"));
    }
    if ns.len() < 3 {
        return Err(Error::StatisticalPower(format!("{} ladder points, at least 3 needed", ns.len())));
    }
    if ns.windows(2).any(|w| w[1] <= w[0]) || h_values.iter().any(|h| !(*h > 0.0)) {
        return Err(domain_err("ladder must be strictly increasing with positive bandwidths"));
    }
    let mut upper = Vec::with_capacity(ns.len());
    let mut lower = Vec::with_capacity(ns.len());
    for (&n, &h) in ns.iter().zip(h_values) {
        let nc = spec.norming_constants(rho, spec.horizon(n))?;
        let l = (n as f64).ln();
        upper.push(h / nc.d(n)?);
        lower.push(l * l / (h * nc.e(n)?));
    }
    let decreasing = |v: &[f64]| v.windows(2).all(|w| w[1] < w[0]);
    let nf: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let hh = spec.hurst();
    Ok(BandwidthAssessment {
        ns: ns.to_vec(),
        h: h_values.to_vec(),
        slope: stats::log_log_slope(&nf, h_values),
        admissible: decreasing(&upper) && decreasing(&lower),
        ratio_upper: upper,
        ratio_lower: lower,
        exponent_window: (hh - 1.0, hh),
    })
}

/// Supremum error and denominator floor over the grid points inside `A_n^ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformError {
    pub sup_error: f64,
    pub inf_denominator: f64,
    pub points: usize,
    /// `inf_denominator ≥ ε e_n (1 − tol)`.
    pub denominator_bound_holds: bool,
}

/// Relative slack allowed for interpolating the support field between grid nodes.
pub const INTERPOLATION_TOL: f64 = 0.05;

pub fn uniform_error(fit: &FitResult, m0: &TargetFunction, support: &SupportSet) -> Result<UniformError> {
    let mut sup: f64 = 0.0;
    let mut inf = f64::INFINITY;
    let mut points = 0;
    for i in 0..fit.x_grid.len() {
        let x = fit.x_grid[i];
        if !fit.defined[i] || !support.contains(x) {
            continue;
        }
        points += 1;
        sup = sup.max((fit.m_hat[i] - m0.eval(x)).abs());
        inf = inf.min(fit.denominator[i]);
    }
    if points == 0 {
        return Err(Error::EmptySupport(support.epsilon));
    }
    Ok(UniformError {
        sup_error: sup,
        inf_denominator: inf,
        points,
        denominator_bound_holds: inf >= support.epsilon * fit.e_n * (1.0 - INTERPOLATION_TOL),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::innovations::InnovationModel;
    use crate::local_time::{local_time_field, support_set, uniform_grid};
    use proptest::prelude::*;

    fn walk(n: usize, seed: u64) -> PathBundle {
        let spec = ProcessSpec::random_walk(2.0).unwrap();
        PathBundle::simulate(&spec, &InnovationModel::gaussian(), n, seed).unwrap()
    }

    #[test]
    fn constant_target_is_exact() {
        let p = walk(2000, 1);
        let s = RegressionSample::generate(&p, TargetFunction::Constant { value: 2.5 }, NoiseModel::None, 9).unwrap();
        let grid: Vec<f64> = uniform_grid(-3.0, 3.0, 0.25).iter().map(|a| a * p.d_n).collect();
        let fit = nadaraya_watson(&s, &RealFunction::epanechnikov(), &BandwidthRule::default(), &grid).unwrap();
        assert!(fit.defined.iter().any(|d| *d));
        for (m, d) in fit.m_hat.iter().zip(&fit.defined) {
            if *d {
                assert!((m - 2.5).abs() <= 1e-12);
            } else {
                assert!(m.is_nan());
            }
        }
    }

    #[test]
    fn single_observation() {
        let s = RegressionSample::from_data(vec![0.3], vec![-1.25], TargetFunction::Rational, 1.0, 1.0).unwrap();
        let fit = nadaraya_watson(&s, &RealFunction::triangular(), &BandwidthRule::Fixed { h: 0.5 }, &[0.3]).unwrap();
        assert_eq!(fit.m_hat[0], -1.25);
    }

    #[test]
    fn bandwidth_examples() {
        let spec = ProcessSpec::random_walk(2.0).unwrap();
        let rho = NormingSequence::constant(1.0);
        let ns = [1usize << 10, 1 << 12, 1 << 14, 1 << 16];
        let pow = |g: f64| ns.iter().map(|&n| (n as f64).powf(g)).collect::<Vec<_>>();
        let a = bandwidth_check(&ns, &pow(0.2), &spec, rho).unwrap();
        assert!(a.admissible);
        assert!((a.slope - 0.2).abs() < 1e-12);
        assert_eq!(a.exponent_window, (-0.5, 0.5));
        assert!(!bandwidth_check(&ns, &pow(1.0), &spec, rho).unwrap().admissible);
        let inv_log: Vec<f64> = ns.iter().map(|&n| 1.0 / (n as f64).ln()).collect();
        assert!(bandwidth_check(&ns, &inv_log, &spec, rho).unwrap().admissible);
        assert!(matches!(bandwidth_check(&ns[..2], &pow(0.2)[..2], &spec, rho), Err(Error::StatisticalPower(_))));
    }

    #[test]
    fn uniform_error_edges() {
        let p = walk(4000, 2);
        let s = RegressionSample::generate(&p, TargetFunction::Constant { value: 1.0 }, NoiseModel::None, 3).unwrap();
        let k = RealFunction::epanechnikov();
        let rule = BandwidthRule::default();
        let h = rule.realize(&s.x).unwrap();
        let a_grid = uniform_grid(-3.0, 3.0, 1.0 / 64.0);
        let x_grid: Vec<f64> = a_grid.iter().map(|a| a * p.d_n).collect();
        let fit = nadaraya_watson(&s, &k, &rule, &x_grid).unwrap();
        let field = local_time_field(&p, &k, h, &a_grid).unwrap();
        // A far grid point has zero denominator and stays out of the sup at ε = 0.
        assert!(fit.defined.iter().any(|d| !*d));
        let all = support_set(&field, &p, 0.0).unwrap();
        let r = uniform_error(&fit, &s.m0, &all).unwrap();
        assert_eq!(r.sup_error, 0.0);
        let supp = support_set(&field, &p, 0.1).unwrap();
        assert!(uniform_error(&fit, &s.m0, &supp).unwrap().denominator_bound_holds);
        let empty = support_set(&field, &p, 1e6).unwrap();
        assert!(matches!(uniform_error(&fit, &s.m0, &empty), Err(Error::EmptySupport(_))));
    }

    #[test]
    fn noise_models() {
        assert!(NoiseModel::Ar1 { sd: 1.0, rho: 0.7 }.validate().is_err());
        let u = NoiseModel::Ar1 { sd: 1.0, rho: 0.5 }.sample(200_000, 4).unwrap();
        assert!((stats::variance(&u) - 1.0).abs() < 0.02);
        assert!((stats::lag1_autocorrelation(&u) - 0.5).abs() < 0.01);
        assert_eq!(NoiseModel::None.sample(3, 0).unwrap(), vec![0.0; 3]);
    }

    proptest! {
        #[test]
        fn rescaling_and_convexity(seed in 0u64..500, c in 0.1f64..10.0) {
            let p = walk(500, seed);
            let s = RegressionSample::generate(&p, TargetFunction::Rational, NoiseModel::Iid { sd: 0.2 }, seed + 1).unwrap();
            let k = RealFunction::triangular();
            let rule = BandwidthRule::Fixed { h: 2.0 };
            let grid: Vec<f64> = uniform_grid(-2.0, 2.0, 0.1).iter().map(|a| a * p.d_n).collect();
            let a = nadaraya_watson(&s, &k, &rule, &grid).unwrap();
            let b = nadaraya_watson(&s, &k.scaled(c), &rule, &grid).unwrap();
            let sums = WindowedSums::with_responses(&s.x, &s.y);
            for i in 0..grid.len() {
                prop_assert_eq!(a.defined[i], b.defined[i]);
                if a.defined[i] {
                    prop_assert!((a.m_hat[i] - b.m_hat[i]).abs() <= 1e-12 * (1.0 + a.m_hat[i].abs()));
                    let ys = sums.window_responses(&k, grid[i], 2.0);
                    let (lo, hi) = ys.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), y| (l.min(*y), h.max(*y)));
                    prop_assert!(a.m_hat[i] >= lo - 1e-12 && a.m_hat[i] <= hi + 1e-12);
                }
            }
        }

        #[test]
        fn denominator_matches_local_time(seed in 0u64..500) {
            let p = walk(800, seed);
            let s = RegressionSample::generate(&p, TargetFunction::Rational, NoiseModel::None, 0).unwrap();
            let k = RealFunction::epanechnikov();
            let h = 1.7;
            let a_grid = uniform_grid(-2.0, 2.0, 0.05);
            let x_grid: Vec<f64> = a_grid.iter().map(|a| a * p.d_n).collect();
            let fit = nadaraya_watson(&s, &k, &BandwidthRule::Fixed { h }, &x_grid).unwrap();
            let field = local_time_field(&p, &k, h, &a_grid).unwrap();
            for i in 0..a_grid.len() {
                let want = p.e_n * field.values[i];
                prop_assert!((fit.denominator[i] - want).abs() <= 1e-12 * (1.0 + want.abs()));
            }
        }
    }
}
