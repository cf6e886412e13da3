//! The local-time functional `L_n^f(a, h) = (e_n h)^{-1} Σ_t f((x_t − d_n a)/h)`,
//! occupation measures, reference local times of limit paths and the
//! support sets on which regression estimates are controlled.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{domain_err, Error, Result};
use crate::function_space::RealFunction;
use crate::linear_process::PathBundle;
use crate::stats;

/// Path values sorted once, so compactly supported kernels only touch the
/// points inside their window.
#[derive(Debug, Clone)]
pub struct WindowedSums {
    xs: Vec<f64>,
    ys: Option<Vec<f64>>,
}

impl WindowedSums {
    pub fn new(x: &[f64]) -> Self {
        WindowedSums { xs: stats::sorted(x), ys: None }
    }

    /// Covariates with attached responses, sorted jointly by covariate.
    pub fn with_responses(x: &[f64], y: &[f64]) -> Self {
        let mut idx: Vec<usize> = (0..x.len()).collect();
        idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(a.cmp(&b)));
        WindowedSums { xs: idx.iter().map(|&i| x[i]).collect(), ys: Some(idx.iter().map(|&i| y[i]).collect()) }
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn sorted_values(&self) -> &[f64] {
        &self.xs
    }

    fn window(&self, k: &RealFunction, center: f64, h: f64) -> (usize, usize) {
        let (lo, hi) = k.effective_range();
        let a = center + h * lo;
        let b = center + h * hi;
        (self.xs.partition_point(|&v| v < a), self.xs.partition_point(|&v| v <= b))
    }

    /// `Σ_t k((x_t − center)/h)`.
    pub fn kernel_sum(&self, k: &RealFunction, center: f64, h: f64) -> f64 {
        let (i, j) = self.window(k, center, h);
        self.xs[i..j].iter().map(|&x| k.eval((x - center) / h)).sum()
    }

    /// `(Σ_t k((x_t − c)/h), Σ_t k((x_t − c)/h) y_t)`; requires responses.
    pub fn weighted_sums(&self, k: &RealFunction, center: f64, h: f64) -> (f64, f64) {
        let ys = self.ys.as_ref().expect("responses attached");
        let (i, j) = self.window(k, center, h);
        let mut s0 = 0.0;
        let mut s1 = 0.0;
        for t in i..j {
            let w = k.eval((self.xs[t] - center) / h);
            s0 += w;
            s1 += w * ys[t];
        }
        (s0, s1)
    }

    /// Responses of the points in the kernel window around `center`.
    pub fn window_responses(&self, k: &RealFunction, center: f64, h: f64) -> &[f64] {
        let (i, j) = self.window(k, center, h);
        &self.ys.as_ref().expect("responses attached")[i..j]
    }
}

/// `L_n^f(a_j, h)` on a spatial grid.
#[derive(Debug, Clone)]
pub struct LocalTimeField {
    pub a_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub f: RealFunction,
    pub h: f64,
    pub n: usize,
    pub d_n: f64,
    pub e_n: f64,
}

/// Serializable summary of a field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSummary {
    pub kernel: String,
    pub h: f64,
    pub n: usize,
    pub d_n: f64,
    pub e_n: f64,
    pub grid_points: usize,
    pub max_value: f64,
    pub closed_form_mass: f64,
    pub trapezoid_mass: f64,
}

fn check_grid(a_grid: &[f64]) -> Result<()> {
    if a_grid.iter().any(|a| !a.is_finite()) {
        return Err(domain_err("spatial grid must be finite"));
    }
    if a_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(domain_err("spatial grid must be strictly increasing"));
    }
    Ok(())
}

/// Evaluates `L_n^f(·, h)` on `a_grid`.
pub fn local_time_field(path: &PathBundle, f: &RealFunction, h: f64, a_grid: &[f64]) -> Result<LocalTimeField> {
    let sums = WindowedSums::new(&path.x);
    local_time_field_with(&sums, path, f, h, a_grid)
}

/// As [`local_time_field`], reusing a sorted copy of the path.
pub fn local_time_field_with(
    sums: &WindowedSums,
    path: &PathBundle,
    f: &RealFunction,
    h: f64,
    a_grid: &[f64],
) -> Result<LocalTimeField> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(domain_err(format!("bandwidth must be positive, got {h}")));
    }
    check_grid(a_grid)?;
    let scale = 1.0 / (path.e_n * h);
    let values = a_grid.iter().map(|&a| scale * sums.kernel_sum(f, path.d_n * a, h)).collect();
    Ok(LocalTimeField { a_grid: a_grid.to_vec(), values, f: f.clone(), h, n: path.n, d_n: path.d_n, e_n: path.e_n })
}

/// `L_n^f(a, h)` at a single point.
pub fn local_time_at(path: &PathBundle, f: &RealFunction, h: f64, a: f64) -> Result<f64> {
    Ok(local_time_field(path, f, h, &[a])?.values[0])
}

/// Evenly spaced grid `lo, lo + mesh, ...` up to and including `hi` (rounded outward).
pub fn uniform_grid(lo: f64, hi: f64, mesh: f64) -> Vec<f64> {
    let k0 = (lo / mesh).floor() as i64;
    let k1 = (hi / mesh).ceil() as i64;
    (k0..=k1).map(|k| k as f64 * mesh).collect()
}

/// The default spatial grid `[−3, 3]` with mesh `2^{-7}`.
pub fn default_grid() -> Vec<f64> {
    uniform_grid(-3.0, 3.0, 1.0 / 128.0)
}

/// A grid with mesh `h/(m d_n)` covering the support of every summand.
///
/// For the triangular kernel the trapezoid rule on this grid reproduces the
/// integral exactly, by the partition-of-unity property of its translates.
pub fn mass_grid(path: &PathBundle, f: &RealFunction, h: f64, m: usize) -> Vec<f64> {
    let (lo, hi) = f.effective_range();
    let (xmin, xmax) = path.x.iter().fold((0.0f64, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
    let mesh = h / (m as f64 * path.d_n);
    uniform_grid((xmin + h * lo) / path.d_n - mesh, (xmax + h * hi) / path.d_n + mesh, mesh)
}

impl LocalTimeField {
    /// `n ∫f / (e_n d_n)`, the exact integral of the field over the real line.
    pub fn closed_form_mass(&self) -> f64 {
        self.n as f64 * self.f.integral() / (self.e_n * self.d_n)
    }

    /// Trapezoid rule over the grid.
    pub fn trapezoid_mass(&self) -> f64 {
        trapezoid(&self.a_grid, &self.values)
    }

    /// Linear interpolation of the field, zero outside the grid.
    pub fn value_at(&self, a: f64) -> f64 {
        let g = &self.a_grid;
        if g.is_empty() || a < g[0] || a > g[g.len() - 1] {
            return 0.0;
        }
        let i = g.partition_point(|&v| v <= a);
        if i == g.len() {
            return self.values[g.len() - 1];
        }
        if i == 0 {
            return self.values[0];
        }
        let t = (a - g[i - 1]) / (g[i] - g[i - 1]);
        self.values[i - 1] + t * (self.values[i] - self.values[i - 1])
    }

    /// Cumulative trapezoid integral `∫_{a_0}^{a_j} L`.
    pub fn cumulative(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.values.len());
        let mut acc = 0.0;
        out.push(0.0);
        for j in 1..self.values.len() {
            acc += 0.5 * (self.a_grid[j] - self.a_grid[j - 1]) * (self.values[j] + self.values[j - 1]);
            out.push(acc);
        }
        out
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(*v))
    }

    pub fn summary(&self) -> FieldSummary {
        FieldSummary {
            kernel: self.f.name().to_string(),
            h: self.h,
            n: self.n,
            d_n: self.d_n,
            e_n: self.e_n,
            grid_points: self.a_grid.len(),
            max_value: self.max_value(),
            closed_form_mass: self.closed_form_mass(),
            trapezoid_mass: self.trapezoid_mass(),
        }
    }

    /// CSV with columns `a,value`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "a,value")?;
        for (a, v) in self.a_grid.iter().zip(&self.values) {
            writeln!(w, "{a},{v}")?;
        }
        Ok(())
    }
}

fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    stats::kahan_sum(xs.windows(2).zip(ys.windows(2)).map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1])))
}

/// `μ_n(a) = n^{-1} #{t : x_t/d_n ≤ a}` on the grid.
pub fn occupation_cdf(path: &PathBundle, a_grid: &[f64]) -> Vec<f64> {
    let s = stats::sorted(&path.x);
    let n = s.len() as f64;
    a_grid.iter().map(|&a| s.partition_point(|&x| x / path.d_n <= a) as f64 / n).collect()
}

/// Occupation density of a path sampled at `r_j = j/m`, `j = 0..=m`, as a
/// histogram with bins `[a_j − w/2, a_j + w/2)` divided by the bin width.
///
/// The right-endpoint samples `X(r_1), ..., X(r_m)` carry time weight `1/m` each.
pub fn reference_local_time(path: &[f64], a_grid: &[f64], bin_width: f64) -> Result<Vec<f64>> {
    if !(bin_width > 0.0) {
        return Err(domain_err(format!("bin width must be positive, got {bin_width}")));
    }
    check_grid(a_grid)?;
    let samples = if path.len() > 1 { &path[1..] } else { path };
    let weight = 1.0 / (samples.len() as f64 * bin_width);
    let mut counts = vec![0usize; a_grid.len()];
    for &x in samples {
        // Last bin whose left edge is at or below x.
        let j = a_grid.partition_point(|&a| a - 0.5 * bin_width <= x);
        if j > 0 && x < a_grid[j - 1] + 0.5 * bin_width {
            counts[j - 1] += 1;
        }
    }
    Ok(counts.into_iter().map(|c| c as f64 * weight).collect())
}

/// `A_n^ε = {x : L_n(x/d_n) ≥ ε}` and the fraction of path points outside it.
#[derive(Debug, Clone)]
pub struct SupportSet {
    pub epsilon: f64,
    /// Fraction of `x_1, ..., x_n` outside the set.
    pub coverage: f64,
    a_grid: Vec<f64>,
    values: Vec<f64>,
    d_n: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportSummary {
    pub epsilon: f64,
    pub coverage: f64,
    pub grid_points_inside: usize,
}

impl SupportSet {
    /// Whether the state `x` (on the original scale) belongs to the set.
    pub fn contains(&self, x: f64) -> bool {
        if self.epsilon == 0.0 {
            return true;
        }
        let a = x / self.d_n;
        let g = &self.a_grid;
        if a < g[0] || a > g[g.len() - 1] {
            return false;
        }
        let i = g.partition_point(|&v| v <= a);
        let v = if i == g.len() {
            self.values[g.len() - 1]
        } else if i == 0 {
            self.values[0]
        } else {
            let t = (a - g[i - 1]) / (g[i] - g[i - 1]);
            self.values[i - 1] + t * (self.values[i] - self.values[i - 1])
        };
        v >= self.epsilon
    }

    pub fn summary(&self) -> SupportSummary {
        SupportSummary {
            epsilon: self.epsilon,
            coverage: self.coverage,
            grid_points_inside: self.a_grid.iter().filter(|&&a| self.contains(a * self.d_n)).count(),
        }
    }

    /// CSV with columns `a,value,inside`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "a,value,inside")?;
        for (a, v) in self.a_grid.iter().zip(&self.values) {
            writeln!(w, "{a},{v},{}", u8::from(self.contains(a * self.d_n)))?;
        }
        Ok(())
    }
}

pub fn support_set(field: &LocalTimeField, path: &PathBundle, epsilon: f64) -> Result<SupportSet> {
    if !(epsilon >= 0.0) {
        return Err(domain_err(format!("epsilon must be nonnegative, got {epsilon}")));
    }
    if field.a_grid.is_empty() {
        return Err(domain_err("field grid is empty"));
    }
    let mut s = SupportSet {
        epsilon,
        coverage: 0.0,
        a_grid: field.a_grid.clone(),
        values: field.values.clone(),
        d_n: field.d_n,
    };
    let outside = path.x.iter().filter(|&&x| !s.contains(x)).count();
    s.coverage = outside as f64 / path.n as f64;
    Ok(s)
}

/// `β̄_H = min((1 − H)/(2H), 1)`, the admissible Hölder order of the field.
pub fn beta_bar(h: f64) -> f64 {
    ((1.0 - h) / (2.0 * h)).min(1.0)
}

/// Empirical `E|L(a_0 + Δ) − L(a_0)|^p` over replications, for each gap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncrementReport {
    pub gaps: Vec<f64>,
    pub moments: Vec<f64>,
    /// `moments^{1/p}`.
    pub root_moments: Vec<f64>,
    /// Log-log slope of the root moments against the positive gaps.
    pub slope: f64,
    pub replications: usize,
    pub order: u32,
}

/// Minimum number of replications accepted by [`increment_moments`].
pub const MIN_INCREMENT_REPS: usize = 200;

/// Increment moments of replicated fields between `a0` and `a0 + gap`.
pub fn increment_moments(fields: &[LocalTimeField], a0: f64, gaps: &[f64], p: u32) -> Result<IncrementReport> {
    if fields.len() < MIN_INCREMENT_REPS {
        return Err(Error::StatisticalPower(format!(
            "{} replications, at least {MIN_INCREMENT_REPS} needed",
            fields.len()
        )));
    }
    if p == 0 || p % 2 == 1 {
        return Err(domain_err(format!("moment order must be even and positive, got {p}")));
    }
    let moments: Vec<f64> = gaps
        .iter()
        .map(|&g| {
            let d: Vec<f64> = fields.iter().map(|f| (f.value_at(a0 + g) - f.value_at(a0)).powi(p as i32)).collect();
            stats::mean(&d)
        })
        .collect();
    let root_moments: Vec<f64> = moments.iter().map(|m| m.powf(1.0 / p as f64)).collect();
    let (gx, gy): (Vec<f64>, Vec<f64>) =
        gaps.iter().zip(&root_moments).filter(|(g, m)| g.abs() > 0.0 && **m > 0.0).map(|(g, m)| (g.abs(), *m)).unzip();
    let slope = if gx.len() >= 2 { stats::log_log_slope(&gx, &gy) } else { f64::NAN };
    Ok(IncrementReport { gaps: gaps.to_vec(), moments, root_moments, slope, replications: fields.len(), order: p })
}
