//! Zero-energy sums, conditional expectations by Fourier inversion and the
//! telescoping martingale decomposition `S_n f = N_n f + Σ_k M_nk f`.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain_err, Error, Result};
use crate::function_space::{beta_norm, FunctionClass, LambdaGrid, Members, RealFunction};
use crate::innovations::{InnovationModel, NormingSequence};
use crate::linear_process::{cumulative_coefficients, PathBundle, ProcessSpec};
use crate::local_time::beta_bar;
use crate::quad::{composite_gauss_legendre, integrate, panels};
use crate::stats;

/// Largest `|∫g|` accepted by [`sum_zero_energy`].
pub const ZERO_ENERGY_GATE: f64 = 1e-10;

/// Default cap on the path length of a decomposition.
pub const DEFAULT_N_MAX: usize = 64;

/// `S_n g = Σ_t g(x_t)`; fails unless `|∫g| ≤ 1e−10` or `allow_nonzero` is set.
pub fn sum_zero_energy(path: &PathBundle, g: &RealFunction, allow_nonzero: bool) -> Result<f64> {
    if !allow_nonzero && g.integral().abs() > ZERO_ENERGY_GATE {
        return Err(Error::ZeroEnergyViolation(g.integral().abs()));
    }
    Ok(stats::kahan_sum(path.x.iter().map(|&x| g.eval(x))))
}

/// `ϑ(z1, z2) = E[(e^{−i z1 ε} − ψ(−z1))(e^{−i z2 ε} − ψ(−z2))] = ψ(−z1 − z2) − ψ(−z1) ψ(−z2)`.
pub fn theta(model: &InnovationModel, z1: f64, z2: f64) -> Complex64 {
    model.cf(-z1 - z2) - model.cf(-z1) * model.cf(-z2)
}

/// A quadrature value with its error certificate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Certified {
    pub value: f64,
    pub error: f64,
}

const TAIL_TOL: f64 = 1e-13;
const LAMBDA_CAP: f64 = 1e6;
const ABS_TOL: f64 = 1e-12;
const REL_TOL: f64 = 1e-10;

/// Fourier inversion of `E f(y + Σ_{j<m} a_j ε_j)` for a fixed model, function and
/// cumulative coefficient sequence.
#[derive(Debug, Clone)]
pub struct FourierInverter {
    model: InnovationModel,
    f: RealFunction,
    /// `a_j = Σ_{i ≤ j} φ_i`; constant beyond the last entry.
    a: Vec<f64>,
}

impl FourierInverter {
    pub fn new(model: &InnovationModel, f: &RealFunction, phi: &[f64]) -> Result<Self> {
        model.validate()?;
        model.cf_checked()?;
        if !f.has_closed_fhat() {
            return Err(domain_err(format!("function `{}` has no closed-form transform", f.name())));
        }
        if phi.is_empty() {
            return Err(domain_err("coefficient list is empty"));
        }
        Ok(FourierInverter { model: *model, f: f.clone(), a: cumulative_coefficients(phi) })
    }

    /// `a_j`, held constant past the truncation lag.
    pub fn a(&self, j: usize) -> f64 {
        self.a[j.min(self.a.len() - 1)]
    }

    /// `Π_{j<m} ψ(−λ a_j)`.
    fn cf_product(&self, lambda: f64, m: usize) -> Complex64 {
        let mut p = Complex64::new(1.0, 0.0);
        for j in 0..m {
            p *= self.model.cf(-lambda * self.a(j));
            if p.norm_sqr() < 1e-300 {
                return Complex64::new(0.0, 0.0);
            }
        }
        p
    }

    fn envelope(&self, lambda: f64, m: usize) -> f64 {
        let mut e = self.f.fhat_envelope(lambda);
        for j in 0..m {
            e *= self.model.cf_envelope(lambda * self.a(j));
        }
        e
    }

    /// Truncation point beyond which the integrand envelope is negligible.
    fn cutoff(&self, m: usize) -> Option<f64> {
        let mut l = 1.0;
        while l <= LAMBDA_CAP {
            if self.envelope(l, m) * l <= TAIL_TOL {
                return Some(l);
            }
            l *= 2.0;
        }
        None
    }

    fn integrability_error(&self, m: usize) -> Error {
        let min_k = (m + 1..=m + 64).find(|&k| self.cutoff(k).is_some());
        Error::Integrability {
            reason: format!("transform times {m}-fold cf product does not decay fast enough"),
            min_k,
        }
    }

    /// `E f(y + Σ_{j<m} a_j ε'_j)` with independent copies `ε'_j`; `m ≥ 1`.
    pub fn expect(&self, y: f64, m: usize) -> Result<Certified> {
        if m == 0 {
            return Ok(Certified { value: self.f.eval(y), error: 0.0 });
        }
        let cut = self.cutoff(m).ok_or_else(|| self.integrability_error(m))?;
        // Conjugate symmetry halves the line: (1/2π)∫_R = (1/π)∫_0^∞ Re.
        let oscillations = (y.abs() * cut / (2.0 * PI)).ceil() as usize;
        let breaks = panels(0.0, cut, oscillations.clamp(4, 2000));
        let r = integrate(
            |l| (self.f.fhat(l) * self.cf_product(l, m) * Complex64::from_polar(1.0, -l * y)).re,
            &breaks,
            ABS_TOL,
            REL_TOL,
        );
        Ok(Certified { value: r.value / PI, error: r.error / PI + self.envelope(cut, m) * cut / PI })
    }
}

/// Weight of `ε_i` in `x_s`, for the truncated filter.
fn weight(inv: &FourierInverter, s: usize, i: i64) -> f64 {
    let lag = (s as i64 - i) as usize;
    if i <= 0 {
        inv.a(lag) - inv.a((-i) as usize)
    } else {
        inv.a(lag)
    }
}

/// The `F_u`-measurable part of `x_s` (for `u < s`).
fn known_part(path: &PathBundle, inv: &FourierInverter, s: usize, u: usize) -> f64 {
    let k = path.truncation as i64;
    stats::kahan_sum((1 - k..=u as i64).map(|i| path.eps_at(i) * weight(inv, s, i)))
}

fn check_path(path: &PathBundle) -> Result<()> {
    if path.eps.len() != path.n + path.truncation || path.phi.is_empty() {
        return Err(domain_err("path carries no innovation record"));
    }
    Ok(())
}

/// `E_t f(x_{t+k})` for a simulated path; `t + k` may exceed the path length
/// only if `k` is at least one, as the future innovations are integrated out.
pub fn conditional_expectation(
    model: &InnovationModel,
    path: &PathBundle,
    t: usize,
    k: usize,
    f: &RealFunction,
) -> Result<Certified> {
    check_path(path)?;
    if k == 0 {
        return Err(domain_err("horizon k must be at least 1"));
    }
    if t > path.n {
        return Err(domain_err(format!("conditioning time {t} exceeds the path length {}", path.n)));
    }
    let inv = FourierInverter::new(model, f, &path.phi)?;
    inv.expect(known_part(path, &inv, t + k, t), k)
}

/// Options of [`martingale_decomposition`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecompositionOptions {
    pub n_max: usize,
    /// Convergence target of the tensor rule behind `V_nk`.
    pub tensor_tol: f64,
    pub compute_v: bool,
}

impl Default for DecompositionOptions {
    fn default() -> Self {
        DecompositionOptions { n_max: DEFAULT_N_MAX, tensor_tol: 1e-8, compute_v: true }
    }
}

/// The pieces of `S_n f = N_n f + Σ_k M_nk f`.
#[derive(Debug, Clone, PartialEq)]
pub struct MartingaleDecomposition {
    pub n: usize,
    /// `S_n f` summed directly.
    pub s_n: f64,
    /// `N_n f = Σ_t E_0 f(x_t)`.
    pub n_n: f64,
    /// `M_nk f`, `k = 0..n−1`.
    pub m: Vec<f64>,
    /// `xi[k][t − 1] = ξ_{kt} f` for `t = 1..n−k`.
    pub xi: Vec<Vec<f64>>,
    /// `U_nk = Σ_t ξ_{kt}²`.
    pub u: Vec<f64>,
    /// `V_nk = Σ_t E_{t−1} ξ_{kt}²`; empty when not requested.
    pub v: Vec<f64>,
    /// Largest error certificate over all conditional expectations.
    pub quadrature_tol: f64,
}

/// Serializable digest of a decomposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionSummary {
    pub n: usize,
    pub s_n: f64,
    pub n_n: f64,
    pub residual: f64,
    pub quadrature_tol: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl MartingaleDecomposition {
    /// `S_n f − N_n f − Σ_k M_nk f`.
    pub fn residual(&self) -> f64 {
        self.s_n - self.n_n - stats::kahan_sum(self.m.iter().copied())
    }

    pub fn summary(&self) -> DecompositionSummary {
        DecompositionSummary {
            n: self.n,
            s_n: self.s_n,
            n_n: self.n_n,
            residual: self.residual(),
            quadrature_tol: self.quadrature_tol,
            u: self.u.clone(),
            v: self.v.clone(),
        }
    }

    /// Lag-1 autocorrelation of `{ξ_{kt}}_t` for every `k` with at least three terms.
    pub fn xi_autocorrelations(&self) -> Vec<(usize, f64)> {
        self.xi
            .iter()
            .enumerate()
            .filter(|(_, row)| row.len() >= 3)
            .map(|(k, row)| (k, stats::lag1_autocorrelation(row)))
            .collect()
    }

    /// CSV with columns `k,t,xi`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "k,t,xi")?;
        for (k, row) in self.xi.iter().enumerate() {
            for (i, x) in row.iter().enumerate() {
                writeln!(w, "{k},{},{x}", i + 1)?;
            }
        }
        Ok(())
    }
}

/// Returns `(U, V)`.
pub fn quadratic_variation(decomp: &MartingaleDecomposition) -> (Vec<f64>, Vec<f64>) {
    (decomp.u.clone(), decomp.v.clone())
}

/// Decomposes `S_n f` along a simulated path.
pub fn martingale_decomposition(
    path: &PathBundle,
    f: &RealFunction,
    model: &InnovationModel,
    opts: &DecompositionOptions,
) -> Result<MartingaleDecomposition> {
    check_path(path)?;
    let n = path.n;
    if n > opts.n_max {
        return Err(Error::Resource(format!(
            "decomposition needs O(n^2) inversions; n = {n} exceeds n_max = {}",
            opts.n_max
        )));
    }
    let inv = FourierInverter::new(model, f, &path.phi)?;
    // cond[u][s] = E_u f(x_s) for 0 ≤ u ≤ s ≤ n (u = s gives f(x_s)).
    let mut cond = vec![vec![0.0; n + 1]; n + 1];
    let mut tol: f64 = 0.0;
    for s in 1..=n {
        cond[s][s] = f.eval(path.x_at(s));
        for u in 0..s {
            let c = inv.expect(known_part(path, &inv, s, u), s - u)?;
            cond[u][s] = c.value;
            tol = tol.max(c.error);
        }
    }
    let xi: Vec<Vec<f64>> =
        (0..n).map(|k| (1..=n - k).map(|t| cond[t][t + k] - cond[t - 1][t + k]).collect()).collect();
    let m = xi.iter().map(|row| stats::kahan_sum(row.iter().copied())).collect();
    let u = xi.iter().map(|row| stats::kahan_sum(row.iter().map(|x| x * x))).collect();
    let v = if opts.compute_v {
        (0..n)
            .map(|k| {
                let ys: Vec<f64> = (1..=n - k).map(|t| known_part(path, &inv, t + k, t - 1)).collect();
                let vals = conditional_xi_squares(&inv, k, &ys, opts.tensor_tol)?;
                Ok(stats::kahan_sum(vals))
            })
            .collect::<Result<Vec<f64>>>()?
    } else {
        Vec::new()
    };
    Ok(MartingaleDecomposition {
        n,
        s_n: stats::kahan_sum((1..=n).map(|s| cond[s][s])),
        n_n: stats::kahan_sum((1..=n).map(|s| cond[0][s])),
        m,
        xi,
        u,
        v,
        quadrature_tol: tol,
    })
}

const TENSOR_ORDER: usize = 16;
const TENSOR_MAX_PANELS: usize = 64;

/// `E_{t−1} ξ_{kt}²` for each known part `y_t` of `x_{t+k}` at time `t − 1`:
///
/// `(2π)^{−2} ∬ h(λ1) h(λ2) e^{−i(λ1+λ2)y} ϑ(λ1 a_k, λ2 a_k) dλ1 dλ2`,
/// `h(λ) = f̂(λ) Π_{j<k} ψ(−λ a_j)`, by a tensor Gauss–Legendre rule whose
/// panel count doubles until successive values agree to `tol`.
pub fn conditional_xi_squares(inv: &FourierInverter, k: usize, ys: &[f64], tol: f64) -> Result<Vec<f64>> {
    let cut = inv.cutoff(k).ok_or_else(|| inv.integrability_error(k))?;
    let ak = inv.a(k);
    let mut prev: Option<Vec<f64>> = None;
    let mut count = 8;
    while count <= TENSOR_MAX_PANELS {
        let (nodes, weights) = composite_gauss_legendre(-cut, cut, count, TENSOR_ORDER);
        let h: Vec<Complex64> =
            nodes.iter().zip(&weights).map(|(&l, &w)| inv.f.fhat(l) * inv.cf_product(l, k) * w).collect();
        let size = nodes.len();
        let mut b = vec![Complex64::new(0.0, 0.0); size * size];
        for i in 0..size {
            for j in 0..size {
                b[i * size + j] = h[i] * h[j] * theta(&inv.model, nodes[i] * ak, nodes[j] * ak);
            }
        }
        let vals: Vec<f64> = ys
            .iter()
            .map(|&y| {
                let c: Vec<Complex64> = nodes.iter().map(|&l| Complex64::from_polar(1.0, -l * y)).collect();
                let mut acc = Complex64::new(0.0, 0.0);
                for i in 0..size {
                    let row = &b[i * size..(i + 1) * size];
                    let inner: Complex64 = row.iter().zip(&c).map(|(bij, cj)| bij * cj).sum();
                    acc += c[i] * inner;
                }
                // A nonnegative quadratic form in exact arithmetic; clip rounding noise.
                (acc.re / (4.0 * PI * PI)).max(0.0)
            })
            .collect();
        if let Some(p) = &prev {
            let diff = p.iter().zip(&vals).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            if diff <= tol {
                return Ok(vals);
            }
        }
        prev = Some(vals);
        count *= 2;
    }
    Err(Error::Integrability {
        reason: format!("tensor rule for lag {k} did not reach tolerance {tol:e}"),
        min_k: None,
    })
}

/// `δ_n(β, F)` with its inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaBound {
    pub delta: f64,
    /// `δ_n log n`, the predicted order of `sup_F |S_n f|`.
    pub envelope: f64,
    pub sup_norm: f64,
    pub l1_norm: f64,
    pub l2_norm: f64,
    pub beta_norm: f64,
    /// Set if some member has nonzero integral, so its `[β]` norm is infinite.
    pub beta_norm_unbounded: bool,
    pub d_n: f64,
    pub e_n: f64,
}

/// Number of parameter values at which a parametric class is probed for `‖F‖_[β]`.
const PARAMETRIC_PROBES: usize = 65;

/// `‖F‖_∞ + e_n^{1/2}(‖F‖_1 + ‖F‖_2) + e_n d_n^{−β} ‖F‖_[β]`.
pub fn delta_n(
    beta: f64,
    class: &FunctionClass,
    n: usize,
    spec: &ProcessSpec,
    rho: NormingSequence,
) -> Result<DeltaBound> {
    let h = spec.hurst();
    let bar = beta_bar(h);
    if !(beta > 0.0) {
        return Err(domain_err(format!("beta must be positive, got {beta}")));
    }
    if beta >= bar {
        return Err(Error::OutOfScope(format!(
            "beta = {beta} is not below {bar} for H = {h}; the modified bound for this range is not implemented"
        )));
    }
    let nc = spec.norming_constants(rho, spec.horizon(n))?;
    let d_n = nc.d(n)?;
    let e_n = nc.e(n)?;
    let (sup, l1, l2) = class.norms();
    let grid = LambdaGrid::default();
    let members: Vec<RealFunction> = match &class.members {
        Members::Finite(ms) => ms.clone(),
        Members::Parametric(p) => (0..PARAMETRIC_PROBES)
            .map(|i| {
                let t = p.theta.0 + (p.theta.1 - p.theta.0) * i as f64 / (PARAMETRIC_PROBES - 1) as f64;
                (p.member)(t)
            })
            .collect(),
        Members::SmoothBall { .. } => {
            return Err(Error::OutOfScope("[beta] norm of a smooth ball is not computed".into()));
        }
    };
    let mut bn: f64 = 0.0;
    let mut unbounded = false;
    for f in &members {
        let est = beta_norm(f, beta, &grid)?;
        bn = bn.max(est.value);
        unbounded |= est.unbounded_at_origin;
    }
    let delta = sup + e_n.sqrt() * (l1 + l2) + e_n * d_n.powf(-beta) * bn;
    Ok(DeltaBound {
        delta,
        envelope: delta * (n as f64).ln(),
        sup_norm: sup,
        l1_norm: l1,
        l2_norm: l2,
        beta_norm: bn,
        beta_norm_unbounded: unbounded,
        d_n,
        e_n,
    })
}

/// Moment-growth normalization of [`orlicz_moment_proxy`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrliczKind {
    /// `max_p ‖Z‖_p / p!^{1/p}`.
    Tau1,
    /// `max_p ‖Z‖_{2p} / (3p)!^{1/(2p)}`.
    Tau23,
}

pub const MIN_ORLICZ_SAMPLES: usize = 1000;

fn factorial(m: u32) -> f64 {
    (1..=m).map(f64::from).product()
}

/// Moment proxy over `p = 1..4`; only meaningful for monotone comparisons.
pub fn orlicz_moment_proxy(samples: &[f64], kind: OrliczKind) -> Result<f64> {
    if samples.len() < MIN_ORLICZ_SAMPLES {
        return Err(Error::StatisticalPower(format!(
            "{} samples, at least {MIN_ORLICZ_SAMPLES} needed",
            samples.len()
        )));
    }
    let norm =
        |q: u32| stats::mean(&samples.iter().map(|z| z.abs().powi(q as i32)).collect::<Vec<_>>()).powf(1.0 / q as f64);
    Ok((1..=4u32)
        .map(|p| match kind {
            OrliczKind::Tau1 => norm(p) / factorial(p).powf(1.0 / p as f64),
            OrliczKind::Tau23 => norm(2 * p) / factorial(3 * p).powf(1.0 / (2 * p) as f64),
        })
        .fold(0.0, f64::max))
}

/// Exponential rate `γ` in a fit `|v_k| ≈ C e^{−γ k}`, skipping zero values.
pub fn fit_decay_rate(ks: &[f64], values: &[f64]) -> f64 {
    let (x, y): (Vec<f64>, Vec<f64>) =
        ks.iter().zip(values).filter(|(_, v)| v.abs() > 0.0).map(|(k, v)| (*k, v.abs().ln())).unzip();
    -stats::ols(&x, &y).slope
}

/// `(inf, sup)` of `|a_l| / |c_k|` over `⌊k/2⌋ ≤ l ≤ k`.
pub fn coefficient_ratio_bounds(a: &[f64], c_k: f64, k: usize) -> (f64, f64) {
    (k / 2..=k).map(|l| a[l].abs() / c_k.abs()).fold((f64::INFINITY, 0.0), |(lo, hi), r| (lo.min(r), hi.max(r)))
}

/// Smallest `k_0` such that `a_lo ≤ |a_l|/|c_k| ≤ a_hi` for all `k_0 < k ≤ k_max`
/// and `⌊k/2⌋ ≤ l ≤ k`; `None` if the sandwich fails at `k_max` itself.
pub fn k0_diagnostic(
    spec: &ProcessSpec,
    rho: NormingSequence,
    k_max: usize,
    a_lo: f64,
    a_hi: f64,
) -> Result<Option<usize>> {
    if k_max < 1 {
        return Err(domain_err("k_max must be at least 1"));
    }
    let horizon = k_max.max(spec.horizon(k_max));
    let phi = spec.coefficients(horizon)?;
    let mut a = cumulative_coefficients(&phi);
    let last = *a.last().expect("nonempty");
    a.resize(k_max + 1, last);
    let nc = spec.norming_constants(rho, horizon)?;
    let mut k0 = 0;
    for k in 1..=k_max {
        let (lo, hi) = coefficient_ratio_bounds(&a, nc.c(k), k);
        if !(lo >= a_lo && hi <= a_hi) {
            k0 = k;
        }
    }
    Ok(if k0 == k_max { None } else { Some(k0) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian_walk(n: usize, seed: u64) -> (InnovationModel, PathBundle) {
        let model = InnovationModel::gaussian();
        let spec = ProcessSpec::random_walk(2.0).unwrap();
        (model, PathBundle::simulate(&spec, &model, n, seed).unwrap())
    }

    #[test]
    fn zero_energy_hand_example() {
        let g = RealFunction::shifted_diff(&RealFunction::triangular(), 0.0, 1.0);
        let p = PathBundle::from_values(vec![0.5, 2.0], 1.0, 1.0).unwrap();
        assert_eq!(sum_zero_energy(&p, &g, false).unwrap(), 0.0);
        assert_eq!(sum_zero_energy(&p, &RealFunction::zero(), false).unwrap(), 0.0);
        let err = sum_zero_energy(&p, &RealFunction::triangular(), false);
        assert!(matches!(err, Err(Error::ZeroEnergyViolation(_))));
        assert!(sum_zero_energy(&p, &RealFunction::triangular(), true).is_ok());
    }

    #[test]
    fn gaussian_convolution_example() {
        // Unit-variance steps, f(x) = exp(−x²/2), y = 0, one step ahead.
        let model = InnovationModel::gaussian_with_sd(1.0).unwrap();
        let f = RealFunction::gaussian().scaled((2.0 * PI).sqrt());
        let inv = FourierInverter::new(&model, &f, &[1.0]).unwrap();
        let v = inv.expect(0.0, 1).unwrap();
        assert!((v.value - 0.5f64.sqrt()).abs() < 1e-10);
        assert!(v.error < 1e-9);
    }

    #[test]
    fn inversion_matches_gaussian_smoothing() {
        // E φ(y + σZ) is the N(0, 1 + σ²) density at y.
        let model = InnovationModel::gaussian();
        let f = RealFunction::gaussian();
        let inv = FourierInverter::new(&model, &f, &[1.0]).unwrap();
        for &(y, m) in &[(0.3, 1usize), (-2.0, 3), (5.0, 7)] {
            let var = 1.0 + 2.0 * m as f64;
            let want = (-y * y / (2.0 * var)).exp() / (2.0 * PI * var).sqrt();
            assert!((inv.expect(y, m).unwrap().value - want).abs() < 1e-11);
        }
    }

    #[test]
    fn one_step_telescope() {
        let (model, p) = gaussian_walk(1, 3);
        let d = martingale_decomposition(&p, &RealFunction::gaussian(), &model, &Default::default()).unwrap();
        assert_eq!(d.xi.len(), 1);
        assert!(d.residual().abs() <= d.quadrature_tol.max(1e-15));
        assert_eq!(d.u[0], d.xi[0][0] * d.xi[0][0]);
    }

    #[test]
    fn decomposition_identity_and_signs() {
        let (model, p) = gaussian_walk(12, 5);
        let d = martingale_decomposition(&p, &RealFunction::gaussian(), &model, &Default::default()).unwrap();
        assert!(d.residual().abs() <= 1e-6 * (1.0 + d.s_n.abs()));
        assert!(d.u.iter().chain(&d.v).all(|x| *x >= 0.0));
        let zero = martingale_decomposition(&p, &RealFunction::zero(), &model, &Default::default());
        // The zero function has a closed-form (vanishing) transform.
        if let Ok(z) = zero {
            assert!(z.u.iter().chain(&z.v).all(|x| *x == 0.0));
        }
    }

    #[test]
    fn conditional_square_matches_direct_gaussian_quadrature() {
        // E_{t−1} ξ² = E[g(y + a_k ε)²] − (E g(y + a_k ε))², g(z) = E f(z + future).
        let model = InnovationModel::gaussian();
        let f = RealFunction::gaussian();
        let inv = FourierInverter::new(&model, &f, &[1.0]).unwrap();
        let k = 2;
        let y = 0.7;
        let got = conditional_xi_squares(&inv, k, &[y], 1e-10).unwrap()[0];
        // g(z) = N(0, 1 + 2k) density; ε ~ N(0, 2).
        let var_g = 1.0 + 2.0 * k as f64;
        let g = |z: f64| (-z * z / (2.0 * var_g)).exp() / (2.0 * PI * var_g).sqrt();
        let dens = |e: f64| (-e * e / 4.0).exp() / (4.0 * PI).sqrt();
        let m2 = integrate(|e| g(y + e).powi(2) * dens(e), &panels(-20.0, 20.0, 40), 1e-15, 1e-13).value;
        let m1 = integrate(|e| g(y + e) * dens(e), &panels(-20.0, 20.0, 40), 1e-15, 1e-13).value;
        assert!((got - (m2 - m1 * m1)).abs() < 1e-9, "{got} vs {}", m2 - m1 * m1);
    }

    #[test]
    fn decomposition_size_cap() {
        let (model, p) = gaussian_walk(65, 1);
        let err = martingale_decomposition(&p, &RealFunction::gaussian(), &model, &Default::default());
        assert!(matches!(err, Err(Error::Resource(_))));
    }

    #[test]
    fn heavy_tail_short_horizon_reports_integrability() {
        // Two-point innovations never damp a slowly decaying transform.
        let model = InnovationModel::new(2.0, 0.0, crate::innovations::Family::TwoPoint, 1.0).unwrap();
        let f = RealFunction::indicator(-0.5, 0.5).unwrap();
        let inv = FourierInverter::new(&model, &f, &[1.0]).unwrap();
        assert!(matches!(inv.expect(0.0, 1), Err(Error::Integrability { .. })));
    }

    #[test]
    fn delta_n_examples() {
        let spec = ProcessSpec::random_walk(2.0).unwrap();
        let tri = FunctionClass::singleton(RealFunction::triangular());
        let d = delta_n(0.4, &tri, 10_000, &spec, NormingSequence::constant(1.0)).unwrap();
        assert!((d.e_n - 100.0).abs() < 1e-9 && (d.d_n - 100.0).abs() < 1e-9);
        let want = 1.0 + 10.0 * (1.0 + (2.0f64 / 3.0).sqrt()) + 100.0 * 100f64.powf(-0.4) * d.beta_norm;
        assert!((d.delta - want).abs() < 1e-9 * want);
        assert!((10.0 * (1.0 + (2.0f64 / 3.0).sqrt()) - 18.165).abs() < 1e-3);
        assert!((100.0 * 100f64.powf(-0.4) - 15.849).abs() < 1e-3);
        let d1 = delta_n(0.4, &tri, 1, &spec, NormingSequence::constant(1.0)).unwrap();
        assert!((d1.delta - (1.0 + 1.0 + (2.0f64 / 3.0).sqrt() + d1.beta_norm)).abs() < 1e-12);
        assert!(matches!(delta_n(0.5, &tri, 100, &spec, NormingSequence::constant(1.0)), Err(Error::OutOfScope(_))));
    }

    #[test]
    fn orlicz_proxy_examples() {
        assert!(orlicz_moment_proxy(&[0.0; 10], OrliczKind::Tau1).is_err());
        assert_eq!(orlicz_moment_proxy(&[0.0; 1000], OrliczKind::Tau1).unwrap(), 0.0);
        let a = orlicz_moment_proxy(&[1.5; 1000], OrliczKind::Tau23).unwrap();
        let b = orlicz_moment_proxy(&[3.0; 1000], OrliczKind::Tau23).unwrap();
        assert!((b - 2.0 * a).abs() < 1e-12);
        // Constant c: max_p c/p!^{1/p} is attained at p = 1.
        assert_eq!(orlicz_moment_proxy(&[2.0; 1000], OrliczKind::Tau1).unwrap(), 2.0);
    }

    #[test]
    fn theta_vanishes_on_axes() {
        let m = InnovationModel::exact_stable(1.5, 0.3).unwrap();
        assert!(theta(&m, 0.0, 2.0).norm() < 1e-15);
        // ϑ(z, −z) = 1 − |ψ(z)|² is a variance.
        let v = theta(&m, 0.8, -0.8);
        assert!(v.im.abs() < 1e-15 && v.re > 0.0);
    }

    #[test]
    fn k0_for_random_walk_is_zero() {
        let spec = ProcessSpec::random_walk(2.0).unwrap();
        assert_eq!(k0_diagnostic(&spec, NormingSequence::constant(1.0), 50, 0.5, 2.0).unwrap(), Some(0));
        let ar = ProcessSpec::short_memory(2.0, vec![1.0, -0.5]).unwrap();
        // a_0 = 1 against c = 0.5 breaks an upper bound of 1.5 until l ≥ 1.
        assert_eq!(k0_diagnostic(&ar, NormingSequence::constant(1.0), 20, 0.5, 1.5).unwrap(), Some(1));
    }

    #[test]
    fn decay_rate_fit() {
        let ks: Vec<f64> = (1..10).map(f64::from).collect();
        let v: Vec<f64> = ks.iter().map(|k| 3.0 * (-0.7 * k).exp()).collect();
        assert!((fit_decay_rate(&ks, &v) - 0.7).abs() < 1e-12);
    }
}
