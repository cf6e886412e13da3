//! Linear processes `x_t = Σ_{s≤t} v_s`, `v_t = Σ_k φ_k ε_{t−k}`, their
//! norming sequences, and a direct simulator for the limiting linear
//! fractional stable motion.

use std::io::Write;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{config_err, domain_err, Result};
use crate::innovations::{InnovationModel, NormingSequence, SlowlyVarying};
use crate::stats::kahan_sum;

/// Memory regime of the coefficient sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MemoryCase {
    /// Absolutely summable coefficients with nonzero sum.
    ShortMemory,
    /// `φ_k ∼ k^{H−1−1/α} π_k` with `H > 1/α`.
    LongMemory,
    /// `φ_k ∼ −k^{H−1−1/α} π_k` with `H < 1/α` and `Σ φ_k = 0`.
    AntiPersistent,
}

/// Coefficient law and memory parameters of the linear process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessSpec {
    pub case: MemoryCase,
    /// Self-similarity index; ignored (taken as `1/α`) for short memory.
    #[serde(default)]
    pub h: f64,
    pub alpha: f64,
    /// Explicit coefficients `φ_0, φ_1, ...` for short memory.
    #[serde(default)]
    pub phi: Vec<f64>,
    /// Slowly varying factor `π_k` for the long-memory and anti-persistent cases.
    #[serde(default)]
    pub pi: SlowlyVarying,
    /// Lag cutoff `K`; defaults to the path length.
    #[serde(default)]
    pub truncation: Option<usize>,
}

impl ProcessSpec {
    pub fn short_memory(alpha: f64, phi: Vec<f64>) -> Result<Self> {
        let s = ProcessSpec {
            case: MemoryCase::ShortMemory,
            h: 1.0 / alpha,
            alpha,
            phi,
            pi: SlowlyVarying::ONE,
            truncation: None,
        };
        s.validate()?;
        Ok(s)
    }

    /// `v_t = ε_t`, so `x_t` is a random walk.
    pub fn random_walk(alpha: f64) -> Result<Self> {
        Self::short_memory(alpha, vec![1.0])
    }

    pub fn long_memory(alpha: f64, h: f64) -> Result<Self> {
        let s = ProcessSpec {
            case: MemoryCase::LongMemory,
            h,
            alpha,
            phi: Vec::new(),
            pi: SlowlyVarying::ONE,
            truncation: None,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn anti_persistent(alpha: f64, h: f64) -> Result<Self> {
        let s = ProcessSpec { case: MemoryCase::AntiPersistent, ..Self::long_memory_unchecked(alpha, h) };
        s.validate()?;
        Ok(s)
    }

    fn long_memory_unchecked(alpha: f64, h: f64) -> Self {
        ProcessSpec {
            case: MemoryCase::LongMemory,
            h,
            alpha,
            phi: Vec::new(),
            pi: SlowlyVarying::ONE,
            truncation: None,
        }
    }

    pub fn with_truncation(mut self, k: usize) -> Self {
        self.truncation = Some(k);
        self
    }

    pub fn with_pi(mut self, pi: SlowlyVarying) -> Self {
        self.pi = pi;
        self
    }

    /// The effective self-similarity index (`1/α` in the short-memory case).
    pub fn hurst(&self) -> f64 {
        match self.case {
            MemoryCase::ShortMemory => 1.0 / self.alpha,
            _ => self.h,
        }
    }

    /// Lag cutoff used for a path of length `n`.
    pub fn horizon(&self, n: usize) -> usize {
        match self.case {
            MemoryCase::ShortMemory => self.phi.len().saturating_sub(1),
            _ => self.truncation.unwrap_or(n).max(1),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if !(self.alpha > 0.0 && self.alpha <= 2.0) {
            bad.push(format!("alpha must lie in (0, 2], got {}", self.alpha));
        }
        match self.case {
            MemoryCase::ShortMemory => {
                if !(self.alpha > 1.0) {
                    bad.push(format!("short memory requires alpha in (1, 2], got {}", self.alpha));
                }
                if self.phi.is_empty() {
                    bad.push("short memory requires a nonempty coefficient list".into());
                } else if self.phi.iter().any(|p| !p.is_finite()) {
                    bad.push("coefficients must be finite".into());
                } else if kahan_sum(self.phi.iter().copied()).abs() <= 1e-12 {
                    bad.push("short memory requires a nonzero coefficient sum".into());
                }
            }
            MemoryCase::LongMemory | MemoryCase::AntiPersistent => {
                if !(self.h > 0.0 && self.h < 1.0) {
                    bad.push(format!("H must lie in (0, 1), got {}", self.h));
                }
                let inv = 1.0 / self.alpha;
                if self.case == MemoryCase::LongMemory && self.h <= inv {
                    bad.push(format!("long memory requires H > 1/alpha = {inv}, got {}", self.h));
                }
                if self.case == MemoryCase::AntiPersistent && self.h >= inv {
                    bad.push(format!("anti-persistence requires H < 1/alpha = {inv}, got {}", self.h));
                }
                if !(self.pi.scale > 0.0) {
                    bad.push("pi must be strictly positive".into());
                }
                if self.truncation == Some(0) {
                    bad.push("truncation K must be at least 1".into());
                }
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(config_err(bad.join("; ")))
        }
    }

    fn power_weight(&self, k: usize) -> f64 {
        (k as f64).powf(self.h - 1.0 - 1.0 / self.alpha) * self.pi.value(k)
    }

    /// `Σ_{k=1}^{K} k^{H−1−1/α} π_k`, the normalizer of the anti-persistent tail.
    fn tail_mass(&self, horizon: usize) -> f64 {
        kahan_sum((1..=horizon).map(|k| self.power_weight(k)))
    }

    /// Coefficients `φ_0, ..., φ_K`.
    pub fn coefficients(&self, horizon: usize) -> Result<Vec<f64>> {
        self.validate()?;
        if horizon < 1 {
            return Err(config_err("truncation K must be at least 1"));
        }
        let mut phi = vec![0.0; horizon + 1];
        match self.case {
            MemoryCase::ShortMemory => {
                for (dst, src) in phi.iter_mut().zip(&self.phi) {
                    *dst = *src;
                }
            }
            MemoryCase::LongMemory => {
                phi[0] = 1.0;
                for (k, p) in phi.iter_mut().enumerate().skip(1) {
                    *p = self.power_weight(k);
                }
            }
            MemoryCase::AntiPersistent => {
                let z = self.tail_mass(horizon);
                phi[0] = 1.0;
                for (k, p) in phi.iter_mut().enumerate().skip(1) {
                    *p = -self.power_weight(k) / z;
                }
            }
        }
        Ok(phi)
    }

    /// Norming constants for a filter truncated at `horizon`.
    pub fn norming_constants(&self, rho: NormingSequence, horizon: usize) -> Result<NormingConstants> {
        self.validate()?;
        let scale = match self.case {
            MemoryCase::ShortMemory => kahan_sum(self.phi.iter().copied()),
            MemoryCase::LongMemory => 1.0,
            MemoryCase::AntiPersistent => 1.0 / self.tail_mass(horizon.max(1)),
        };
        Ok(NormingConstants { case: self.case, alpha: self.alpha, h: self.hurst(), scale, pi: self.pi, rho })
    }
}

/// The sequences `c_k`, `d_k = k^{1/α}|c_k|ϱ_k` and `e_k = k/d_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormingConstants {
    case: MemoryCase,
    alpha: f64,
    h: f64,
    /// `φ` in the short-memory case, otherwise the multiplier applied to `π_k`.
    scale: f64,
    pi: SlowlyVarying,
    rho: NormingSequence,
}

impl NormingConstants {
    pub fn c(&self, k: usize) -> f64 {
        if k == 0 {
            return 1.0;
        }
        match self.case {
            MemoryCase::ShortMemory => self.scale,
            _ => {
                let g = self.h - 1.0 / self.alpha;
                (k as f64).powf(g) * self.pi.value(k) * self.scale / g.abs()
            }
        }
    }

    pub fn d(&self, k: usize) -> Result<f64> {
        if k == 0 {
            return Err(domain_err("d_k is defined for k >= 1"));
        }
        Ok((k as f64).powf(1.0 / self.alpha) * self.c(k).abs() * self.rho.value(k))
    }

    pub fn e(&self, k: usize) -> Result<f64> {
        Ok(k as f64 / self.d(k)?)
    }
}

/// `(c_k, d_k, e_k)` with the truncation horizon defaulting to `k`.
pub fn norming(spec: &ProcessSpec, rho: NormingSequence, k: usize) -> Result<(f64, f64, f64)> {
    let nc = spec.norming_constants(rho, spec.horizon(k.max(1)))?;
    Ok((nc.c(k), nc.d(k)?, nc.e(k)?))
}

/// Partial sums `a_j = Σ_{i≤j} φ_i` of a coefficient vector.
pub fn cumulative_coefficients(phi: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    phi.iter()
        .map(|p| {
            acc += p;
            acc
        })
        .collect()
}

/// How the truncated filter is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Convolution {
    #[default]
    Auto,
    Direct,
    Fft,
}

/// Above this many multiply-adds the FFT route is used.
pub const FFT_CROSSOVER: usize = 1 << 16;

/// `v_t = Σ_{k=0}^{K} φ_k eps[t + K − k]` for `t = 0..n`, where `eps` has length `n + K`.
pub fn filter_direct(phi: &[f64], eps: &[f64]) -> Vec<f64> {
    let k = phi.len() - 1;
    let n = eps.len() - k;
    (0..n)
        .map(|t| {
            let mut s = 0.0;
            for (j, p) in phi.iter().enumerate() {
                s += p * eps[t + k - j];
            }
            s
        })
        .collect()
}

/// FFT counterpart of [`filter_direct`].
pub fn filter_fft(phi: &[f64], eps: &[f64]) -> Vec<f64> {
    let k = phi.len() - 1;
    let n = eps.len() - k;
    let size = (eps.len() + phi.len() - 1).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);
    let mut a: Vec<Complex64> = (0..size).map(|i| Complex64::new(eps.get(i).copied().unwrap_or(0.0), 0.0)).collect();
    let mut b: Vec<Complex64> = (0..size).map(|i| Complex64::new(phi.get(i).copied().unwrap_or(0.0), 0.0)).collect();
    fwd.process(&mut a);
    fwd.process(&mut b);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y;
    }
    inv.process(&mut a);
    let scale = 1.0 / size as f64;
    (0..n).map(|t| a[t + k].re * scale).collect()
}

/// A simulated (or user supplied) trajectory with its norming constants.
#[derive(Debug, Clone, PartialEq)]
pub struct PathBundle {
    pub n: usize,
    /// Lag cutoff `K`; `eps` holds `ε_{1−K}, ..., ε_n`.
    pub truncation: usize,
    pub eps: Vec<f64>,
    pub v: Vec<f64>,
    /// `x_1, ..., x_n`; `x_0 = 0` is implicit.
    pub x: Vec<f64>,
    pub d_n: f64,
    pub e_n: f64,
    pub phi: Vec<f64>,
    pub spec: Option<ProcessSpec>,
    pub model: Option<InnovationModel>,
    pub seed: Option<u64>,
}

impl PathBundle {
    /// Simulates a path of length `n`.
    pub fn simulate(spec: &ProcessSpec, model: &InnovationModel, n: usize, seed: u64) -> Result<Self> {
        Self::simulate_with(spec, model, n, seed, Convolution::Auto)
    }

    pub fn simulate_with(
        spec: &ProcessSpec,
        model: &InnovationModel,
        n: usize,
        seed: u64,
        method: Convolution,
    ) -> Result<Self> {
        check_compatible(spec, model)?;
        if n < 1 {
            return Err(domain_err("path length n must be at least 1"));
        }
        let k = spec.horizon(n);
        let eps = model.sample(n + k, seed)?;
        let mut b = Self::from_innovations(spec, model, n, eps, method)?;
        b.seed = Some(seed);
        Ok(b)
    }

    /// Builds a path from explicit innovations `ε_{1−K}, ..., ε_n`.
    pub fn from_innovations(
        spec: &ProcessSpec,
        model: &InnovationModel,
        n: usize,
        eps: Vec<f64>,
        method: Convolution,
    ) -> Result<Self> {
        check_compatible(spec, model)?;
        let k = spec.horizon(n);
        if eps.len() != n + k {
            return Err(domain_err(format!("expected {} innovations, got {}", n + k, eps.len())));
        }
        let phi = if k == 0 { spec.phi.clone() } else { spec.coefficients(k)? };
        let use_fft = match method {
            Convolution::Auto => n.saturating_mul(k + 1) > FFT_CROSSOVER && k > 0,
            Convolution::Direct => false,
            Convolution::Fft => true,
        };
        let v = if use_fft { filter_fft(&phi, &eps) } else { filter_direct(&phi, &eps) };
        let mut acc = 0.0;
        let x = v
            .iter()
            .map(|vt| {
                acc += vt;
                acc
            })
            .collect();
        let nc = spec.norming_constants(model.calibrate_norming(), k)?;
        Ok(PathBundle {
            n,
            truncation: k,
            eps,
            v,
            x,
            d_n: nc.d(n)?,
            e_n: nc.e(n)?,
            phi,
            spec: Some(spec.clone()),
            model: Some(*model),
            seed: None,
        })
    }

    /// A fixed path with given norming constants and no innovation record.
    pub fn from_values(x: Vec<f64>, d_n: f64, e_n: f64) -> Result<Self> {
        if x.is_empty() {
            return Err(domain_err("path must be nonempty"));
        }
        if !(d_n > 0.0 && e_n > 0.0) {
            return Err(domain_err("norming constants must be positive"));
        }
        let mut prev = 0.0;
        let v = x
            .iter()
            .map(|xi| {
                let d = xi - prev;
                prev = *xi;
                d
            })
            .collect();
        Ok(PathBundle {
            n: x.len(),
            truncation: 0,
            eps: Vec::new(),
            v,
            x,
            d_n,
            e_n,
            phi: Vec::new(),
            spec: None,
            model: None,
            seed: None,
        })
    }

    /// `x_t` for `t = 0..=n`.
    pub fn x_at(&self, t: usize) -> f64 {
        if t == 0 {
            0.0
        } else {
            self.x[t - 1]
        }
    }

    /// `ε_t` for `t ≥ 1 − K`.
    pub fn eps_at(&self, t: i64) -> f64 {
        self.eps[(t + self.truncation as i64 - 1) as usize]
    }

    /// Columnar export: `t,eps,v,x` with pre-sample rows carrying only `eps`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,eps,v,x")?;
        let k = self.truncation as i64;
        for (i, e) in self.eps.iter().enumerate() {
            let t = i as i64 + 1 - k;
            if t >= 1 {
                let j = (t - 1) as usize;
                writeln!(w, "{t},{e},{},{}", self.v[j], self.x[j])?;
            } else if t == 0 {
                writeln!(w, "{t},{e},,0")?;
            } else {
                writeln!(w, "{t},{e},,")?;
            }
        }
        if self.eps.is_empty() {
            for (j, (vt, xt)) in self.v.iter().zip(&self.x).enumerate() {
                writeln!(w, "{},,{vt},{xt}", j + 1)?;
            }
        }
        Ok(())
    }
}

fn check_compatible(spec: &ProcessSpec, model: &InnovationModel) -> Result<()> {
    spec.validate()?;
    model.validate()?;
    if spec.alpha != model.alpha {
        return Err(config_err(format!("process alpha {} differs from innovation alpha {}", spec.alpha, model.alpha)));
    }
    Ok(())
}

/// Discretization of the linear fractional stable motion on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LfsmParams {
    pub h: f64,
    pub alpha: f64,
    #[serde(default)]
    pub skew: f64,
    /// Output points `r_j = j/m`, `j = 0..=m`.
    pub grid: usize,
    /// The past integral is truncated at `−T`.
    pub truncation: f64,
    /// Mesh cells per output interval.
    pub mesh: usize,
}

/// Riemann-sum LFSM sampler with precomputed kernel weights.
///
/// The driving increments are laid out cell by cell: first the cells of
/// `[0, 1]` forward in time, then the past backward from `0` to `−T`. Two
/// simulators with the same `grid · mesh` therefore share increments at a
/// fixed seed, whatever the split between the two.
#[derive(Debug, Clone)]
pub struct LfsmSimulator {
    params: LfsmParams,
    model: InnovationModel,
    present: usize,
    past: usize,
    /// Row `j` holds the weights of `X(r_{j+1})` over all cells.
    weights: Vec<Vec<f64>>,
    cell_scale: f64,
}

impl LfsmSimulator {
    pub fn new(params: LfsmParams) -> Result<Self> {
        let mut bad = Vec::new();
        if !(params.h > 0.0 && params.h < 1.0) {
            bad.push(format!("H must lie in (0, 1), got {}", params.h));
        }
        if params.grid < 1 || params.mesh < 1 {
            bad.push("grid and mesh must be at least 1".to_string());
        }
        if !(params.truncation > 0.0 && params.truncation.is_finite()) {
            bad.push(format!("truncation T must be positive, got {}", params.truncation));
        }
        if !bad.is_empty() {
            return Err(config_err(bad.join("; ")));
        }
        let model = InnovationModel::exact_stable(params.alpha, params.skew)?;
        let cells_per_unit = params.grid * params.mesh;
        let delta = 1.0 / cells_per_unit as f64;
        let present = cells_per_unit;
        let exponent = params.h - 1.0 / params.alpha;
        let lfsm_is_levy = exponent.abs() < 1e-12;
        let past = if lfsm_is_levy { 0 } else { (params.truncation * cells_per_unit as f64).ceil() as usize };
        let kernel = |u: f64| if u > 0.0 { u.powf(exponent) } else { 0.0 };
        let weights = if lfsm_is_levy {
            Vec::new()
        } else {
            (1..=params.grid)
                .map(|j| {
                    let r = j as f64 / params.grid as f64;
                    let mut w = Vec::with_capacity(present + past);
                    for c in 0..present {
                        let s = (c as f64 + 0.5) * delta;
                        w.push(kernel(r - s));
                    }
                    for c in 0..past {
                        let s = -(c as f64 + 0.5) * delta;
                        w.push(kernel(r - s) - kernel(-s));
                    }
                    w
                })
                .collect()
        };
        Ok(LfsmSimulator { params, model, present, past, weights, cell_scale: delta.powf(1.0 / params.alpha) })
    }

    pub fn params(&self) -> &LfsmParams {
        &self.params
    }

    /// `X(r_j)` for `j = 0..=m`.
    pub fn sample(&self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut dz = vec![0.0; self.present + self.past];
        self.model.fill(&mut rng, &mut dz);
        for z in dz.iter_mut() {
            *z *= self.cell_scale;
        }
        let mut out = Vec::with_capacity(self.params.grid + 1);
        out.push(0.0);
        if self.weights.is_empty() {
            // Lévy motion: X(r_j) is a running sum of the cell increments.
            let mut acc = 0.0;
            for chunk in dz.chunks(self.params.mesh) {
                acc += chunk.iter().sum::<f64>();
                out.push(acc);
            }
            return out;
        }
        for w in &self.weights {
            out.push(w.iter().zip(&dz).map(|(a, b)| a * b).sum());
        }
        out
    }
}

/// One LFSM draw on the grid `j/m`.
pub fn simulate_lfsm(params: LfsmParams, seed: u64) -> Result<Vec<f64>> {
    Ok(LfsmSimulator::new(params)?.sample(seed))
}
