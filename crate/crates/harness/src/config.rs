//! Experiment configuration: a JSON tree, dotted-path overrides and a
//! content hash over the canonical form.

use std::fmt;
use std::path::{Path, PathBuf};

use lfsm_core::local_time::beta_bar;
use lfsm_core::zero_energy::DEFAULT_N_MAX;
use lfsm_core::{
    BandwidthRule, Family, InnovationModel, KernelSpec, LfsmParams, LfsmSimulator, MemoryCase, NoiseModel, ProcessSpec,
    TargetFunction,
};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    LocalTimeLaw,
    MassIdentity,
    HolderIncrements,
    ZeroEnergyScaling,
    DecompositionIdentity,
    NormInequalities,
    SupportCoverage,
    RegressionUniform,
    LfsmSanity,
}

impl Scenario {
    pub const ALL: [Scenario; 9] = [
        Scenario::LocalTimeLaw,
        Scenario::MassIdentity,
        Scenario::HolderIncrements,
        Scenario::ZeroEnergyScaling,
        Scenario::DecompositionIdentity,
        Scenario::NormInequalities,
        Scenario::SupportCoverage,
        Scenario::RegressionUniform,
        Scenario::LfsmSanity,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Scenario::LocalTimeLaw => "local_time_law",
            Scenario::MassIdentity => "mass_identity",
            Scenario::HolderIncrements => "holder_increments",
            Scenario::ZeroEnergyScaling => "zero_energy_scaling",
            Scenario::DecompositionIdentity => "decomposition_identity",
            Scenario::NormInequalities => "norm_inequalities",
            Scenario::SupportCoverage => "support_coverage",
            Scenario::RegressionUniform => "regression_uniform",
            Scenario::LfsmSanity => "lfsm_sanity",
        }
    }

    pub fn description(&self) -> &'static str {
        match self {
            Scenario::LocalTimeLaw => "law of the triangular-kernel local time at 0 against |N|/sqrt(2)",
            Scenario::MassIdentity => "closed-form and grid mass of the local-time field",
            Scenario::HolderIncrements => "second-moment Hölder slope of spatial local-time increments",
            Scenario::ZeroEnergyScaling => "variance growth of zero-energy sums and the lattice-class envelope",
            Scenario::DecompositionIdentity => "telescoping martingale reconstruction and the U/V tower check",
            Scenario::NormInequalities => "Fourier-domain norm inequalities on the kernel library",
            Scenario::SupportCoverage => "coverage of the support sets and the denominator floor",
            Scenario::RegressionUniform => "Nadaraya-Watson exactness and uniform error on the support set",
            Scenario::LfsmSanity => "variance and self-similarity of the discretized LFSM",
        }
    }

    /// The function used when `params.kernel` is absent.
    pub fn default_kernel(&self) -> KernelSpec {
        match self {
            Scenario::DecompositionIdentity => KernelSpec::Gaussian,
            Scenario::ZeroEnergyScaling => {
                KernelSpec::ShiftedDiff { base: Box::new(KernelSpec::Triangular), a1: 0.0, a2: 1.0 }
            }
            Scenario::SupportCoverage | Scenario::RegressionUniform => KernelSpec::Epanechnikov,
            _ => KernelSpec::Triangular,
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Uniform spatial grid `lo, lo + mesh, ..., hi` in normalized units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub mesh: f64,
}

/// Members `g(· − θ_j) − g(· − θ_j − 1)` with `θ_j = start + j·step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSpec {
    pub start: f64,
    pub step: f64,
    pub size: usize,
}

/// Scenario parameters. Each scenario reads the fields it needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub kernel: Option<KernelSpec>,
    /// Bandwidth of local-time fields.
    pub h: f64,
    /// Base point of local-time evaluations.
    pub a0: f64,
    pub grid: GridSpec,
    /// Mass grids use mesh `h / (m d_n)` with this `m`.
    pub mass_refinement: usize,
    pub gaps: Vec<f64>,
    pub beta: f64,
    pub betas: Vec<f64>,
    pub shift_gaps: Vec<f64>,
    pub lattice: LatticeSpec,
    pub envelope_factor: f64,
    pub epsilons: Vec<f64>,
    pub coverage_target: f64,
    pub bandwidth: BandwidthRule,
    pub target: TargetFunction,
    pub noise: NoiseModel,
    pub support_epsilon: f64,
    pub constant_value: f64,
    pub compute_v: bool,
    pub lfsm: LfsmParams,
    /// Extra past-truncation levels `T` reported alongside `lfsm.truncation`.
    pub truncation_ladder: Vec<f64>,
    /// Replications that panic on purpose, for exercising failure records.
    pub inject_failures: Vec<usize>,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            kernel: None,
            h: 1.0,
            a0: 0.0,
            grid: GridSpec { lo: -3.0, hi: 3.0, mesh: 1.0 / 128.0 },
            mass_refinement: 4,
            gaps: (1..=5).rev().map(|j| 2f64.powi(-j)).collect(),
            beta: 0.4,
            betas: vec![0.25, 0.5, 0.75, 1.0],
            shift_gaps: (0..=6).rev().map(|j| 2f64.powi(-j)).collect(),
            lattice: LatticeSpec { start: -4.0, step: 0.125, size: 64 },
            envelope_factor: 10.0,
            epsilons: vec![0.05, 0.1, 0.2],
            coverage_target: 0.05,
            bandwidth: BandwidthRule::default(),
            target: TargetFunction::Rational,
            noise: NoiseModel::Iid { sd: 0.2 },
            support_epsilon: 0.1,
            constant_value: 1.5,
            compute_v: false,
            lfsm: LfsmParams { h: 0.75, alpha: 2.0, skew: 0.0, grid: 16, truncation: 32.0, mesh: 32 },
            truncation_ladder: vec![4.0, 8.0, 16.0],
            inject_failures: Vec::new(),
        }
    }
}

fn default_model() -> InnovationModel {
    InnovationModel::gaussian()
}

fn default_spec() -> ProcessSpec {
    ProcessSpec::random_walk(2.0).expect("valid random walk")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    #[serde(default = "default_model")]
    pub model: InnovationModel,
    #[serde(default = "default_spec")]
    pub spec: ProcessSpec,
    pub n_ladder: Vec<usize>,
    pub replications: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub params: Params,
    /// Output directory; not part of the hashed content.
    #[serde(default, skip_serializing)]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    /// A runnable configuration with the acceptance settings of `scenario`.
    pub fn default_for(scenario: Scenario) -> Self {
        let dyadic = |lo: i32, hi: i32, step: usize| (lo..=hi).step_by(step).map(|j| 1usize << j).collect::<Vec<_>>();
        let mut params = Params::default();
        let (n_ladder, replications) = match scenario {
            Scenario::LocalTimeLaw => (vec![20_000], 1000),
            Scenario::MassIdentity => (vec![1000, 10_000, 100_000], 20),
            Scenario::HolderIncrements => (vec![1 << 14], 500),
            Scenario::ZeroEnergyScaling => (dyadic(10, 16, 1), 500),
            Scenario::DecompositionIdentity => (vec![32], 100),
            Scenario::NormInequalities => (vec![1], 1),
            Scenario::SupportCoverage => (vec![1 << 16], 200),
            Scenario::RegressionUniform => {
                // Constant unit bandwidth: admissible, and the error comparison
                // across the ladder then reflects n alone.
                params.bandwidth = BandwidthRule::Fixed { h: 1.0 };
                (dyadic(12, 16, 2), 200)
            }
            Scenario::LfsmSanity => (vec![1], 2000),
        };
        ExperimentConfig {
            scenario,
            model: default_model(),
            spec: default_spec(),
            n_ladder,
            replications,
            master_seed: 20_240_601,
            params,
            output: None,
        }
    }

    pub fn kernel(&self) -> KernelSpec {
        self.params.kernel.clone().unwrap_or_else(|| self.scenario.default_kernel())
    }

    /// Parses a JSON document after applying `key.path=value` overrides.
    pub fn from_json_str(text: &str, overrides: &[String]) -> Result<Self> {
        let mut tree: Value =
            serde_json::from_str(text).map_err(|e| HarnessError::config(format!("malformed config: {e}")))?;
        for o in overrides {
            apply_override(&mut tree, o)?;
        }
        serde_json::from_value(tree).map_err(|e| HarnessError::config(format!("config does not match schema: {e}")))
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json_str(&text, overrides)
    }

    /// Canonical JSON: sorted keys, no whitespace, output directory omitted.
    pub fn canonical_json(&self) -> String {
        let v = serde_json::to_value(self).expect("config serializes");
        serde_json::to_string(&v).expect("value serializes")
    }

    /// Hex SHA-256 of [`canonical_json`](Self::canonical_json).
    pub fn hash(&self) -> String {
        Sha256::digest(self.canonical_json().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Checks every invariant and reports all violations together.
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if self.replications < 1 {
            bad.push("replications must be at least 1".to_string());
        }
        if self.n_ladder.is_empty() {
            bad.push("n_ladder must not be empty".to_string());
        }
        if self.n_ladder.contains(&0) {
            bad.push("n_ladder entries must be positive".to_string());
        }
        if self.n_ladder.windows(2).any(|w| w[1] <= w[0]) {
            bad.push(format!("n_ladder must be strictly increasing, got {:?}", self.n_ladder));
        }
        if let Err(e) = self.model.validate() {
            bad.push(format!("model: {e}"));
        }
        if let Err(e) = self.spec.validate() {
            bad.push(format!("spec: {e}"));
        }
        if self.model.alpha != self.spec.alpha {
            bad.push(format!("model alpha {} differs from spec alpha {}", self.model.alpha, self.spec.alpha));
        }
        let p = &self.params;
        let kernel = match self.kernel().build() {
            Ok(k) => Some(k),
            Err(e) => {
                bad.push(format!("params.kernel: {e}"));
                None
            }
        };
        if !(p.grid.lo < p.grid.hi && p.grid.mesh > 0.0 && p.grid.lo.is_finite() && p.grid.hi.is_finite()) {
            bad.push(format!("params.grid must satisfy lo < hi and mesh > 0, got {:?}", p.grid));
        }
        for &r in &p.inject_failures {
            if r >= self.replications {
                bad.push(format!("params.inject_failures entry {r} is not a replication index"));
            }
        }
        let h_index = self.spec.hurst();
        let rw_oracle = |bad: &mut Vec<String>| {
            if !(self.spec.case == MemoryCase::ShortMemory && self.spec.phi == [1.0] && self.model.alpha == 2.0) {
                bad.push(format!(
                    "{} compares against a Brownian oracle and needs the alpha = 2 random walk",
                    self.scenario
                ));
            }
        };
        match self.scenario {
            Scenario::MassIdentity => {
                if !(p.h > 0.0) {
                    bad.push("params.h must be positive".to_string());
                }
                if p.mass_refinement < 1 {
                    bad.push("params.mass_refinement must be at least 1".to_string());
                }
            }
            Scenario::LocalTimeLaw => {
                rw_oracle(&mut bad);
                if !(p.h > 0.0) {
                    bad.push("params.h must be positive".to_string());
                }
            }
            Scenario::HolderIncrements => {
                if self.replications < lfsm_core::local_time::MIN_INCREMENT_REPS {
                    bad.push(format!(
                        "holder_increments needs at least {} replications",
                        lfsm_core::local_time::MIN_INCREMENT_REPS
                    ));
                }
                if p.gaps.len() < 2 || p.gaps.iter().any(|g| !(*g > 0.0)) {
                    bad.push("params.gaps needs at least two positive gaps".to_string());
                }
                if !(p.beta > 0.0 && p.beta < beta_bar(h_index)) {
                    bad.push(format!("params.beta must lie in (0, {}) for H = {h_index}", beta_bar(h_index)));
                }
            }
            Scenario::ZeroEnergyScaling => {
                if self.n_ladder.len() < 2 {
                    bad.push("zero_energy_scaling needs at least two ladder points".to_string());
                }
                if let Some(k) = &kernel {
                    if k.integral().abs() > lfsm_core::zero_energy::ZERO_ENERGY_GATE {
                        bad.push(format!("params.kernel `{}` must integrate to zero", k.name()));
                    }
                }
                if !(p.beta > 0.0 && p.beta < beta_bar(h_index)) {
                    bad.push(format!("params.beta must lie in (0, {}) for H = {h_index}", beta_bar(h_index)));
                }
                if p.lattice.size < 1 || !(p.lattice.step > 0.0) {
                    bad.push("params.lattice needs size >= 1 and step > 0".to_string());
                }
                if !(p.envelope_factor > 0.0) {
                    bad.push("params.envelope_factor must be positive".to_string());
                }
            }
            Scenario::DecompositionIdentity => {
                if let Some(&n) = self.n_ladder.iter().find(|&&n| n > DEFAULT_N_MAX) {
                    bad.push(format!("decomposition path length {n} exceeds the cap {DEFAULT_N_MAX}"));
                }
                if !matches!(self.model.family, Family::Gaussian | Family::ExactStable) {
                    bad.push("decomposition needs a Gaussian or exactly stable model".to_string());
                }
                if let Some(k) = &kernel {
                    if !k.has_closed_fhat() {
                        bad.push(format!("params.kernel `{}` has no closed-form Fourier transform", k.name()));
                    }
                }
            }
            Scenario::NormInequalities => {
                if p.betas.is_empty() || p.betas.iter().any(|b| !(*b > 0.0 && *b <= 1.0)) {
                    bad.push("params.betas must be nonempty with entries in (0, 1]".to_string());
                }
                if p.shift_gaps.is_empty() || p.shift_gaps.iter().any(|g| !(*g > 0.0)) {
                    bad.push("params.shift_gaps must be nonempty and positive".to_string());
                }
            }
            Scenario::SupportCoverage | Scenario::RegressionUniform => {
                if let Some(k) = &kernel {
                    if !k.is_nonnegative() || !(k.integral() > 0.0) {
                        bad.push(format!("params.kernel `{}` must be nonnegative with positive mass", k.name()));
                    }
                }
                if self.scenario == Scenario::SupportCoverage {
                    if p.epsilons.is_empty() || p.epsilons.iter().any(|e| !(*e >= 0.0)) {
                        bad.push("params.epsilons must be nonempty and nonnegative".to_string());
                    }
                    if p.epsilons.windows(2).any(|w| w[1] <= w[0]) {
                        bad.push("params.epsilons must be increasing".to_string());
                    }
                } else {
                    if self.n_ladder.len() < 2 {
                        bad.push("regression_uniform needs at least two ladder points".to_string());
                    }
                    if !(p.support_epsilon >= 0.0) {
                        bad.push("params.support_epsilon must be nonnegative".to_string());
                    }
                    if let Err(e) = p.noise.validate() {
                        bad.push(format!("params.noise: {e}"));
                    }
                }
                if let BandwidthRule::Fixed { h } = p.bandwidth {
                    if !(h > 0.0) {
                        bad.push("params.bandwidth: fixed h must be positive".to_string());
                    }
                }
            }
            Scenario::LfsmSanity => {
                if let Err(e) = LfsmSimulator::new(p.lfsm) {
                    bad.push(format!("params.lfsm: {e}"));
                }
                if p.lfsm.grid < 2 {
                    bad.push("params.lfsm.grid must be at least 2 for a slope".to_string());
                }
                if p.lfsm.alpha != 2.0 {
                    bad.push("lfsm_sanity uses the variance and needs alpha = 2".to_string());
                }
                for &t in &p.truncation_ladder {
                    if let Err(e) = LfsmSimulator::new(LfsmParams { truncation: t, ..p.lfsm }) {
                        bad.push(format!("params.truncation_ladder entry {t}: {e}"));
                    }
                }
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(HarnessError::Config(bad))
        }
    }
}

/// Sets `a.b.c` (array segments by index) to a JSON literal, or to a string
/// when the value does not parse.
pub fn apply_override(tree: &mut Value, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| HarnessError::config(format!("override `{assignment}` is not of the form key=value")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let segments: Vec<&str> = key.split('.').collect();
    if segments.iter().any(|s| s.is_empty()) {
        return Err(HarnessError::config(format!("override key `{key}` has an empty segment")));
    }
    let mut node = tree;
    for (i, seg) in segments.iter().enumerate() {
        let last = i + 1 == segments.len();
        node = match node {
            Value::Object(map) => {
                if last {
                    map.insert(seg.to_string(), value);
                    return Ok(());
                }
                let child = map.entry(seg.to_string()).or_insert(Value::Null);
                if child.is_null() {
                    *child = Value::Object(Default::default());
                }
                child
            }
            Value::Array(items) => {
                let idx: usize = seg
                    .parse()
                    .map_err(|_| HarnessError::config(format!("override key `{key}`: `{seg}` is not an index")))?;
                let len = items.len();
                let slot = items
                    .get_mut(idx)
                    .ok_or_else(|| HarnessError::config(format!("override key `{key}`: index {idx} >= {len}")))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => return Err(HarnessError::config(format!("override key `{key}` descends into a scalar"))),
        };
    }
    unreachable!("loop returns on the last segment")
}
