//! I.i.d. innovations in the domain of attraction of a strictly stable law.
//!
//! Scales are calibrated so that normalized partial sums converge to a
//! stable Lévy motion whose increments over unit time have log characteristic
//! function `-|λ|^α [1 + iβ sgn(λ) tan(πα/2)]` (unit scale constant). In
//! particular the Gaussian member has variance 2, not 1.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma, ln_gamma};

use crate::error::{config_err, Error, Result};

/// Member of the domain of attraction used to drive the linear process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "kebab-case")]
pub enum Family {
    ExactStable,
    Gaussian,
    StudentT { df: f64 },
    TwoPoint,
}

/// A slowly varying sequence `k ↦ scale · ln(e + k)^power`.
///
/// `power = 0` gives a constant sequence, which is what every exact family
/// produces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlowlyVarying {
    pub scale: f64,
    #[serde(default)]
    pub power: f64,
}

impl SlowlyVarying {
    pub const ONE: SlowlyVarying = SlowlyVarying { scale: 1.0, power: 0.0 };

    pub fn constant(scale: f64) -> Self {
        SlowlyVarying { scale, power: 0.0 }
    }

    pub fn logarithmic(scale: f64, power: f64) -> Self {
        SlowlyVarying { scale, power }
    }

    pub fn value(&self, k: usize) -> f64 {
        if self.power == 0.0 {
            self.scale
        } else {
            self.scale * (std::f64::consts::E + k as f64).ln().powf(self.power)
        }
    }

    pub fn is_constant(&self) -> bool {
        self.power == 0.0
    }
}

impl Default for SlowlyVarying {
    fn default() -> Self {
        Self::ONE
    }
}

/// The sequence `ϱ_k` that puts the partial-sum limit on the unit scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormingSequence {
    pub rho: SlowlyVarying,
}

impl NormingSequence {
    pub fn constant(value: f64) -> Self {
        NormingSequence { rho: SlowlyVarying::constant(value) }
    }

    pub fn value(&self, k: usize) -> f64 {
        self.rho.value(k)
    }
}

/// Innovation law: stability index, skewness, family and scale multiplier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InnovationModel {
    pub alpha: f64,
    #[serde(default)]
    pub skew: f64,
    pub family: Family,
    pub scale_cal: f64,
}

impl InnovationModel {
    /// Builds and validates a model. The skewness is forced to zero at `alpha = 1`.
    pub fn new(alpha: f64, skew: f64, family: Family, scale_cal: f64) -> Result<Self> {
        let skew = if alpha == 1.0 { 0.0 } else { skew };
        let m = InnovationModel { alpha, skew, family, scale_cal };
        m.validate()?;
        Ok(m)
    }

    /// Exactly stable innovations with unit scale constant.
    pub fn exact_stable(alpha: f64, skew: f64) -> Result<Self> {
        Self::new(alpha, skew, Family::ExactStable, 1.0)
    }

    /// Gaussian innovations with variance 2, the α = 2 member with unit scale constant.
    pub fn gaussian() -> Self {
        InnovationModel { alpha: 2.0, skew: 0.0, family: Family::Gaussian, scale_cal: 2f64.sqrt() }
    }

    /// Gaussian innovations with the given standard deviation.
    pub fn gaussian_with_sd(sd: f64) -> Result<Self> {
        Self::new(2.0, 0.0, Family::Gaussian, sd)
    }

    /// Checks every invariant and reports all violations at once.
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if !(self.alpha > 0.0 && self.alpha <= 2.0) {
            bad.push(format!("alpha must lie in (0, 2], got {}", self.alpha));
        }
        if !(-1.0..=1.0).contains(&self.skew) {
            bad.push(format!("skew must lie in [-1, 1], got {}", self.skew));
        }
        if self.alpha == 1.0 && self.skew != 0.0 {
            bad.push("skew must be 0 when alpha = 1".to_string());
        }
        if !(self.scale_cal > 0.0 && self.scale_cal.is_finite()) {
            bad.push(format!("scale_cal must be positive, got {}", self.scale_cal));
        }
        match self.family {
            Family::ExactStable => {}
            Family::Gaussian | Family::TwoPoint => {
                if self.alpha != 2.0 {
                    bad.push(format!("{:?} family requires alpha = 2, got {}", self.family, self.alpha));
                }
            }
            Family::StudentT { df } => {
                if !(df > 0.0 && df.is_finite()) || df == 2.0 {
                    bad.push(format!("student-t df must be positive and != 2, got {df}"));
                } else if df > 2.0 && self.alpha != 2.0 {
                    bad.push(format!("student-t with df > 2 requires alpha = 2, got {}", self.alpha));
                } else if df < 2.0 && self.alpha != df {
                    bad.push(format!("student-t with df < 2 requires alpha = df, got {}", self.alpha));
                }
            }
        }
        if !matches!(self.family, Family::ExactStable) && self.skew != 0.0 {
            bad.push("only the exact-stable family supports nonzero skew".to_string());
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(config_err(bad.join("; ")))
        }
    }

    /// `n` i.i.d. draws; identical `(model, n, seed)` give bit-identical output.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<f64>> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = vec![0.0; n];
        self.fill(&mut rng, &mut out);
        Ok(out)
    }

    /// Fills `out` with draws from `rng`. The model is assumed valid.
    pub fn fill<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let s = self.scale_cal;
        match self.family {
            Family::Gaussian => {
                for v in out.iter_mut() {
                    let z: f64 = StandardNormal.sample(rng);
                    *v = s * z;
                }
            }
            Family::ExactStable => {
                let cms = Cms::new(self.alpha, self.skew);
                for v in out.iter_mut() {
                    *v = s * cms.draw(rng);
                }
            }
            Family::StudentT { df } => {
                let t = StudentT::new(df).expect("validated df");
                for v in out.iter_mut() {
                    *v = s * t.sample(rng);
                }
            }
            Family::TwoPoint => {
                for v in out.iter_mut() {
                    *v = if rng.random::<bool>() { s } else { -s };
                }
            }
        }
    }

    /// Characteristic function `E exp(iλε)`.
    pub fn char_fn(&self, lambda: f64) -> Result<Complex64> {
        self.validate()?;
        self.cf_checked()?;
        Ok(self.cf(lambda))
    }

    /// Fails for families whose characteristic function is not available in closed form.
    pub fn cf_checked(&self) -> Result<()> {
        if let Family::StudentT { df } = self.family {
            if !(df.fract() == 0.0 && (df as u64) % 2 == 1 && df <= 41.0) {
                return Err(Error::UnsupportedFamily(format!(
                    "student-t cf is implemented for odd integer df <= 41 only, got {df}"
                )));
            }
        }
        Ok(())
    }

    /// Characteristic function without validation; callers must have run
    /// [`InnovationModel::cf_checked`].
    pub fn cf(&self, lambda: f64) -> Complex64 {
        let u = self.scale_cal * lambda;
        match self.family {
            Family::Gaussian => Complex64::new((-0.5 * u * u).exp(), 0.0),
            Family::ExactStable => {
                let a = u.abs().powf(self.alpha);
                if self.skew == 0.0 || self.alpha == 2.0 || self.alpha == 1.0 {
                    Complex64::new((-a).exp(), 0.0)
                } else {
                    let im = -a * self.skew * u.signum() * (PI * self.alpha / 2.0).tan();
                    Complex64::from_polar((-a).exp(), im)
                }
            }
            Family::StudentT { df } => Complex64::new(student_t_cf(df, u), 0.0),
            Family::TwoPoint => Complex64::new(u.cos(), 0.0),
        }
    }

    /// Upper bound on `|ψ(λ)|` that is nonincreasing in `|λ|`.
    pub fn cf_envelope(&self, lambda: f64) -> f64 {
        match self.family {
            Family::TwoPoint => 1.0,
            _ => self.cf(lambda.abs()).norm(),
        }
    }

    /// Whether `|ψ|` decays to zero at infinity (so finite products are integrable).
    pub fn cf_decays(&self) -> bool {
        !matches!(self.family, Family::TwoPoint)
    }

    /// The slowly varying sequence `ϱ_k` giving a unit scale constant in the limit.
    pub fn calibrate_norming(&self) -> NormingSequence {
        let s = self.scale_cal;
        let rho = match self.family {
            Family::ExactStable => s,
            Family::Gaussian | Family::TwoPoint => s / 2f64.sqrt(),
            Family::StudentT { df } if df > 2.0 => (s * s * df / (df - 2.0) / 2.0).sqrt(),
            Family::StudentT { df } => {
                // Match the Pareto tail constant of t(df) to that of the unit stable law.
                let ln_c =
                    ln_gamma((df + 1.0) / 2.0) - 0.5 * (df * PI).ln() - ln_gamma(df / 2.0) + 0.5 * (df + 1.0) * df.ln();
                let t_tail = ln_c.exp() / df;
                let stable_tail = gamma(df) * (PI * df / 2.0).sin() / PI;
                s * (t_tail / stable_tail).powf(1.0 / df)
            }
        };
        NormingSequence::constant(rho)
    }
}

/// `E exp(iuT)` for Student t with odd integer `df = 2m + 1`.
fn student_t_cf(df: f64, u: f64) -> f64 {
    let m = ((df - 1.0) / 2.0).round() as usize;
    let x = df.sqrt() * u.abs();
    // P_m(x) = m!/(2m)! Σ_j (2m-j)! / (j! (m-j)!) (2x)^j
    let ln_fact = |k: usize| ln_gamma(k as f64 + 1.0);
    let mut poly = 0.0;
    let mut pow = 1.0;
    for j in 0..=m {
        let coef = (ln_fact(m) - ln_fact(2 * m) + ln_fact(2 * m - j) - ln_fact(j) - ln_fact(m - j)).exp();
        poly += coef * pow;
        pow *= 2.0 * x;
    }
    (-x).exp() * poly
}

/// Chambers–Mallows–Stuck sampler for the unit-scale strictly stable law.
///
/// The textbook algorithm targets log cf `-|λ|^α (1 - iβ sgn λ tan(πα/2))`;
/// our skewness convention carries the opposite sign, so `β` is negated.
struct Cms {
    alpha: f64,
    b: f64,
    s: f64,
}

impl Cms {
    fn new(alpha: f64, skew: f64) -> Self {
        let beta = -skew;
        if alpha == 1.0 {
            return Cms { alpha, b: 0.0, s: 1.0 };
        }
        let t = beta * (PI * alpha / 2.0).tan();
        Cms { alpha, b: t.atan() / alpha, s: (1.0 + t * t).powf(1.0 / (2.0 * alpha)) }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let v = PI * (rng.random::<f64>() - 0.5);
        if self.alpha == 1.0 {
            return v.tan();
        }
        let w: f64 = Exp1.sample(rng);
        if self.alpha == 2.0 {
            return 2.0 * v.sin() * w.sqrt();
        }
        let a = self.alpha;
        let avb = a * (v + self.b);
        self.s * avb.sin() / v.cos().powf(1.0 / a) * ((v - avb).cos() / w).powf((1.0 - a) / a)
    }
}
