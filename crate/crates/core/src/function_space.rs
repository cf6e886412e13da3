//! Bounded integrable test functions with analytic metadata, the norms used
//! by the local-time bounds, and continuous bracketing of function classes.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain_err, Error, Result};
use crate::quad::integrate;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
/// Half-width (in units of the scale) beyond which a Gaussian node is treated as zero.
const GAUSS_REACH: f64 = 40.0;

type Callback = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Node {
    Triangular,
    Gaussian,
    Epanechnikov,
    Indicator {
        lo: f64,
        hi: f64,
    },
    /// `coef · g((x − shift)/scale)`
    Affine {
        coef: f64,
        shift: f64,
        scale: f64,
        inner: Arc<Node>,
    },
    Sum(Vec<Node>),
    /// Linear interpolation of `(xs, ys)`, zero outside `[xs[0], xs[last]]`.
    Piecewise {
        xs: Arc<Vec<f64>>,
        ys: Arc<Vec<f64>>,
    },
    Custom {
        f: Callback,
        lo: f64,
        hi: f64,
    },
}

fn sinc(z: f64) -> f64 {
    if z.abs() < 1e-4 {
        1.0 - z * z / 6.0
    } else {
        z.sin() / z
    }
}

/// `(sin z − z cos z)/z²`, the odd moment of a centred segment.
fn odd_moment(z: f64) -> f64 {
    if z.abs() < 1e-2 {
        let z2 = z * z;
        z / 3.0 - z * z2 / 30.0 + z * z2 * z2 / 840.0
    } else {
        (z.sin() - z * z.cos()) / (z * z)
    }
}

/// `∫ f e^{iλx} dx` for the linear interpolant of the given nodes.
fn piecewise_fhat(xs: &[f64], ys: &[f64], lambda: f64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..xs.len().saturating_sub(1) {
        let w = 0.5 * (xs[i + 1] - xs[i]);
        if w <= 0.0 {
            continue;
        }
        let c = 0.5 * (xs[i + 1] + xs[i]);
        let m = 0.5 * (ys[i + 1] + ys[i]);
        let s = (ys[i + 1] - ys[i]) / (2.0 * w);
        let z = lambda * w;
        let even = m * 2.0 * w * sinc(z);
        let odd = if lambda == 0.0 { 0.0 } else { s * 2.0 * w * w * odd_moment(z) };
        acc += Complex64::from_polar(1.0, lambda * c) * Complex64::new(even, odd);
    }
    acc
}

fn piecewise_eval(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    if n == 0 || x < xs[0] || x > xs[n - 1] {
        return 0.0;
    }
    let i = xs.partition_point(|&v| v <= x);
    if i == n {
        return ys[n - 1];
    }
    if i == 0 {
        return ys[0];
    }
    let t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
    ys[i - 1] + t * (ys[i] - ys[i - 1])
}

impl Node {
    fn eval(&self, x: f64) -> f64 {
        match self {
            Node::Triangular => (1.0 - x.abs()).max(0.0),
            Node::Gaussian => INV_SQRT_2PI * (-0.5 * x * x).exp(),
            Node::Epanechnikov => {
                if x.abs() <= 1.0 {
                    0.75 * (1.0 - x * x)
                } else {
                    0.0
                }
            }
            Node::Indicator { lo, hi } => {
                if x >= *lo && x <= *hi {
                    1.0
                } else {
                    0.0
                }
            }
            Node::Affine { coef, shift, scale, inner } => coef * inner.eval((x - shift) / scale),
            Node::Sum(parts) => parts.iter().map(|p| p.eval(x)).sum(),
            Node::Piecewise { xs, ys } => piecewise_eval(xs, ys, x),
            Node::Custom { f, lo, hi } => {
                if x < *lo || x > *hi {
                    0.0
                } else {
                    f(x)
                }
            }
        }
    }

    fn has_closed_fhat(&self) -> bool {
        match self {
            Node::Custom { .. } => false,
            Node::Affine { inner, .. } => inner.has_closed_fhat(),
            Node::Sum(parts) => parts.iter().all(Node::has_closed_fhat),
            _ => true,
        }
    }

    fn fhat(&self, l: f64) -> Complex64 {
        match self {
            Node::Triangular => {
                let s = sinc(0.5 * l);
                Complex64::new(s * s, 0.0)
            }
            Node::Gaussian => Complex64::new((-0.5 * l * l).exp(), 0.0),
            Node::Epanechnikov => {
                let v = if l.abs() < 0.1 {
                    let z2 = l * l;
                    1.0 - z2 / 10.0 + z2 * z2 / 280.0 - z2 * z2 * z2 / 15120.0
                } else {
                    3.0 * (l.sin() - l * l.cos()) / (l * l * l)
                };
                Complex64::new(v, 0.0)
            }
            Node::Indicator { lo, hi } => {
                let c = 0.5 * (lo + hi);
                let w = 0.5 * (hi - lo);
                Complex64::from_polar(2.0 * w * sinc(l * w), l * c)
            }
            Node::Affine { coef, shift, scale, inner } => {
                inner.fhat(scale * l) * Complex64::from_polar(coef * scale, l * shift)
            }
            Node::Sum(parts) => parts.iter().map(|p| p.fhat(l)).sum(),
            Node::Piecewise { xs, ys } => piecewise_fhat(xs, ys, l),
            Node::Custom { f, lo, hi } => numeric_fhat(f.as_ref(), *lo, *hi, l),
        }
    }

    /// Nonincreasing majorant of `|f̂(λ)|` in `|λ|`, or `None` for no decay information.
    fn fhat_envelope(&self, l: f64) -> Option<f64> {
        let a = l.abs();
        match self {
            Node::Triangular => Some(if a < 2.0 { 1.0 } else { 4.0 / (a * a) }),
            Node::Gaussian => Some((-0.5 * a * a).exp()),
            Node::Epanechnikov => Some(if a < 3.0 { 1.0 } else { 3.0 * (1.0 + a) / (a * a * a) }),
            Node::Indicator { lo, hi } => Some((hi - lo).min(if a > 0.0 { 2.0 / a } else { f64::INFINITY })),
            Node::Affine { coef, scale, inner, .. } => inner.fhat_envelope(scale * a).map(|v| coef.abs() * scale * v),
            Node::Sum(parts) => parts.iter().map(|p| p.fhat_envelope(a)).sum(),
            Node::Piecewise { xs, ys } => {
                // |f̂| ≤ (Σ|jumps of f|)/|λ| + (Σ|jumps of f'|)/λ², capped by ‖f‖_1.
                let n = xs.len();
                let mut jumps = ys[0].abs() + ys[n - 1].abs();
                let mut kinks = 0.0;
                let mut prev_slope = 0.0;
                for i in 0..n - 1 {
                    let dx = xs[i + 1] - xs[i];
                    if dx <= 0.0 {
                        jumps += (ys[i + 1] - ys[i]).abs();
                        continue;
                    }
                    let s = (ys[i + 1] - ys[i]) / dx;
                    kinks += (s - prev_slope).abs();
                    prev_slope = s;
                }
                kinks += prev_slope.abs();
                let l1: f64 = (0..n - 1).map(|i| 0.5 * (xs[i + 1] - xs[i]) * (ys[i].abs() + ys[i + 1].abs())).sum();
                let tail = if a > 0.0 { jumps / a + kinks / (a * a) } else { f64::INFINITY };
                Some(l1.min(tail))
            }
            Node::Custom { .. } => None,
        }
    }

    /// Points where the function or its derivative may jump, and the range
    /// outside of which it vanishes (numerically, for Gaussian nodes).
    fn geometry(&self, pts: &mut Vec<f64>) -> (f64, f64) {
        match self {
            Node::Triangular => {
                pts.extend([-1.0, 0.0, 1.0]);
                (-1.0, 1.0)
            }
            Node::Gaussian => {
                pts.push(0.0);
                (-GAUSS_REACH, GAUSS_REACH)
            }
            Node::Epanechnikov => {
                pts.extend([-1.0, 1.0]);
                (-1.0, 1.0)
            }
            Node::Indicator { lo, hi } => {
                pts.extend([*lo, *hi]);
                (*lo, *hi)
            }
            Node::Affine { shift, scale, inner, .. } => {
                let mut inner_pts = Vec::new();
                let (lo, hi) = inner.geometry(&mut inner_pts);
                pts.extend(inner_pts.iter().map(|p| shift + scale * p));
                (shift + scale * lo, shift + scale * hi)
            }
            Node::Sum(parts) => {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for p in parts {
                    let (a, b) = p.geometry(pts);
                    lo = lo.min(a);
                    hi = hi.max(b);
                }
                (lo, hi)
            }
            Node::Piecewise { xs, .. } => {
                pts.extend(xs.iter().copied());
                (xs[0], xs[xs.len() - 1])
            }
            Node::Custom { lo, hi, .. } => {
                pts.extend([*lo, *hi]);
                (*lo, *hi)
            }
        }
    }

    fn compact(&self) -> bool {
        match self {
            Node::Gaussian => false,
            Node::Affine { inner, .. } => inner.compact(),
            Node::Sum(parts) => parts.iter().all(Node::compact),
            _ => true,
        }
    }

    fn nonnegative(&self) -> bool {
        match self {
            Node::Affine { coef, inner, .. } => *coef >= 0.0 && inner.nonnegative(),
            Node::Sum(parts) => parts.iter().all(Node::nonnegative),
            Node::Piecewise { ys, .. } => ys.iter().all(|y| *y >= 0.0),
            Node::Custom { .. } => false,
            _ => true,
        }
    }

    fn lipschitz(&self) -> Option<f64> {
        match self {
            Node::Triangular => Some(1.0),
            Node::Gaussian => Some(INV_SQRT_2PI * (-0.5f64).exp()),
            Node::Epanechnikov => Some(1.5),
            Node::Indicator { .. } => None,
            Node::Affine { coef, scale, inner, .. } => inner.lipschitz().map(|l| coef.abs() * l / scale),
            Node::Sum(parts) => parts.iter().map(Node::lipschitz).sum(),
            Node::Piecewise { xs, ys } => {
                let n = xs.len();
                if ys[0] != 0.0 || ys[n - 1] != 0.0 {
                    return None;
                }
                let mut m: f64 = 0.0;
                for i in 0..n - 1 {
                    let dx = xs[i + 1] - xs[i];
                    if dx <= 0.0 {
                        if ys[i + 1] != ys[i] {
                            return None;
                        }
                        continue;
                    }
                    m = m.max(((ys[i + 1] - ys[i]) / dx).abs());
                }
                Some(m)
            }
            Node::Custom { .. } => None,
        }
    }
}

fn numeric_fhat(f: &(dyn Fn(f64) -> f64 + Send + Sync), lo: f64, hi: f64, l: f64) -> Complex64 {
    // Filon-type rule: integrate the linear interpolant exactly against e^{iλx},
    // doubling the node count until successive values agree.
    let mut cells = 256usize;
    let mut prev: Option<Complex64> = None;
    loop {
        let xs: Vec<f64> = (0..=cells).map(|i| lo + (hi - lo) * i as f64 / cells as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
        let v = piecewise_fhat(&xs, &ys, l);
        if let Some(p) = prev {
            if (v - p).norm() <= 1e-10 * (1.0 + v.norm()) || cells >= 1 << 20 {
                return v;
            }
        }
        prev = Some(v);
        cells *= 2;
    }
}

/// A bounded, integrable real function with cached analytic metadata.
#[derive(Clone)]
pub struct RealFunction {
    node: Arc<Node>,
    name: String,
    integral: f64,
    l1: f64,
    l2: f64,
    sup: f64,
    lipschitz: Option<f64>,
    support: Option<(f64, f64)>,
    range: (f64, f64),
    breakpoints: Vec<f64>,
    nonnegative: bool,
}

impl fmt::Debug for RealFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RealFunction")
            .field("name", &self.name)
            .field("integral", &self.integral)
            .field("l1", &self.l1)
            .field("sup", &self.sup)
            .finish()
    }
}

impl RealFunction {
    fn from_node(node: Node, name: String) -> Self {
        let mut pts = Vec::new();
        let range = node.geometry(&mut pts);
        pts.push(range.0);
        pts.push(range.1);
        pts.retain(|p| *p >= range.0 && *p <= range.1);
        pts.sort_by(f64::total_cmp);
        pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * (1.0 + b.abs()));
        let compact = node.compact();
        let nonnegative = node.nonnegative();
        let lipschitz = node.lipschitz();
        let mut f = RealFunction {
            node: Arc::new(node),
            name,
            integral: 0.0,
            l1: 0.0,
            l2: 0.0,
            sup: 0.0,
            lipschitz,
            support: if compact { Some(range) } else { None },
            range,
            breakpoints: pts,
            nonnegative,
        };
        f.fill_metadata();
        f
    }

    fn fill_metadata(&mut self) {
        match &*self.node {
            Node::Triangular => {
                self.integral = 1.0;
                self.l1 = 1.0;
                self.l2 = (2.0f64 / 3.0).sqrt();
                self.sup = 1.0;
            }
            Node::Gaussian => {
                self.integral = 1.0;
                self.l1 = 1.0;
                self.l2 = (1.0 / (2.0 * PI.sqrt())).sqrt();
                self.sup = INV_SQRT_2PI;
            }
            Node::Epanechnikov => {
                self.integral = 1.0;
                self.l1 = 1.0;
                self.l2 = 0.6f64.sqrt();
                self.sup = 0.75;
            }
            Node::Indicator { lo, hi } => {
                self.integral = hi - lo;
                self.l1 = hi - lo;
                self.l2 = (hi - lo).sqrt();
                self.sup = 1.0;
            }
            _ => {
                let node = self.node.clone();
                let g = |x: f64| node.eval(x);
                self.integral = self.integrate_numeric(g);
                self.l1 = self.integrate_numeric(|x| g(x).abs());
                self.l2 = self.integrate_numeric(|x| g(x) * g(x)).sqrt();
                self.sup = self.sup_numeric();
                if self.node.has_closed_fhat() {
                    let exact = self.node.fhat(0.0).re;
                    if (exact - self.integral).abs() <= 1e-8 * (1.0 + self.l1) {
                        self.integral = exact;
                    }
                }
            }
        }
    }

    fn integrate_numeric<F: Fn(f64) -> f64>(&self, g: F) -> f64 {
        integrate(g, &self.breakpoints, 1e-14, 1e-12).value
    }

    fn sup_numeric(&self) -> f64 {
        let mut m: f64 = 0.0;
        let eps = 1e-12;
        for &b in &self.breakpoints {
            for x in [b - eps * (1.0 + b.abs()), b, b + eps * (1.0 + b.abs())] {
                m = m.max(self.eval(x).abs());
            }
        }
        for w in self.breakpoints.windows(2) {
            let k = 64;
            for i in 1..k {
                let x = w[0] + (w[1] - w[0]) * i as f64 / k as f64;
                m = m.max(self.eval(x).abs());
            }
        }
        m
    }

    pub fn triangular() -> Self {
        Self::from_node(Node::Triangular, "triangular".into())
    }

    /// Standard normal density.
    pub fn gaussian() -> Self {
        Self::from_node(Node::Gaussian, "gaussian".into())
    }

    /// `0.75 (1 − x²)` on `[−1, 1]`.
    pub fn epanechnikov() -> Self {
        Self::from_node(Node::Epanechnikov, "epanechnikov".into())
    }

    /// Indicator of the closed interval `[lo, hi]`.
    pub fn indicator(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi && lo.is_finite() && hi.is_finite()) {
            return Err(domain_err(format!("indicator needs a bounded interval lo < hi, got [{lo}, {hi}]")));
        }
        Ok(Self::from_node(Node::Indicator { lo, hi }, format!("indicator[{lo},{hi}]")))
    }

    /// Continuous piecewise-linear interpolant of the nodes, zero outside them.
    pub fn piecewise_linear(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() < 2 || xs.len() != ys.len() {
            return Err(domain_err("piecewise-linear function needs at least two matching nodes"));
        }
        if xs.windows(2).any(|w| !(w[1] >= w[0])) || xs.iter().chain(&ys).any(|v| !v.is_finite()) {
            return Err(domain_err("piecewise-linear nodes must be finite and nondecreasing"));
        }
        Ok(Self::from_node(Node::Piecewise { xs: Arc::new(xs), ys: Arc::new(ys) }, "piecewise-linear".into()))
    }

    /// A user function supported on `[lo, hi]`; its Fourier transform is computed numerically.
    pub fn custom<F>(name: &str, lo: f64, hi: f64, f: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(lo < hi && lo.is_finite() && hi.is_finite()) {
            return Err(domain_err("custom functions need a bounded support"));
        }
        Ok(Self::from_node(Node::Custom { f: Arc::new(f), lo, hi }, name.into()))
    }

    /// `coef · f((x − shift)/scale)`.
    pub fn affine(&self, coef: f64, shift: f64, scale: f64) -> Result<Self> {
        if !(scale > 0.0) || !coef.is_finite() || !shift.is_finite() {
            return Err(domain_err("affine transform needs scale > 0 and finite coefficients"));
        }
        let node = Node::Affine { coef, shift, scale, inner: self.node.clone() };
        Ok(Self::from_node(node, format!("{coef}*{}((x-{shift})/{scale})", self.name)))
    }

    /// `f(x − shift)`.
    pub fn shifted(&self, shift: f64) -> Self {
        self.affine(1.0, shift, 1.0).expect("unit scale")
    }

    /// `c · f`.
    pub fn scaled(&self, c: f64) -> Self {
        self.affine(c, 0.0, 1.0).expect("unit scale")
    }

    /// `K_h(x) = h^{-1} K(x/h)`.
    pub fn bandwidth(&self, h: f64) -> Result<Self> {
        self.affine(1.0 / h, 0.0, h)
    }

    pub fn sum(parts: &[RealFunction]) -> Self {
        let node = Node::Sum(parts.iter().map(|p| (*p.node).clone()).collect());
        let name = parts.iter().map(|p| p.name.as_str()).collect::<Vec<_>>().join(" + ");
        Self::from_node(node, name)
    }

    pub fn add(&self, other: &RealFunction) -> Self {
        Self::sum(&[self.clone(), other.clone()])
    }

    /// `g(· − a1) − g(· − a2)`.
    pub fn shifted_diff(g: &RealFunction, a1: f64, a2: f64) -> Self {
        let mut f = Self::sum(&[g.shifted(a1), g.affine(-1.0, a2, 1.0).expect("unit scale")]);
        f.integral = 0.0;
        f.name = format!("{}(x-{a1}) - {}(x-{a2})", g.name, g.name);
        f
    }

    /// The zero function.
    pub fn zero() -> Self {
        Self::shifted_diff(&Self::triangular(), 0.0, 0.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.node.eval(x)
    }

    /// `f̂(λ) = ∫ e^{iλx} f(x) dx`; closed form where available, otherwise numerical.
    pub fn fhat(&self, lambda: f64) -> Complex64 {
        self.node.fhat(lambda)
    }

    pub fn has_closed_fhat(&self) -> bool {
        self.node.has_closed_fhat()
    }

    /// A majorant of `|f̂(λ)|` that is nonincreasing in `|λ|`.
    pub fn fhat_envelope(&self, lambda: f64) -> f64 {
        self.node.fhat_envelope(lambda).unwrap_or(self.l1).min(self.l1)
    }

    /// Whether [`RealFunction::fhat_envelope`] decays to zero.
    pub fn fhat_decays(&self) -> bool {
        self.node.fhat_envelope(1e12).is_some_and(|v| v < 1e-6)
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn integral(&self) -> f64 {
        self.integral
    }
    pub fn l1_norm(&self) -> f64 {
        self.l1
    }
    pub fn l2_norm(&self) -> f64 {
        self.l2
    }
    pub fn sup_norm(&self) -> f64 {
        self.sup
    }
    pub fn lipschitz(&self) -> Option<f64> {
        self.lipschitz
    }
    /// Compact support interval, if any.
    pub fn support(&self) -> Option<(f64, f64)> {
        self.support
    }
    /// Interval outside which the function is zero (to double precision for Gaussian tails).
    pub fn effective_range(&self) -> (f64, f64) {
        self.range
    }
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }
    pub fn is_nonnegative(&self) -> bool {
        self.nonnegative
    }

    /// `∫ |f(x)| |x|^β dx`.
    pub fn beta_moment(&self, beta: f64) -> Result<f64> {
        beta_moment(self, beta)
    }
}

/// `∫ |f(x)| |x|^β dx` by adaptive quadrature between breakpoints.
pub fn beta_moment(f: &RealFunction, beta: f64) -> Result<f64> {
    shifted_beta_moment(f, beta, 0.0)
}

/// `∫ |f(x − y)| |x|^β dx`.
pub fn shifted_beta_moment(f: &RealFunction, beta: f64, y: f64) -> Result<f64> {
    if !(beta >= 0.0) {
        return Err(domain_err(format!("beta must be nonnegative, got {beta}")));
    }
    if beta == 0.0 && y == 0.0 {
        return Ok(f.l1);
    }
    let mut pts: Vec<f64> = f.breakpoints.iter().map(|b| b + y).collect();
    let (lo, hi) = (f.range.0 + y, f.range.1 + y);
    if lo < 0.0 && hi > 0.0 {
        pts.push(0.0);
    }
    pts.sort_by(f64::total_cmp);
    let g = |x: f64| f.eval(x - y).abs() * x.abs().powf(beta);
    let r = integrate(g, &pts, 1e-13, 1e-11);
    if !r.value.is_finite() {
        return Err(Error::Divergence(format!("moment of order {beta} of {}", f.name)));
    }
    if f.support.is_none() {
        // Tails beyond the effective range must be negligible.
        let edge = f.eval(f.range.1).abs().max(f.eval(f.range.0).abs());
        if edge * hi.abs().max(lo.abs()).powf(beta) > 1e-12 * (1.0 + r.value) {
            return Err(Error::Divergence(format!("tail of {} does not decay fast enough", f.name)));
        }
    }
    Ok(r.value)
}

/// Grid estimate of `‖f‖_[β] = sup_λ |f̂(λ)|/|λ|^β`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaNormEstimate {
    /// Supremum over the final grid; a lower bound for the true norm.
    pub value: f64,
    /// Relative change produced by the last grid doubling.
    pub refinement_delta: f64,
    pub grid_points: usize,
    /// Set when `∫f ≠ 0`, in which case the true norm is infinite.
    pub unbounded_at_origin: bool,
}

/// Log-spaced frequency grid used by [`beta_norm`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaGrid {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub per_decade: usize,
    /// Stop doubling once the estimate changes by less than this fraction.
    pub tolerance: f64,
    pub max_doublings: usize,
}

impl Default for LambdaGrid {
    fn default() -> Self {
        LambdaGrid { lambda_min: 1e-4, lambda_max: 1e3, per_decade: 64, tolerance: 1e-3, max_doublings: 10 }
    }
}

impl LambdaGrid {
    pub fn points(&self, per_decade: usize) -> Vec<f64> {
        let (a, b) = (self.lambda_min.log10(), self.lambda_max.log10());
        let m = ((b - a) * per_decade as f64).ceil() as usize;
        (0..=m).map(|i| 10f64.powf(a + (b - a) * i as f64 / m as f64)).collect()
    }
}

pub fn beta_norm(f: &RealFunction, beta: f64, grid: &LambdaGrid) -> Result<BetaNormEstimate> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(domain_err(format!("beta must lie in (0, 1], got {beta}")));
    }
    if !(grid.lambda_min > 0.0 && grid.lambda_min <= 1e-4 && grid.lambda_max >= 1e3 && grid.per_decade >= 1) {
        return Err(domain_err("lambda grid must be log-spaced and cover [1e-4, 1e3]"));
    }
    let ratio = |l: f64| f.fhat(l).norm() / l.powf(beta);
    let mut per_decade = grid.per_decade;
    let mut pts = grid.points(per_decade);
    let mut best = pts.iter().map(|&l| ratio(l)).fold(0.0, f64::max);
    let mut delta = f64::INFINITY;
    for _ in 0..grid.max_doublings {
        // Log-midpoints of the current grid: only the new points are evaluated.
        let mids: Vec<f64> = pts.windows(2).map(|w| (w[0] * w[1]).sqrt()).collect();
        let m = mids.iter().map(|&l| ratio(l)).fold(0.0, f64::max);
        let next = best.max(m);
        delta = if next > 0.0 { (next - best) / next } else { 0.0 };
        best = next;
        let mut merged = Vec::with_capacity(pts.len() + mids.len());
        for (i, p) in pts.iter().enumerate() {
            merged.push(*p);
            if i < mids.len() {
                merged.push(mids[i]);
            }
        }
        pts = merged;
        per_decade *= 2;
        if delta < grid.tolerance {
            break;
        }
    }
    let _ = per_decade;
    Ok(BetaNormEstimate {
        value: best,
        refinement_delta: delta,
        grid_points: pts.len(),
        unbounded_at_origin: f.integral.abs() > 1e-10 * (1.0 + f.l1),
    })
}

/// `2^{1−β} · min_y ∫ |f(x − y)| |x|^β dx` over a grid of shifts, an upper
/// bound for `‖f‖_[β]` when `∫f = 0`. The grid minimum is never below the infimum.
pub fn shifted_moment_bound(f: &RealFunction, beta: f64) -> Result<f64> {
    let (lo, hi) = f.range;
    let (lo, hi) = if f.support.is_some() { (lo, hi) } else { (-10.0, 10.0) };
    let k = 200;
    let mut best = f64::INFINITY;
    let mut best_y = 0.0;
    for i in 0..=k {
        let y = -(lo + (hi - lo) * i as f64 / k as f64);
        let m = shifted_beta_moment(f, beta, y)?;
        if m < best {
            best = m;
            best_y = y;
        }
    }
    // Local refinement around the coarse minimizer.
    let step = (hi - lo) / k as f64;
    let (mut a, mut b) = (best_y - step, best_y + step);
    for _ in 0..40 {
        let m1 = a + (b - a) / 3.0;
        let m2 = b - (b - a) / 3.0;
        let (v1, v2) = (shifted_beta_moment(f, beta, m1)?, shifted_beta_moment(f, beta, m2)?);
        best = best.min(v1).min(v2);
        if v1 < v2 {
            b = m2;
        } else {
            a = m1;
        }
    }
    Ok(2f64.powf(1.0 - beta) * best)
}

/// Kernel registry entry, addressable by name from configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "name", rename_all = "kebab-case")]
pub enum KernelSpec {
    Triangular,
    Gaussian,
    Epanechnikov,
    Indicator { lo: f64, hi: f64 },
    ShiftedDiff { base: Box<KernelSpec>, a1: f64, a2: f64 },
}

impl KernelSpec {
    pub fn build(&self) -> Result<RealFunction> {
        kernel(self)
    }
}

pub fn kernel(spec: &KernelSpec) -> Result<RealFunction> {
    Ok(match spec {
        KernelSpec::Triangular => RealFunction::triangular(),
        KernelSpec::Gaussian => RealFunction::gaussian(),
        KernelSpec::Epanechnikov => RealFunction::epanechnikov(),
        KernelSpec::Indicator { lo, hi } => RealFunction::indicator(*lo, *hi)?,
        KernelSpec::ShiftedDiff { base, a1, a2 } => RealFunction::shifted_diff(&kernel(base)?, *a1, *a2),
    })
}

/// The base kernels of the registry.
pub fn library_kernels() -> Vec<RealFunction> {
    vec![
        RealFunction::triangular(),
        RealFunction::gaussian(),
        RealFunction::epanechnikov(),
        RealFunction::indicator(-0.5, 0.5).expect("valid interval"),
    ]
}

/// A pair of continuous functions `l ≤ u`.
#[derive(Debug, Clone)]
pub struct Bracket {
    pub lower: RealFunction,
    pub upper: RealFunction,
    /// `‖u − l‖_1` by quadrature.
    pub width: f64,
}

impl Bracket {
    fn new(lower: RealFunction, upper: RealFunction) -> Self {
        let diff = RealFunction::sum(&[upper.clone(), lower.scaled(-1.0)]);
        let width = diff.l1;
        Bracket { lower, upper, width }
    }

    /// Checks `l ≤ f ≤ u` at the given points.
    pub fn contains(&self, f: &RealFunction, xs: &[f64]) -> bool {
        xs.iter().all(|&x| {
            let v = f.eval(x);
            let tol = 1e-12 * (1.0 + v.abs());
            self.lower.eval(x) <= v + tol && v <= self.upper.eval(x) + tol
        })
    }

    /// Checks `l ≤ u` at the given points.
    pub fn is_ordered(&self, xs: &[f64]) -> bool {
        xs.iter().all(|&x| self.lower.eval(x) <= self.upper.eval(x) + 1e-14)
    }
}

/// Parametric family `{g(·, θ) : θ ∈ [θ_0, θ_1]}` with
/// `|g(x, θ) − g(x, θ')| ≤ ġ(x) |θ − θ'|^τ`.
#[derive(Clone)]
pub struct ParametricFamily {
    pub theta: (f64, f64),
    pub tau: f64,
    pub modulus: RealFunction,
    pub member: Arc<dyn Fn(f64) -> RealFunction + Send + Sync>,
}

impl fmt::Debug for ParametricFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ParametricFamily").field("theta", &self.theta).field("tau", &self.tau).finish()
    }
}

/// Members of a function class.
#[derive(Debug, Clone)]
pub enum Members {
    Finite(Vec<RealFunction>),
    Parametric(ParametricFamily),
    /// `{f : |f| ≤ F, |f(x) − f(y)| ≤ L|x − y|^τ}`.
    SmoothBall {
        tau: f64,
        lipschitz: f64,
    },
}

/// A function class with an envelope and a bracketing builder.
#[derive(Debug, Clone)]
pub struct FunctionClass {
    pub members: Members,
    pub envelope: RealFunction,
}

/// Output of [`bracket_cover`].
#[derive(Debug, Clone)]
pub struct BracketCover {
    /// The brackets; for a smooth ball only the envelope-clipped net cell
    /// structure is implicit and this holds the brackets built for probes.
    pub brackets: Vec<Bracket>,
    /// Natural logarithm of the bracket count `N*`.
    pub log_count: f64,
    /// Grid resolution of a smooth-ball net (`None` otherwise).
    net: Option<BallNet>,
    /// Cell layout of a parametric cover.
    cells: Option<(f64, f64, usize)>,
}

#[derive(Debug, Clone, Copy)]
struct BallNet {
    lo: f64,
    hi: f64,
    nodes: usize,
    quantum: f64,
    slack: f64,
}

impl BracketCover {
    /// The bracket count, saturating at `f64::MAX` for astronomically large nets.
    pub fn count(&self) -> f64 {
        self.log_count.exp().round().min(f64::MAX)
    }
}

const BALL_NODE_CAP: usize = 1 << 16;

impl FunctionClass {
    pub fn singleton(f: RealFunction) -> Self {
        let envelope = abs_envelope(&f);
        FunctionClass { members: Members::Finite(vec![f]), envelope }
    }

    pub fn finite(members: Vec<RealFunction>, envelope: RealFunction) -> Self {
        FunctionClass { members: Members::Finite(members), envelope }
    }

    /// `{g(· − θ) : θ ∈ [θ_0, θ_1]}` for the triangular kernel `g`.
    pub fn triangular_location(theta0: f64, theta1: f64) -> Result<Self> {
        if !(theta0 <= theta1) {
            return Err(domain_err("location family needs theta0 <= theta1"));
        }
        let tri = RealFunction::triangular();
        // |g(x−θ) − g(x−θ')| ≤ |θ−θ'| · 1{x ∈ [θ0−1, θ1+1]}, majorized by a
        // continuous trapezoid with unit plateau and ramps of width 1/8.
        let ramp = 0.125;
        let modulus = RealFunction::piecewise_linear(
            vec![theta0 - 1.0 - ramp, theta0 - 1.0, theta1 + 1.0, theta1 + 1.0 + ramp],
            vec![0.0, 1.0, 1.0, 0.0],
        )?;
        let envelope =
            RealFunction::piecewise_linear(vec![theta0 - 1.0, theta0, theta1, theta1 + 1.0], vec![0.0, 1.0, 1.0, 0.0])?;
        let member = Arc::new(move |t: f64| tri.shifted(t));
        Ok(FunctionClass {
            members: Members::Parametric(ParametricFamily { theta: (theta0, theta1), tau: 1.0, modulus, member }),
            envelope,
        })
    }

    /// Hölder ball of order `tau` and constant `lipschitz`, majorized by `envelope`.
    pub fn smooth_ball(tau: f64, lipschitz: f64, envelope: RealFunction) -> Result<Self> {
        if !(tau > 0.0 && tau <= 1.0 && lipschitz > 0.0) {
            return Err(domain_err("smooth ball needs tau in (0, 1] and L > 0"));
        }
        if envelope.support.is_none() || !envelope.nonnegative {
            return Err(domain_err("smooth ball envelope must be nonnegative with compact support"));
        }
        Ok(FunctionClass { members: Members::SmoothBall { tau, lipschitz }, envelope })
    }

    /// `sup_f ‖f‖` for the sup, L¹ and L² norms, over the listed members (or the envelope).
    pub fn norms(&self) -> (f64, f64, f64) {
        match &self.members {
            Members::Finite(ms) => {
                ms.iter().fold((0.0, 0.0, 0.0), |acc, f| (acc.0.max(f.sup), acc.1.max(f.l1), acc.2.max(f.l2)))
            }
            _ => (self.envelope.sup, self.envelope.l1, self.envelope.l2),
        }
    }

    /// Draws a member, for membership testing.
    pub fn sample_member(&self, seed: u64) -> RealFunction {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match &self.members {
            Members::Finite(ms) => ms[rng.random_range(0..ms.len())].clone(),
            Members::Parametric(p) => (p.member)(rng.random_range(p.theta.0..=p.theta.1)),
            Members::SmoothBall { tau, lipschitz } => {
                let (lo, hi) = self.envelope.support.expect("compact envelope");
                let m = self.envelope.sup.max(1e-300);
                // A Lipschitz-s function bounded by m is τ-Hölder with constant s^τ (2m)^{1−τ}.
                let s = (0.9 * lipschitz / (2.0 * m).powf(1.0 - tau)).powf(1.0 / tau);
                let knots = 33;
                let xs: Vec<f64> = (0..knots).map(|i| lo + (hi - lo) * i as f64 / (knots - 1) as f64).collect();
                let dx = xs[1] - xs[0];
                let mut ys = vec![0.0; knots];
                for i in 1..knots {
                    let step = rng.random_range(-1.0..1.0) * s * dx;
                    ys[i] = (ys[i - 1] + step).clamp(-m, m);
                }
                let env = self.envelope.clone();
                let raw = RealFunction::piecewise_linear(xs, ys).expect("valid knots");
                RealFunction::custom("ball-member", lo, hi, move |x| {
                    let e = env.eval(x);
                    raw.eval(x).clamp(-e, e)
                })
                .expect("bounded support")
            }
        }
    }
}

fn abs_envelope(f: &RealFunction) -> RealFunction {
    if f.nonnegative {
        return f.clone();
    }
    let g = f.clone();
    let (lo, hi) = f.range;
    RealFunction::custom("abs", lo, hi, move |x| g.eval(x).abs()).expect("bounded range")
}

/// Gaussian bump with unit mass, used to widen brackets of continuous functions.
fn bump(mass: f64, center: f64, width: f64) -> RealFunction {
    RealFunction::gaussian().affine(mass / width, center, width).expect("positive width")
}

/// Continuous `ε`-brackets covering the class.
pub fn bracket_cover(class: &FunctionClass, epsilon: f64) -> Result<BracketCover> {
    if !(epsilon > 0.0) {
        return Err(domain_err(format!("epsilon must be positive, got {epsilon}")));
    }
    let env = &class.envelope;
    if 2.0 * env.l1 < epsilon {
        let b = Bracket::new(env.scaled(-1.0), env.clone());
        return Ok(BracketCover { brackets: vec![b], log_count: 0.0, net: None, cells: None });
    }
    match &class.members {
        Members::Finite(ms) => {
            let brackets = ms.iter().map(|f| member_bracket(f, epsilon)).collect::<Result<Vec<_>>>()?;
            let log_count = (brackets.len() as f64).ln();
            Ok(BracketCover { brackets, log_count, net: None, cells: None })
        }
        Members::Parametric(p) => {
            let gnorm = p.modulus.l1;
            let span = p.theta.1 - p.theta.0;
            // Each cell [θ_j − r, θ_j + r] is covered by g(·, θ_j) ± r^τ ġ with width 2 r^τ ‖ġ‖_1.
            let r_max = (epsilon / (2.0 * gnorm) * (1.0 - 1e-9)).powf(1.0 / p.tau);
            let cells = ((span / (2.0 * r_max)).ceil() as usize).max(1);
            if cells > 1 << 20 {
                return Err(Error::RefinementNeeded(format!("{cells} parametric cells at epsilon {epsilon}")));
            }
            let r = if span > 0.0 { span / (2.0 * cells as f64) } else { 0.0 };
            let rt = r.powf(p.tau);
            let brackets = (0..cells)
                .map(|j| {
                    let center = p.theta.0 + r * (2 * j + 1) as f64;
                    let g = (p.member)(center);
                    let widen = p.modulus.scaled(rt);
                    Bracket::new(g.add(&widen.scaled(-1.0)), g.add(&widen))
                })
                .collect::<Vec<_>>();
            Ok(BracketCover { log_count: (cells as f64).ln(), brackets, net: None, cells: Some((p.theta.0, r, cells)) })
        }
        Members::SmoothBall { tau, lipschitz } => {
            let (lo, hi) = env.support.expect("compact envelope");
            let len = hi - lo;
            // Width budget: quantization η·len plus the interpolation slack 2 L δ^τ len.
            let quantum = epsilon / (2.0 * len);
            let slack = epsilon / (4.0 * len) * (1.0 - 1e-9);
            let delta = (slack / lipschitz).powf(1.0 / tau);
            let nodes = (len / delta).ceil() as usize + 1;
            if nodes > BALL_NODE_CAP {
                return Err(Error::RefinementNeeded(format!(
                    "Hölder ball net needs {nodes} grid nodes at epsilon {epsilon} (cap {BALL_NODE_CAP})"
                )));
            }
            let step = len / (nodes - 1) as f64;
            let log_count = (0..nodes)
                .map(|i| {
                    let e = env.eval(lo + step * i as f64);
                    ((2.0 * e / quantum).floor() + 1.0).ln()
                })
                .sum();
            let net = BallNet { lo, hi, nodes, quantum, slack: lipschitz * step.powf(*tau) };
            Ok(BracketCover { brackets: Vec::new(), log_count, net: Some(net), cells: None })
        }
    }
}

fn member_bracket(f: &RealFunction, epsilon: f64) -> Result<Bracket> {
    if f.lipschitz.is_some() {
        let (lo, hi) = f.range;
        let b = bump(epsilon / 4.0, 0.5 * (lo + hi), 1.0 + 0.5 * (hi - lo));
        return Ok(Bracket::new(f.add(&b.scaled(-1.0)), f.add(&b)));
    }
    let (lo, hi) = f
        .support
        .ok_or_else(|| Error::RefinementNeeded(format!("{} is neither Lipschitz nor compactly supported", f.name)))?;
    // Linear interpolation of local maxima and minima over a grid, refined
    // until the bracket is narrow enough; a small bump keeps the inequalities strict.
    let pad = epsilon / 16.0;
    let mut cells = 64usize;
    loop {
        let h = (hi - lo) / cells as f64;
        let xs: Vec<f64> = (0..=cells + 4).map(|i| lo - 2.0 * h + h * i as f64).collect();
        let mut up = Vec::with_capacity(xs.len());
        let mut dn = Vec::with_capacity(xs.len());
        for &x in &xs {
            let (mn, mx) = local_range(f, x - h, x + h);
            up.push(mx);
            dn.push(mn);
        }
        let b = bump(pad, 0.5 * (lo + hi), 1.0 + 0.5 * (hi - lo));
        let upper = RealFunction::piecewise_linear(xs.clone(), up)?.add(&b);
        let lower = RealFunction::piecewise_linear(xs, dn)?.add(&b.scaled(-1.0));
        let br = Bracket::new(lower, upper);
        if br.width < epsilon {
            return Ok(br);
        }
        if cells >= 1 << 18 {
            return Err(Error::RefinementNeeded(format!("bracket for {} stalls at width {}", f.name, br.width)));
        }
        cells *= 2;
    }
}

/// Min and max of `f` over `[a, b]`, from breakpoints (with one-sided limits) and a sample.
fn local_range(f: &RealFunction, a: f64, b: f64) -> (f64, f64) {
    let mut mn = f64::INFINITY;
    let mut mx = f64::NEG_INFINITY;
    let mut visit = |x: f64| {
        let v = f.eval(x);
        mn = mn.min(v);
        mx = mx.max(v);
    };
    for k in 0..=16 {
        visit(a + (b - a) * k as f64 / 16.0);
    }
    let i0 = f.breakpoints.partition_point(|&p| p < a);
    for &p in &f.breakpoints[i0..] {
        if p > b {
            break;
        }
        let e = 1e-12 * (1.0 + p.abs());
        visit(p);
        if p - e >= a {
            visit(p - e);
        }
        if p + e <= b {
            visit(p + e);
        }
    }
    (mn, mx)
}

impl BracketCover {
    /// The bracket of the cover that contains `member` (for parametric
    /// classes pass the parameter as `theta`).
    pub fn locate(&self, class: &FunctionClass, member: &RealFunction, theta: Option<f64>) -> Result<Bracket> {
        if self.brackets.len() == 1 && self.log_count == 0.0 {
            return Ok(self.brackets[0].clone());
        }
        if let (Some((t0, r, cells)), Some(t)) = (self.cells, theta) {
            let j = if r > 0.0 { (((t - t0) / (2.0 * r)).floor() as usize).min(cells - 1) } else { 0 };
            return Ok(self.brackets[j].clone());
        }
        if let Some(net) = self.net {
            return Ok(ball_bracket(class, &net, member));
        }
        match &class.members {
            Members::Finite(ms) => {
                let xs = probe_grid(member, 257);
                for (f, b) in ms.iter().zip(&self.brackets) {
                    if xs.iter().all(|&x| f.eval(x) == member.eval(x)) {
                        return Ok(b.clone());
                    }
                }
                Err(domain_err("function is not a listed member"))
            }
            _ => Err(domain_err("parametric members are located by their parameter")),
        }
    }
}

fn ball_bracket(class: &FunctionClass, net: &BallNet, member: &RealFunction) -> Bracket {
    let env = &class.envelope;
    let step = (net.hi - net.lo) / (net.nodes - 1) as f64;
    let xs: Vec<f64> = (0..net.nodes).map(|i| net.lo + step * i as f64).collect();
    let mut lower = Vec::with_capacity(xs.len());
    let mut upper = Vec::with_capacity(xs.len());
    for &x in &xs {
        let e = env.eval(x);
        let k = ((member.eval(x) + e) / net.quantum).floor();
        let base = -e + k * net.quantum;
        lower.push(base - net.slack);
        upper.push(base + net.quantum + net.slack);
    }
    let l = RealFunction::piecewise_linear(xs.clone(), lower).expect("valid nodes");
    let u = RealFunction::piecewise_linear(xs, upper).expect("valid nodes");
    let (e1, e2, e3, e4) = (env.clone(), env.clone(), l.clone(), u.clone());
    let (lo, hi) = (net.lo, net.hi);
    let lower = RealFunction::custom("ball-lower", lo, hi, move |x| e3.eval(x).max(-e1.eval(x))).expect("bounded");
    let upper = RealFunction::custom("ball-upper", lo, hi, move |x| e4.eval(x).min(e2.eval(x))).expect("bounded");
    Bracket::new(lower, upper)
}

/// Evenly spaced probe points covering the effective range, with margins.
pub fn probe_grid(f: &RealFunction, points: usize) -> Vec<f64> {
    let (lo, hi) = f.range;
    let (lo, hi) = if f.support.is_some() { (lo, hi) } else { (-8.0, 8.0) };
    let pad = 0.1 * (hi - lo) + 0.1;
    let (a, b) = (lo - pad, hi + pad);
    (0..points).map(|i| a + (b - a) * i as f64 / (points - 1).max(1) as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::integrate_complex;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn kernel_examples() {
        let tri = RealFunction::triangular();
        assert_eq!(tri.eval(0.5), 0.5);
        assert_eq!(tri.fhat(0.0), Complex64::new(1.0, 0.0));
        let d = RealFunction::shifted_diff(&tri, 0.0, 1.0);
        assert_eq!(d.integral(), 0.0);
        assert_eq!(d.eval(0.5), 0.0);
        let spec = KernelSpec::ShiftedDiff { base: Box::new(KernelSpec::Triangular), a1: 0.0, a2: 1.0 };
        assert_eq!(kernel(&spec).unwrap().eval(0.5), 0.0);
    }

    #[test]
    fn kernel_spec_roundtrips_through_json() {
        let spec =
            KernelSpec::ShiftedDiff { base: Box::new(KernelSpec::Indicator { lo: 0.0, hi: 1.0 }), a1: 0.0, a2: 2.0 };
        let s = serde_json::to_string(&spec).unwrap();
        assert_eq!(serde_json::from_str::<KernelSpec>(&s).unwrap(), spec);
    }

    #[test]
    fn closed_form_transforms_match_quadrature() {
        let fs = [
            RealFunction::triangular(),
            RealFunction::gaussian(),
            RealFunction::epanechnikov(),
            RealFunction::indicator(-0.3, 0.9).unwrap(),
            RealFunction::shifted_diff(&RealFunction::epanechnikov(), 0.2, 1.1),
            RealFunction::triangular().affine(2.0, 0.5, 0.7).unwrap(),
        ];
        for f in &fs {
            for &l in &[0.0, 0.05, 0.7, 3.0, 11.0] {
                let q = integrate_complex(|x| Complex64::from_polar(f.eval(x), l * x), f.breakpoints(), 1e-14, 1e-12);
                assert!((q.value - f.fhat(l)).norm() < 1e-9, "{} at {l}", f.name());
                assert!(f.fhat(l).norm() <= f.fhat_envelope(l) + 1e-12);
            }
        }
    }

    #[test]
    fn numeric_transform_fallback() {
        let c = RealFunction::custom("tri", -1.0, 1.0, |x: f64| (1.0 - x.abs()).max(0.0)).unwrap();
        assert!(!c.has_closed_fhat());
        for &l in &[0.0, 1.3, 7.0] {
            assert!((c.fhat(l) - RealFunction::triangular().fhat(l)).norm() < 1e-10);
        }
    }

    #[test]
    fn metadata() {
        let tri = RealFunction::triangular();
        assert_eq!(tri.l1_norm(), 1.0);
        assert!((tri.l2_norm() - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        let d = RealFunction::shifted_diff(&tri, 0.0, 1.0);
        assert!((d.l1_norm() - 1.5).abs() < 1e-10);
        assert!((d.sup_norm() - 1.0).abs() < 1e-12);
        assert_eq!(d.lipschitz(), Some(2.0));
        assert_eq!(RealFunction::indicator(0.0, 1.0).unwrap().lipschitz(), None);
        let g = RealFunction::gaussian();
        assert!(g.support().is_none());
        let z = RealFunction::zero();
        assert_eq!(z.l1_norm(), 0.0);
    }

    #[test]
    fn beta_moments() {
        let tri = RealFunction::triangular();
        assert!((beta_moment(&tri, 1.0).unwrap() - 1.0 / 3.0).abs() < 1e-13);
        assert_eq!(beta_moment(&tri, 0.0).unwrap(), tri.l1_norm());
        // E Z^2 = 1 for the standard normal density.
        assert!((beta_moment(&RealFunction::gaussian(), 2.0).unwrap() - 1.0).abs() < 1e-11);
        assert!(beta_moment(&tri, -1.0).is_err());
    }

    #[test]
    fn beta_norm_examples() {
        let grid = LambdaGrid::default();
        let tri = RealFunction::triangular();
        let zero = RealFunction::shifted_diff(&tri, 0.0, 0.0);
        assert_eq!(beta_norm(&zero, 0.5, &grid).unwrap().value, 0.0);
        let f = RealFunction::shifted_diff(&tri, 0.0, 0.25);
        let est = beta_norm(&f, 0.5, &grid).unwrap();
        assert!(est.value <= 2f64.powf(0.5) * 0.25f64.powf(0.5) + 1e-8);
        assert!(est.value > 0.0 && !est.unbounded_at_origin);
        let g = RealFunction::shifted_diff(&tri, 0.0, 1.0);
        let est = beta_norm(&g, 0.5, &grid).unwrap();
        assert!(est.value <= shifted_moment_bound(&g, 0.5).unwrap() + 1e-8);
        assert!(beta_norm(&tri, 0.5, &grid).unwrap().unbounded_at_origin);
        assert!(beta_norm(&tri, 1.5, &grid).is_err());
        assert!(beta_norm(&tri, 0.0, &grid).is_err());
    }

    #[test]
    fn singleton_and_envelope_covers() {
        let tri = RealFunction::triangular();
        let class = FunctionClass::singleton(tri.clone());
        let cover = bracket_cover(&class, 0.1).unwrap();
        assert_eq!(cover.brackets.len(), 1);
        let b = &cover.brackets[0];
        assert!(b.width < 0.1);
        let xs = probe_grid(&tri, 1000);
        assert!(b.contains(&tri, &xs) && b.is_ordered(&xs));

        let big = 2.0 * class.envelope.l1_norm() + 1.0;
        let cover = bracket_cover(&class, big).unwrap();
        assert_eq!(cover.count(), 1.0);
    }

    #[test]
    fn indicator_bracket_is_continuous_and_narrow() {
        let ind = RealFunction::indicator(0.0, 1.0).unwrap();
        let class = FunctionClass::singleton(ind.clone());
        let cover = bracket_cover(&class, 0.05).unwrap();
        let b = &cover.brackets[0];
        assert!(b.width < 0.05);
        assert!(b.lower.lipschitz().is_some() && b.upper.lipschitz().is_some());
        let mut xs = probe_grid(&ind, 1000);
        xs.extend([0.0, 1.0, -1e-12, 1.0 + 1e-12]);
        assert!(b.contains(&ind, &xs));
    }

    #[test]
    fn location_family_cover() {
        let class = FunctionClass::triangular_location(0.0, 1.0).unwrap();
        let mut last = 0.0;
        for eps in [0.5, 0.2, 0.1, 0.05] {
            let cover = bracket_cover(&class, eps).unwrap();
            let n = cover.count();
            assert!(n <= (4.0 / eps).ceil(), "{n} brackets at {eps}");
            assert!(n >= last);
            last = n;
            for b in &cover.brackets {
                assert!(b.width < eps);
            }
            let xs = probe_grid(&class.envelope, 1000);
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            for _ in 0..100 {
                let t: f64 = rng.random_range(0.0..=1.0);
                let m = RealFunction::triangular().shifted(t);
                let b = cover.locate(&class, &m, Some(t)).unwrap();
                assert!(b.contains(&m, &xs), "theta {t} eps {eps}");
            }
        }
    }

    #[test]
    fn smooth_ball_cover() {
        let env = RealFunction::triangular().affine(1.0, 0.0, 2.0).unwrap();
        let class = FunctionClass::smooth_ball(0.5, 1.0, env.clone()).unwrap();
        let cover = bracket_cover(&class, 0.5).unwrap();
        assert!(cover.log_count > 0.0);
        let xs = probe_grid(&env, 1000);
        for seed in 0..5 {
            let m = class.sample_member(seed);
            let b = cover.locate(&class, &m, None).unwrap();
            assert!(b.width < 0.5);
            assert!(b.contains(&m, &xs), "seed {seed}");
        }
        let finer = bracket_cover(&class, 0.25).unwrap();
        assert!(finer.log_count >= cover.log_count);
        assert!(matches!(bracket_cover(&class, 1e-5), Err(Error::RefinementNeeded(_))));
    }

    proptest! {
        #[test]
        fn fhat_bounded_by_l1_and_hermitian(l in -50.0f64..50.0, a in -2.0f64..2.0) {
            for f in library_kernels() {
                let g = RealFunction::shifted_diff(&f, 0.0, a);
                for h in [f.clone(), g] {
                    let v = h.fhat(l);
                    prop_assert!(v.norm() <= h.l1_norm() * (1.0 + 1e-9) + 1e-12);
                    prop_assert!((h.fhat(-l) - v.conj()).norm() < 1e-12);
                }
            }
        }

        #[test]
        fn shifted_difference_bound(gap_exp in -6i32..=0, beta_idx in 0usize..4) {
            let beta = [0.25, 0.5, 0.75, 1.0][beta_idx];
            let gap = 2f64.powi(gap_exp);
            let grid = LambdaGrid { per_decade: 16, max_doublings: 2, ..LambdaGrid::default() };
            for g in library_kernels() {
                let f = RealFunction::shifted_diff(&g, 0.0, gap);
                let est = beta_norm(&f, beta, &grid).unwrap().value;
                let bound = 2f64.powf(1.0 - beta) * gap.powf(beta) * g.l1_norm();
                prop_assert!(est <= bound * (1.0 + 1e-8) + 1e-8, "{} gap {gap} beta {beta}", g.name());
            }
        }
    }
}
