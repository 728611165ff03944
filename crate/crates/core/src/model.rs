//! Grids, the physical model `i u_t + u_xx = K(x)|u|^{2 sigma} u + mu V(x) u`,
//! the Virial weights, and pointwise evaluation of every coefficient.
//!
//! Coefficients are singular at `x = 0`. The default grid is staggered so that
//! no node sits on the origin; mollified families replace `|x|` by
//! `sqrt(x^2 + eps^2)` when a `C^1` coefficient is needed.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::Spectral;

/// Periodic staggered grid on `[-L, L)` with nodes `x_j = -L + (j + 1/2) h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub half_length: f64,
    pub point_count: usize,
    pub staggered: bool,
}

/// Build a staggered grid. `N` must be a power of two no smaller than 16.
pub fn make_grid(half_length: f64, point_count: usize) -> Result<GridSpec> {
    if !(half_length > 0.0) || !half_length.is_finite() {
        return Err(Error::Config(format!(
            "half-length L must be positive, got {half_length}"
        )));
    }
    if !point_count.is_power_of_two() || point_count < 16 {
        return Err(Error::Config(format!(
            "point count N must be a power of two >= 16, got {point_count}"
        )));
    }
    Ok(GridSpec {
        half_length,
        point_count,
        staggered: true,
    })
}

impl GridSpec {
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_length / self.point_count as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        let offset = if self.staggered { 0.5 } else { 0.0 };
        -self.half_length + (j as f64 + offset) * self.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.point_count).map(|j| self.node(j)).collect()
    }

    /// Index of the node at `-x_j`; only meaningful on a staggered grid.
    pub fn mirror(&self, j: usize) -> usize {
        self.point_count - 1 - j
    }

    /// The same box refined by a factor of two.
    pub fn refined(&self) -> GridSpec {
        GridSpec {
            point_count: self.point_count * 2,
            ..*self
        }
    }
}

// ---------------------------------------------------------------------------
// Nonlinearity coefficient K
// ---------------------------------------------------------------------------

/// Shape of `K` before the sign and mollification are applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CoefficientFamily {
    /// `K = 0` (linear equation).
    Zero,
    /// `|x|^{-b}`, positive sign only.
    K1Pure,
    /// `s |x|^{-b}`.
    K2Pure,
    /// `s |x|^{-b} (1+|x|)^{-2+b}`.
    K3Decay,
    /// `s |x|^{-b} (1+|x|)^{-3}`.
    K4Decay,
}

/// Hypothesis classes on `K` under which the decay results are stated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KClass {
    K1,
    K2,
    K3,
    K4,
}

impl CoefficientFamily {
    pub fn tag(&self) -> &'static str {
        match self {
            CoefficientFamily::Zero => "zero",
            CoefficientFamily::K1Pure => "K1_pure",
            CoefficientFamily::K2Pure => "K2_pure",
            CoefficientFamily::K3Decay => "K3_decay",
            CoefficientFamily::K4Decay => "K4_decay",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "zero" => Some(CoefficientFamily::Zero),
            "K1_pure" => Some(CoefficientFamily::K1Pure),
            "K2_pure" => Some(CoefficientFamily::K2Pure),
            "K3_decay" => Some(CoefficientFamily::K3Decay),
            "K4_decay" => Some(CoefficientFamily::K4Decay),
            _ => None,
        }
    }

    /// Exponent `p` of the far-field factor `(1+r)^{-p}`.
    fn tail_exponent(&self, b: f64) -> f64 {
        match self {
            CoefficientFamily::Zero | CoefficientFamily::K1Pure | CoefficientFamily::K2Pure => 0.0,
            CoefficientFamily::K3Decay => 2.0 - b,
            CoefficientFamily::K4Decay => 3.0,
        }
    }
}

/// `K` as used by the model: family, sign `s` and smoothing length `eps_K`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KCoefficient {
    pub family: CoefficientFamily,
    pub sign: f64,
    pub smoothing: f64,
}

impl KCoefficient {
    pub fn new(family: CoefficientFamily, sign: f64, smoothing: f64) -> Result<Self> {
        if sign != 1.0 && sign != -1.0 {
            return Err(Error::Validation(format!("K sign must be +1 or -1, got {sign}")));
        }
        if family == CoefficientFamily::K1Pure && sign < 0.0 {
            return Err(Error::Validation("K1_pure requires positive sign (K > 0)".into()));
        }
        if !(smoothing >= 0.0) || !smoothing.is_finite() {
            return Err(Error::Validation(format!(
                "K smoothing length must be >= 0, got {smoothing}"
            )));
        }
        Ok(Self {
            family,
            sign,
            smoothing,
        })
    }

    pub fn pure(family: CoefficientFamily, sign: f64) -> Result<Self> {
        Self::new(family, sign, 0.0)
    }

    pub fn zero() -> Self {
        Self {
            family: CoefficientFamily::Zero,
            sign: 1.0,
            smoothing: 0.0,
        }
    }

    pub fn is_mollified(&self) -> bool {
        self.smoothing > 0.0
    }

    /// Classes satisfied with constant 1.
    pub fn satisfies(&self, class: KClass) -> bool {
        use CoefficientFamily::*;
        match class {
            KClass::K1 => self.sign > 0.0 && matches!(self.family, K1Pure | K2Pure),
            KClass::K2 => true,
            KClass::K3 => matches!(self.family, Zero | K3Decay | K4Decay),
            KClass::K4 => matches!(self.family, Zero | K4Decay),
        }
    }
}

/// Full model: `sigma`, `b`, `mu`, `K` and `V`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub sigma: f64,
    pub b: f64,
    pub mu: f64,
    pub k: KCoefficient,
    pub potential: PotentialSpec,
}

impl ModelSpec {
    pub fn new(sigma: f64, b: f64, mu: f64, k: KCoefficient, potential: PotentialSpec) -> Result<Self> {
        let model = Self {
            sigma,
            b,
            mu,
            k,
            potential,
        };
        model.validate()?;
        Ok(model)
    }

    /// `mu = 0`, `V = 0`.
    pub fn without_potential(sigma: f64, b: f64, k: KCoefficient) -> Result<Self> {
        Self::new(sigma, b, 0.0, k, PotentialSpec::zero())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.b > 0.0 && self.b < 1.0) {
            return Err(Error::Validation("b must lie in (0,1)".into()));
        }
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::Validation("sigma must be positive".into()));
        }
        if !(self.mu >= 0.0) || !self.mu.is_finite() {
            return Err(Error::Validation("mu must be >= 0".into()));
        }
        self.potential.validate()
    }

    /// Nonlinearity coefficient `K(x)`.
    pub fn eval_k(&self, x: f64) -> Result<f64> {
        if self.k.family == CoefficientFamily::Zero {
            return Ok(0.0);
        }
        let r = radius(x, self.k.smoothing, "K is singular at the origin")?;
        Ok(self.k_profile(r).0)
    }

    /// `K'(x)`.
    pub fn eval_k_prime(&self, x: f64) -> Result<f64> {
        if self.k.family == CoefficientFamily::Zero {
            return Ok(0.0);
        }
        let r = radius(x, self.k.smoothing, "K' is singular at the origin")?;
        Ok(self.k_profile(r).1 * x / r)
    }

    /// Radial profile `f(r)` and `f'(r)` with `K(x) = f(sqrt(x^2 + eps^2))`.
    fn k_profile(&self, r: f64) -> (f64, f64) {
        let b = self.b;
        let s = self.k.sign;
        let p = self.k.family.tail_exponent(b);
        let core = r.powf(-b);
        let tail = (1.0 + r).powf(-p);
        let value = s * core * tail;
        let deriv = s * (-b * core / r * tail - p * core * tail / (1.0 + r));
        (value, deriv)
    }

    /// Potential `V(x)`; zero when `mu = 0` is irrelevant here, callers scale by `mu`.
    pub fn eval_v(&self, x: f64) -> Result<f64> {
        self.potential.eval(x)
    }

    pub fn eval_v_prime(&self, x: f64) -> Result<f64> {
        self.potential.eval_prime(x)
    }
}

/// Relative mollification error bound `(b + p)/2 (eps/x)^2` valid for every family.
pub fn mollification_bound(model: &ModelSpec, x: f64) -> f64 {
    let eps = model.k.smoothing;
    let p = model.k.family.tail_exponent(model.b);
    0.5 * (model.b + p) * (eps / x).powi(2)
}

fn radius(x: f64, smoothing: f64, what: &'static str) -> Result<f64> {
    let r = if smoothing > 0.0 { x.hypot(smoothing) } else { x.abs() };
    if r == 0.0 {
        Err(Error::SingularEvaluation { x, what })
    } else {
        Ok(r)
    }
}

/// `|u|^{2 sigma}` computed from `|u|^2`, with `0^{2 sigma} = 0`.
#[inline]
pub fn power_of_modulus(abs2: f64, sigma: f64) -> f64 {
    if abs2 == 0.0 {
        0.0
    } else {
        (sigma * abs2.ln()).exp()
    }
}

// ---------------------------------------------------------------------------
// External potential V
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum PotentialFamily {
    Zero,
    /// `|x|^{-m} (1+|x|)^{-n}` with `0 <= m < 1`, `n + m > 2`.
    InversePower {
        m: f64,
        n: f64,
    },
    /// `|x|^{-m} e^{-n|x|}` with `m in (0,1)`, `n > 0`.
    Yukawa {
        m: f64,
        n: f64,
    },
}

/// How the auxiliary `V_0` is derived from `V` for the bound-state criterion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum V0Variant {
    /// `V_0 = -|x V'(x)|`.
    Cutoff,
    /// `V_0 = -x (1+|x|) V'(x)`.
    Bounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub family: PotentialFamily,
    /// Optional mollification length (`|x| -> sqrt(x^2 + eps^2)`), 0 by default.
    pub smoothing: f64,
}

impl PotentialSpec {
    pub fn zero() -> Self {
        Self {
            family: PotentialFamily::Zero,
            smoothing: 0.0,
        }
    }

    pub fn inverse_power(m: f64, n: f64) -> Result<Self> {
        let p = Self {
            family: PotentialFamily::InversePower { m, n },
            smoothing: 0.0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn yukawa(m: f64, n: f64) -> Result<Self> {
        let p = Self {
            family: PotentialFamily::Yukawa { m, n },
            smoothing: 0.0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_smoothing(mut self, eps: f64) -> Self {
        self.smoothing = eps;
        self
    }

    pub fn is_zero(&self) -> bool {
        self.family == PotentialFamily::Zero
    }

    pub fn validate(&self) -> Result<()> {
        match self.family {
            PotentialFamily::Zero => {}
            PotentialFamily::InversePower { m, n } => {
                if !(0.0..1.0).contains(&m) {
                    return Err(Error::Validation("inverse_power requires 0 <= m < 1".into()));
                }
                if !(n + m > 2.0) {
                    return Err(Error::Validation("inverse_power requires n + m > 2".into()));
                }
            }
            PotentialFamily::Yukawa { m, n } => {
                if !(m > 0.0 && m < 1.0) {
                    return Err(Error::Validation("yukawa requires m in (0,1)".into()));
                }
                if !(n > 0.0) {
                    return Err(Error::Validation("yukawa requires n > 0".into()));
                }
            }
        }
        if !(self.smoothing >= 0.0) {
            return Err(Error::Validation("potential smoothing must be >= 0".into()));
        }
        Ok(())
    }

    /// Radial profile `g(r)` and `g'(r)`.
    fn profile(&self, r: f64) -> (f64, f64) {
        match self.family {
            PotentialFamily::Zero => (0.0, 0.0),
            PotentialFamily::InversePower { m, n } => {
                let g = r.powf(-m) * (1.0 + r).powf(-n);
                (g, -(m / r + n / (1.0 + r)) * g)
            }
            PotentialFamily::Yukawa { m, n } => {
                let g = r.powf(-m) * (-n * r).exp();
                (g, -(m / r + n) * g)
            }
        }
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        if self.is_zero() {
            return Ok(0.0);
        }
        let r = radius(x, self.smoothing, "V is singular at the origin")?;
        Ok(self.profile(r).0)
    }

    pub fn eval_prime(&self, x: f64) -> Result<f64> {
        if self.is_zero() {
            return Ok(0.0);
        }
        let r = radius(x, self.smoothing, "V' is singular at the origin")?;
        Ok(self.profile(r).1 * x / r)
    }

    /// The bound-state potential `V_0` derived from `V`.
    pub fn eval_v0(&self, variant: V0Variant, x: f64) -> Result<f64> {
        let xv = x * self.eval_prime(x)?;
        Ok(match variant {
            V0Variant::Cutoff => -xv.abs(),
            V0Variant::Bounded => -(1.0 + x.abs()) * xv,
        })
    }

    /// Quadrature of `|x V'(x)| (1+|x|)^2` over the box; reported, never asserted.
    pub fn moment(&self, grid: &GridSpec) -> Result<f64> {
        let h = grid.spacing();
        let mut acc = 0.0;
        for x in grid.nodes() {
            acc += (x * self.eval_prime(x)?).abs() * (1.0 + x.abs()).powi(2);
        }
        Ok(h * acc)
    }
}

// ---------------------------------------------------------------------------
// Weights
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightSpec {
    /// Odd cutoff: `x` on `|x| <= R/2`, `+-R` beyond `|x| >= R`, glued with `eta`.
    Cutoff { radius: f64 },
    /// `x / (1+|x|)`.
    Bounded,
    /// `(1+|x|)^{-4}`, used for the localized mass.
    Psi,
    /// `(1+|x|)^{-4}`, the `H^1_alpha` weight.
    Alpha,
}

/// Smooth step `e^{-1/t} / (e^{-1/t} + e^{-1/(1-t)})` on `(0,1)`, 0 below, 1 above.
pub fn eta(t: f64) -> f64 {
    eta_derivative(t, 0)
}

/// `d^k eta / dt^k` for `k <= 3`, from the logistic form `eta = 1/(1 + e^{-z})`
/// with `z = 1/(1-t) - 1/t`.
pub fn eta_derivative(t: f64, order: u32) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return if order == 0 { 1.0 } else { 0.0 };
    }
    let z = 1.0 / (1.0 - t) - 1.0 / t;
    // sigma(z) and sigma(1 - sigma) without overflow.
    let (s, s1) = if z >= 0.0 {
        let e = (-z).exp();
        (1.0 / (1.0 + e), e / ((1.0 + e) * (1.0 + e)))
    } else {
        let e = z.exp();
        (e / (1.0 + e), e / ((1.0 + e) * (1.0 + e)))
    };
    if order == 0 {
        return s;
    }
    if s1 == 0.0 {
        return 0.0;
    }
    let u = 1.0 - t;
    let z1 = 1.0 / (u * u) + 1.0 / (t * t);
    match order {
        1 => s1 * z1,
        2 => {
            let z2 = 2.0 / (u * u * u) - 2.0 / (t * t * t);
            s1 * (1.0 - 2.0 * s) * z1 * z1 + s1 * z2
        }
        3 => {
            let z2 = 2.0 / (u * u * u) - 2.0 / (t * t * t);
            let z3 = 6.0 / u.powi(4) + 6.0 / t.powi(4);
            let s2 = s1 * (1.0 - 2.0 * s);
            let s3 = s1 * (1.0 - 6.0 * s + 6.0 * s * s);
            s3 * z1 * z1 * z1 + 3.0 * s2 * z1 * z2 + s1 * z3
        }
        _ => f64::NAN,
    }
}

/// Evaluate a weight or one of its first three derivatives.
pub fn eval_phi(w: &WeightSpec, x: f64, order: u32) -> Result<f64> {
    if order > 3 {
        return Err(Error::Config(format!("derivative order {order} not supported")));
    }
    match *w {
        WeightSpec::Cutoff { radius } => Ok(cutoff_phi(radius, x, order)),
        WeightSpec::Bounded => {
            let a = 1.0 + x.abs();
            match order {
                0 => Ok(x / a),
                1 => Ok(1.0 / (a * a)),
                _ if x == 0.0 => Err(Error::SingularEvaluation {
                    x,
                    what: "x/(1+|x|) is only C^1 at the origin",
                }),
                2 => Ok(-2.0 * x.signum() / (a * a * a)),
                _ => Ok(6.0 / a.powi(4)),
            }
        }
        WeightSpec::Psi | WeightSpec::Alpha => {
            let a = 1.0 + x.abs();
            if order == 0 {
                return Ok(a.powi(-4));
            }
            if x == 0.0 {
                return Err(Error::SingularEvaluation {
                    x,
                    what: "(1+|x|)^-4 has a kink at the origin",
                });
            }
            let falling: f64 = (0..order).map(|i| -4.0 - i as f64).product();
            Ok(x.signum().powi(order as i32) * falling * a.powi(-4 - order as i32))
        }
    }
}

/// Cutoff weight and derivatives. With `s = R - |x|` and `t = 2s/R` on the
/// transition zone, `phi = sgn(x) (R - s eta(t))` and
/// `d^k phi/dx^k = sgn(x)^{k+1} (-2/R)^{k-1} (t eta)^{(k)}(t)`.
fn cutoff_phi(radius: f64, x: f64, order: u32) -> f64 {
    let ax = x.abs();
    let sgn = if x < 0.0 { -1.0 } else { 1.0 };
    if ax <= 0.5 * radius {
        return match order {
            0 => x,
            1 => 1.0,
            _ => 0.0,
        };
    }
    if ax >= radius {
        return if order == 0 { sgn * radius } else { 0.0 };
    }
    let s = radius - ax;
    let t = 2.0 * s / radius;
    if order == 0 {
        return sgn * (radius - s * eta(t));
    }
    let k = order as i32;
    // (t eta)^{(k)} = t eta^{(k)} + k eta^{(k-1)}
    let teta = t * eta_derivative(t, order) + k as f64 * eta_derivative(t, order - 1);
    let parity = if (k + 1) % 2 == 0 { 1.0 } else { sgn };
    parity * (-2.0 / radius).powi(k - 1) * teta
}

impl WeightSpec {
    /// `sup |phi|`, used in the bound `|I| <= ||phi||_inf ||u|| ||u_x||`.
    pub fn sup_norm(&self) -> f64 {
        match self {
            WeightSpec::Cutoff { radius } => *radius,
            _ => 1.0,
        }
    }
}

// ---------------------------------------------------------------------------
// State
// ---------------------------------------------------------------------------

/// Samples of `u(t, .)` on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct StateField {
    pub grid: GridSpec,
    pub values: Vec<Complex64>,
    pub t: f64,
}

impl StateField {
    pub fn new(grid: GridSpec, values: Vec<Complex64>, t: f64) -> Result<Self> {
        if values.len() != grid.point_count {
            return Err(Error::Shape {
                expected: grid.point_count,
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::DegenerateInput("state contains non-finite samples".into()));
        }
        Ok(Self { grid, values, t })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.point_count],
            t: 0.0,
        }
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(f64) -> Complex64) -> Self {
        let values = (0..grid.point_count).map(|j| f(grid.node(j))).collect();
        Self { grid, values, t: 0.0 }
    }

    pub fn from_real_fn(grid: GridSpec, f: impl Fn(f64) -> f64) -> Self {
        Self::from_fn(grid, |x| Complex64::new(f(x), 0.0))
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| v * c).collect(),
            t: self.t,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.re == 0.0 && v.im == 0.0)
    }

    pub fn max_modulus(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// Initial-data families used by the scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialFamily {
    /// `e^{-((x-a)/w)^2} - e^{-((x+a)/w)^2}`.
    OddGaussianPair { center: f64, width: f64 },
    /// `(x/w) e^{-(x/w)^2}`.
    OddXgaussian { width: f64 },
    /// `e^{-(x/w)^2}`; not odd.
    Gaussian { width: f64 },
}

impl Default for InitialFamily {
    fn default() -> Self {
        InitialFamily::OddGaussianPair {
            center: 1.0,
            width: 1.0,
        }
    }
}

impl InitialFamily {
    pub fn is_odd(&self) -> bool {
        !matches!(self, InitialFamily::Gaussian { .. })
    }

    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            InitialFamily::OddGaussianPair { center, width } => {
                (-((x - center) / width).powi(2)).exp() - (-((x + center) / width).powi(2)).exp()
            }
            InitialFamily::OddXgaussian { width } => (x / width) * (-(x / width).powi(2)).exp(),
            InitialFamily::Gaussian { width } => (-(x / width).powi(2)).exp(),
        }
    }

    pub fn sample(&self, grid: GridSpec) -> StateField {
        StateField::from_real_fn(grid, |x| self.eval(x))
    }
}

/// Discrete `H^1` norm `sqrt(||u||^2 + ||u_x||^2)` with a spectral derivative.
pub fn h1_norm(u: &StateField) -> f64 {
    let h = u.grid.spacing();
    let ux = Spectral::new(&u.grid).derivative(&u.values);
    let sum: f64 = u.values.iter().zip(&ux).map(|(a, b)| a.norm_sqr() + b.norm_sqr()).sum();
    (h * sum).sqrt()
}

/// Rescale `u` so that its discrete `H^1` norm equals `target`.
pub fn scale_to_h1(u: &StateField, target: f64) -> Result<StateField> {
    if !(target > 0.0) {
        return Err(Error::DegenerateInput(format!(
            "target H^1 norm must be positive, got {target}"
        )));
    }
    let norm = h1_norm(u);
    if norm == 0.0 {
        return Err(Error::DegenerateInput("cannot rescale the zero field".into()));
    }
    Ok(u.scaled(target / norm))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_support::{adaptive_simpson, assert_close};

    fn k1(b: f64, eps: f64) -> ModelSpec {
        let k = KCoefficient::new(CoefficientFamily::K1Pure, 1.0, eps).unwrap();
        ModelSpec::without_potential(1.0, b, k).unwrap()
    }

    #[test]
    fn grid_examples() {
        let g = make_grid(1.0, 16).unwrap();
        assert_eq!(g.spacing(), 0.125);
        let g4 = GridSpec {
            half_length: 1.0,
            point_count: 4,
            staggered: true,
        };
        assert_eq!(g4.nodes(), vec![-0.75, -0.25, 0.25, 0.75]);
        let g = make_grid(40.0, 4096).unwrap();
        assert_eq!(g.spacing(), 0.01953125);
        assert!(matches!(make_grid(1.0, 5), Err(Error::Config(_))));
        assert!(matches!(make_grid(-1.0, 16), Err(Error::Config(_))));
        assert!(matches!(make_grid(1.0, 8), Err(Error::Config(_))));
    }

    #[test]
    fn staggered_grid_avoids_origin() {
        let g = make_grid(40.0, 4096).unwrap();
        let min = g.nodes().iter().map(|x| x.abs()).fold(f64::INFINITY, f64::min);
        assert_eq!(min, g.spacing() / 2.0);
        for j in 0..g.point_count {
            assert_eq!(g.node(g.mirror(j)), -g.node(j));
        }
    }

    #[test]
    fn k_examples() {
        assert_eq!(k1(0.5, 0.0).eval_k(1.0).unwrap(), 1.0);
        let k4 = KCoefficient::pure(CoefficientFamily::K4Decay, -1.0).unwrap();
        let m = ModelSpec::without_potential(1.0, 0.5, k4).unwrap();
        assert_close(m.eval_k(1.0).unwrap(), -0.125, 1e-15);
        assert_close(k1(0.5, 0.1).eval_k(0.0).unwrap(), 3.1622776601683795, 1e-14);
        assert!(matches!(
            k1(0.5, 0.0).eval_k(0.0),
            Err(Error::SingularEvaluation { .. })
        ));
    }

    #[test]
    fn k1_pure_rejects_negative_sign() {
        assert!(KCoefficient::pure(CoefficientFamily::K1Pure, -1.0).is_err());
        assert!(KCoefficient::pure(CoefficientFamily::K2Pure, 0.5).is_err());
    }

    #[test]
    fn k_prime_matches_finite_differences() {
        for family in [
            CoefficientFamily::K2Pure,
            CoefficientFamily::K3Decay,
            CoefficientFamily::K4Decay,
        ] {
            for eps in [0.0, 0.07] {
                let k = KCoefficient::new(family, -1.0, eps).unwrap();
                let m = ModelSpec::without_potential(1.5, 0.3, k).unwrap();
                for &x in &[-3.1, -0.4, 0.2, 1.7, 6.0] {
                    let d = 1e-5;
                    let fd = (m.eval_k(x + d).unwrap() - m.eval_k(x - d).unwrap()) / (2.0 * d);
                    assert_close(m.eval_k_prime(x).unwrap(), fd, 1e-7);
                }
            }
        }
    }

    #[test]
    fn k1_positive_and_monotone_on_nodes() {
        let g = make_grid(40.0, 4096).unwrap();
        let m = k1(0.5, 0.0);
        for x in g.nodes() {
            assert!(m.eval_k(x).unwrap() > 0.0);
            assert!(x * m.eval_k_prime(x).unwrap() <= 0.0);
        }
    }

    #[test]
    fn k4_decay_bound_with_unit_constant() {
        let g = make_grid(40.0, 4096).unwrap();
        let k4 = KCoefficient::pure(CoefficientFamily::K4Decay, 1.0).unwrap();
        let m = ModelSpec::without_potential(1.0, 0.5, k4).unwrap();
        for x in g.nodes() {
            let bound = x.abs().powf(-0.5) * (1.0 + x.abs()).powi(-3);
            assert!(m.eval_k(x).unwrap().abs() <= bound * (1.0 + 1e-14));
        }
    }

    #[test]
    fn mollified_approaches_pure() {
        for family in [
            CoefficientFamily::K1Pure,
            CoefficientFamily::K3Decay,
            CoefficientFamily::K4Decay,
        ] {
            let eps = 0.05;
            let pure = ModelSpec::without_potential(1.0, 0.5, KCoefficient::pure(family, 1.0).unwrap()).unwrap();
            let moll = ModelSpec::without_potential(1.0, 0.5, KCoefficient::new(family, 1.0, eps).unwrap()).unwrap();
            let mut x = 10.0 * eps;
            while x < 30.0 {
                let kp = pure.eval_k(x).unwrap();
                let km = moll.eval_k(x).unwrap();
                let rel = (km - kp).abs() / kp.abs();
                assert!(rel <= mollification_bound(&moll, x), "{family:?} x={x} rel={rel}");
                x *= 1.1;
            }
        }
    }

    #[test]
    fn eta_symmetry_and_derivatives() {
        assert_eq!(eta(0.5), 0.5);
        assert_eq!(eta(-1.0), 0.0);
        assert_eq!(eta(2.0), 1.0);
        for i in 1..100 {
            let t = i as f64 / 100.0;
            assert_close(eta(t) + eta(1.0 - t), 1.0, 1e-15);
        }
        for &t in &[0.1, 0.3, 0.5, 0.77, 0.93] {
            let d = 1e-5;
            for order in 1..=3 {
                let fd = (eta_derivative(t + d, order - 1) - eta_derivative(t - d, order - 1)) / (2.0 * d);
                assert_close(eta_derivative(t, order), fd, 1e-6);
            }
        }
    }

    #[test]
    fn phi_examples() {
        assert_eq!(eval_phi(&WeightSpec::Bounded, 1.0, 0).unwrap(), 0.5);
        let w = WeightSpec::Cutoff { radius: 8.0 };
        assert_close(eval_phi(&w, -6.0, 0).unwrap(), -7.0, 1e-15);
        // eta(0.8) directly from the exponential quotient
        let e = (-1.0f64 / 0.8).exp() / ((-1.0f64 / 0.8).exp() + (-1.0f64 / 0.2).exp());
        assert_close(eval_phi(&w, 4.8, 0).unwrap(), 8.0 - 3.2 * e, 1e-14);
        assert!(matches!(
            eval_phi(&WeightSpec::Bounded, 0.0, 2),
            Err(Error::SingularEvaluation { .. })
        ));
        assert_eq!(eval_phi(&w, 9.0, 1).unwrap(), 0.0);
        assert_eq!(eval_phi(&w, -12.0, 0).unwrap(), -8.0);
    }

    #[test]
    fn phi_derivatives_match_finite_differences() {
        let weights = [
            WeightSpec::Cutoff { radius: 8.0 },
            WeightSpec::Bounded,
            WeightSpec::Alpha,
        ];
        for w in &weights {
            for &x in &[-7.3, -5.1, -4.4, 0.7, 4.3, 5.5, 6.9, 7.8] {
                for order in 1..=3 {
                    let d = 1e-5;
                    let fd =
                        (eval_phi(w, x + d, order - 1).unwrap() - eval_phi(w, x - d, order - 1).unwrap()) / (2.0 * d);
                    assert_close(eval_phi(w, x, order).unwrap(), fd, 2e-6);
                }
            }
        }
    }

    #[test]
    fn cutoff_phi_shape_invariants() {
        let r = 8.0;
        let w = WeightSpec::Cutoff { radius: r };
        let n = 20_000;
        for i in 0..=n {
            let x = -1.5 * r + 3.0 * r * i as f64 / n as f64;
            assert_eq!(eval_phi(&w, -x, 0).unwrap(), -eval_phi(&w, x, 0).unwrap());
            assert!(eval_phi(&w, x, 1).unwrap() >= 0.0);
            let ax = x.abs();
            if ax > r / 2.0 && ax <= r {
                // sup |phi^(d)| |x|^d / R is 1.30, 7.23 and 114.4 for this eta
                for (d, c) in [(1, 64.0), (2, 64.0), (3, 120.0)] {
                    let bound = c * r * ax.powi(-(d as i32));
                    assert!(eval_phi(&w, x, d).unwrap().abs() <= bound);
                }
            }
        }
    }

    #[test]
    fn cutoff_phi_continuity_at_junctions() {
        let r = 6.0;
        let w = WeightSpec::Cutoff { radius: r };
        for order in 0..=3 {
            for &x0 in &[r / 2.0, r] {
                let lo = eval_phi(&w, x0 - 1e-9, order).unwrap();
                let hi = eval_phi(&w, x0 + 1e-9, order).unwrap();
                assert!((lo - hi).abs() < 1e-6, "order {order} at {x0}: {lo} vs {hi}");
            }
        }
    }

    #[test]
    fn potential_derivatives_and_v0() {
        let y = PotentialSpec::yukawa(0.5, 1.0).unwrap();
        let ip = PotentialSpec::inverse_power(0.0, 3.0).unwrap();
        for p in [y, ip, ip.with_smoothing(0.1)] {
            for &x in &[-2.0, -0.3, 0.4, 1.1, 5.0] {
                let d = 1e-6;
                let fd = (p.eval(x + d).unwrap() - p.eval(x - d).unwrap()) / (2.0 * d);
                assert_close(p.eval_prime(x).unwrap(), fd, 1e-6);
            }
        }
        // Yukawa has xV' <= 0, so both V0 variants have a definite sign.
        assert!(y.eval_v0(V0Variant::Cutoff, 0.7).unwrap() < 0.0);
        assert!(ip.eval_v0(V0Variant::Bounded, 0.7).unwrap() > 0.0);
        assert!(PotentialSpec::inverse_power(0.5, 1.0).is_err());
        assert!(PotentialSpec::yukawa(0.0, 1.0).is_err());
    }

    #[test]
    fn scale_to_h1_examples() {
        let g = make_grid(40.0, 4096).unwrap();
        assert!(matches!(
            scale_to_h1(&StateField::zeros(g), 1.0),
            Err(Error::DegenerateInput(_))
        ));
        let u = InitialFamily::default().sample(g);
        let n = h1_norm(&u);
        let v = scale_to_h1(&u.scaled(2.0 / n), 1.0).unwrap();
        assert_close(h1_norm(&v), 1.0, 1e-12);
        for (a, b) in v.values.iter().zip(&u.values) {
            assert_close(a.re, b.re / n, 1e-12);
        }

        // Closed form: ||f||^2 + ||f'||^2 = sqrt(pi/2) (4 + 4 e^{-2}).
        let exact = (std::f64::consts::FRAC_PI_2.sqrt() * (4.0 + 4.0 * (-2.0f64).exp())).sqrt();
        // Independent adaptive quadrature with the analytic derivative.
        let f = |x: f64| (-(x - 1.0).powi(2)).exp() - (-(x + 1.0).powi(2)).exp();
        let fp = |x: f64| -2.0 * (x - 1.0) * (-(x - 1.0).powi(2)).exp() + 2.0 * (x + 1.0) * (-(x + 1.0).powi(2)).exp();
        let quad = adaptive_simpson(&|x| f(x).powi(2) + fp(x).powi(2), -12.0, 12.0, 1e-14).sqrt();
        assert_close(quad, exact, 1e-10);
        let scaled = scale_to_h1(&u, 0.1).unwrap();
        let c = scaled.values[2500].re / u.values[2500].re;
        assert_close(c, 0.1 / exact, 1e-10);
    }
}
