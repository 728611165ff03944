//! Integral quantities: mass, energy, weighted norms, the Virial functional
//! `I(u) = Im int phi u conj(u_x)` and the separately integrated terms of
//! `-dI/dt`, plus time-averaged Morawetz integrals.
//!
//! Integrals use the rectangle rule `h sum f(x_j)` on the staggered grid and
//! derivatives are spectral. Kernels with `|x|^{-b}` are evaluated at the
//! nodes directly; the integrable singularity leaves an `O(h^{1-b})` error.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{eval_phi, power_of_modulus, GridSpec, ModelSpec, StateField, WeightSpec};
use crate::solver::Trajectory;
use crate::spectral::Spectral;

/// `h * sum(samples)`.
pub fn quadrature(samples: &[f64], grid: &GridSpec) -> Result<f64> {
    if samples.len() != grid.point_count {
        return Err(Error::Shape {
            expected: grid.point_count,
            got: samples.len(),
        });
    }
    Ok(grid.spacing() * samples.iter().sum::<f64>())
}

fn integrate(grid: &GridSpec, f: impl Iterator<Item = f64>) -> f64 {
    grid.spacing() * f.sum::<f64>()
}

/// Spectral `u_x`.
pub fn spectral_derivative(u: &StateField) -> StateField {
    let values = Spectral::new(&u.grid).derivative(&u.values);
    StateField {
        grid: u.grid,
        values,
        t: u.t,
    }
}

/// `int |u|^2`.
pub fn mass(u: &StateField) -> f64 {
    integrate(&u.grid, u.values.iter().map(|v| v.norm_sqr()))
}

/// `int |u_x|^2`.
pub fn kinetic(u: &StateField) -> f64 {
    let ux = Spectral::new(&u.grid).derivative(&u.values);
    integrate(&u.grid, ux.iter().map(|v| v.norm_sqr()))
}

/// Terms of `E = int |u_x|^2 + (sigma+1)^{-1} int K |u|^{2 sigma + 2} + mu int V |u|^2`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyTerms {
    pub kinetic: f64,
    pub nonlinear: f64,
    pub potential: f64,
}

impl EnergyTerms {
    pub fn total(&self) -> f64 {
        self.kinetic + self.nonlinear + self.potential
    }
}

pub fn energy(u: &StateField, model: &ModelSpec) -> Result<EnergyTerms> {
    let c = Coefficients::new(&u.grid, model, None)?;
    let ux = Spectral::new(&u.grid).derivative(&u.values);
    Ok(c.energy(&u.values, &ux))
}

/// Separately integrated terms of the Virial identity; their sum equals `-dI/dt`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct VirialTerms {
    /// `2 int phi_x |u_x|^2`
    pub kinetic: f64,
    /// `-1/2 int phi_xxx |u|^2`
    pub phi3: f64,
    /// `-(2/(2 sigma + 2) - 1) int phi_x K |u|^{2 sigma + 2}`
    pub k_weight: f64,
    /// `-(2/(2 sigma + 2)) int phi K' |u|^{2 sigma + 2}`
    pub k_slope: f64,
    /// `-mu int phi V' |u|^2`
    pub potential: f64,
}

impl VirialTerms {
    pub fn sum(&self) -> f64 {
        self.kinetic + self.phi3 + self.k_weight + self.k_slope + self.potential
    }
}

fn require_virial_weight(w: &WeightSpec) -> Result<()> {
    match w {
        WeightSpec::Cutoff { .. } | WeightSpec::Bounded => Ok(()),
        _ => Err(Error::Query(format!(
            "Virial functional needs a cutoff or bounded weight, got {w:?}"
        ))),
    }
}

/// `I(u) = Im int phi u conj(u_x)`.
pub fn virial(u: &StateField, w: &WeightSpec) -> Result<f64> {
    require_virial_weight(w)?;
    let ux = Spectral::new(&u.grid).derivative(&u.values);
    let phi = sample_weight(&u.grid, w, 0)?;
    Ok(virial_from(&u.grid, &phi, &u.values, &ux))
}

fn virial_from(grid: &GridSpec, phi: &[f64], u: &[Complex64], ux: &[Complex64]) -> f64 {
    integrate(
        grid,
        phi.iter()
            .zip(u.iter().zip(ux))
            .map(|(p, (a, b))| p * (a * b.conj()).im),
    )
}

/// Right-hand side of the Virial identity for the given weight.
///
/// For the bounded weight the identity assumes an odd state; the
/// `|u(t,0)|^2` boundary term is then zero and is not included.
pub fn virial_rhs(u: &StateField, model: &ModelSpec, w: &WeightSpec) -> Result<VirialTerms> {
    require_virial_weight(w)?;
    let c = Coefficients::new(&u.grid, model, Some(w))?;
    let ux = Spectral::new(&u.grid).derivative(&u.values);
    Ok(c.virial_terms(&u.values, &ux))
}

/// `||u||^2_{H^1_alpha} = int alpha (|u_x|^2 + |u|^2)`.
pub fn weighted_h1(u: &StateField, alpha: &WeightSpec) -> Result<f64> {
    if !matches!(alpha, WeightSpec::Alpha | WeightSpec::Psi) {
        return Err(Error::Query(format!(
            "weighted H^1 needs the alpha weight, got {alpha:?}"
        )));
    }
    let a = sample_weight(&u.grid, alpha, 0)?;
    let ux = Spectral::new(&u.grid).derivative(&u.values);
    Ok(weighted_h1_from(&u.grid, &a, &u.values, &ux))
}

fn weighted_h1_from(grid: &GridSpec, alpha: &[f64], u: &[Complex64], ux: &[Complex64]) -> f64 {
    integrate(
        grid,
        alpha
            .iter()
            .zip(u.iter().zip(ux))
            .map(|(a, (v, d))| a * (v.norm_sqr() + d.norm_sqr())),
    )
}

type IntervalWeights = (Vec<(usize, f64)>, Vec<usize>);

/// Overlap of each node's cell `[x_j - h/2, x_j + h/2]` with `[a, b]`, plus
/// the indices of nodes lying inside `[a, b]`.
fn interval_weights(grid: &GridSpec, a: f64, b: f64) -> Result<IntervalWeights> {
    if !(a < b) || a < -grid.half_length || b > grid.half_length {
        return Err(Error::Query(format!(
            "interval [{a}, {b}] must be ordered and inside the box"
        )));
    }
    let h = grid.spacing();
    let mut overlap = Vec::new();
    let mut inside = Vec::new();
    for j in 0..grid.point_count {
        let x = grid.node(j);
        let w = (b.min(x + 0.5 * h) - a.max(x - 0.5 * h)).max(0.0);
        if w > 0.0 {
            overlap.push((j, w));
        }
        if x >= a && x <= b {
            inside.push(j);
        }
    }
    if inside.is_empty() {
        return Err(Error::DegenerateInterval { a, b });
    }
    Ok((overlap, inside))
}

/// `(||u||_{L^2(I)}, ||u||_{L^inf(I)})` on `I = [a, b]`.
pub fn local_norms(u: &StateField, a: f64, b: f64) -> Result<(f64, f64)> {
    let (overlap, inside) = interval_weights(&u.grid, a, b)?;
    Ok(local_norms_from(&overlap, &inside, &u.values))
}

fn local_norms_from(overlap: &[(usize, f64)], inside: &[usize], u: &[Complex64]) -> (f64, f64) {
    let l2 = overlap.iter().map(|&(j, w)| w * u[j].norm_sqr()).sum::<f64>().sqrt();
    let linf = inside.iter().map(|&j| u[j].norm()).fold(0.0, f64::max);
    (l2, linf)
}

/// Fraction of the mass in `|x| >= (1 - fraction) L`; 0 for the zero field.
pub fn tail_mass(u: &StateField, fraction: f64) -> Result<f64> {
    if !(fraction > 0.0 && fraction <= 0.5) {
        return Err(Error::Query(format!(
            "tail fraction must lie in (0, 0.5], got {fraction}"
        )));
    }
    Ok(tail_mass_from(&u.grid, fraction, &u.values))
}

fn tail_mass_from(grid: &GridSpec, fraction: f64, u: &[Complex64]) -> f64 {
    let edge = (1.0 - fraction) * grid.half_length;
    let mut total = 0.0;
    let mut tail = 0.0;
    for (j, v) in u.iter().enumerate() {
        let m = v.norm_sqr();
        total += m;
        if grid.node(j).abs() >= edge {
            tail += m;
        }
    }
    if total == 0.0 {
        0.0
    } else {
        (tail / total).clamp(0.0, 1.0)
    }
}

/// `||(u(x) + u(-x))/2||_{L^2}` on a staggered grid.
pub fn even_part_norm(u: &StateField) -> f64 {
    let g = &u.grid;
    integrate(
        g,
        (0..g.point_count).map(|j| (0.5 * (u.values[j] + u.values[g.mirror(j)])).norm_sqr()),
    )
    .sqrt()
}

// ---------------------------------------------------------------------------
// Morawetz averages
// ---------------------------------------------------------------------------

/// Space-time kernels appearing in the Morawetz-type estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MorawetzKernel {
    /// `|x K'(x)| / (1+|x|)` over all of the box.
    XkprimeOver1px,
    /// `|x|^{-b}` on `|x| <= R`.
    AbsxMinusB,
    /// `|x|^{-b} (1+|x|)^{-2+b}` on `|x| <= R`.
    AbsxDecay,
    /// `|x|^{-b} (1+|x|)^{-4}` over all of the box.
    Alpha4Absx,
}

impl MorawetzKernel {
    pub fn is_localized(&self) -> bool {
        matches!(self, MorawetzKernel::AbsxMinusB | MorawetzKernel::AbsxDecay)
    }

    /// Kernel values at the nodes; zero outside `|x| <= R` for localized kernels.
    pub fn sample(&self, grid: &GridSpec, model: &ModelSpec, radius: f64) -> Result<Vec<f64>> {
        let b = model.b;
        grid.nodes()
            .into_iter()
            .map(|x| {
                let ax = x.abs();
                if self.is_localized() && ax > radius {
                    return Ok(0.0);
                }
                Ok(match self {
                    MorawetzKernel::XkprimeOver1px => (x * model.eval_k_prime(x)?).abs() / (1.0 + ax),
                    MorawetzKernel::AbsxMinusB => ax.powf(-b),
                    MorawetzKernel::AbsxDecay => ax.powf(-b) * (1.0 + ax).powf(b - 2.0),
                    MorawetzKernel::Alpha4Absx => ax.powf(-b) * (1.0 + ax).powi(-4),
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MorawetzQuery {
    pub horizon: f64,
    pub radius: f64,
    pub kernel: MorawetzKernel,
}

/// `int kernel |u|^{2 sigma + 2}` for one snapshot.
pub fn morawetz_density(kernel: &[f64], sigma: f64, u: &[Complex64], grid: &GridSpec) -> f64 {
    integrate(
        grid,
        kernel.iter().zip(u).map(|(k, v)| {
            let a2 = v.norm_sqr();
            k * a2 * power_of_modulus(a2, sigma)
        }),
    )
}

/// Trapezoid integral of a sampled series over `[t_0, horizon]`, interpolating
/// linearly at the horizon when it falls between samples.
pub fn trapezoid_to(times: &[f64], values: &[f64], horizon: f64) -> Result<f64> {
    if times.is_empty() || times.len() != values.len() {
        return Err(Error::Query("empty or misaligned time series".into()));
    }
    let last = *times.last().unwrap();
    if horizon > last * (1.0 + 1e-12) + 1e-12 {
        return Err(Error::Query(format!(
            "horizon {horizon} exceeds the recorded span ending at {last}"
        )));
    }
    let mut acc = 0.0;
    for i in 1..times.len() {
        let (t0, t1) = (times[i - 1], times[i]);
        if t0 >= horizon {
            break;
        }
        let (v0, v1) = (values[i - 1], values[i]);
        if t1 <= horizon {
            acc += 0.5 * (t1 - t0) * (v0 + v1);
        } else {
            let vh = v0 + (v1 - v0) * (horizon - t0) / (t1 - t0);
            acc += 0.5 * (horizon - t0) * (v0 + vh);
        }
    }
    Ok(acc)
}

/// `(1/T) int_0^T int kernel |u|^{2 sigma + 2} dx dt` over the trajectory snapshots.
pub fn morawetz_average(traj: &Trajectory, q: &MorawetzQuery, model: &ModelSpec) -> Result<f64> {
    if !(q.horizon > 0.0) {
        return Err(Error::Query("horizon must be positive".into()));
    }
    let first = traj
        .snapshots
        .first()
        .ok_or_else(|| Error::Query("trajectory has no snapshots".into()))?;
    let grid = first.grid;
    if q.kernel.is_localized() && q.radius > grid.half_length / 2.0 {
        return Err(Error::Query(format!(
            "radius {} exceeds half the box half-length",
            q.radius
        )));
    }
    let kernel = q.kernel.sample(&grid, model, q.radius)?;
    let times: Vec<f64> = traj.snapshots.iter().map(|s| s.t).collect();
    let dens: Vec<f64> = traj
        .snapshots
        .iter()
        .map(|s| morawetz_density(&kernel, model.sigma, &s.values, &grid))
        .collect();
    if times.len() == 1 {
        // A single snapshot is treated as constant in time.
        return Ok(dens[0]);
    }
    Ok(trapezoid_to(&times, &dens, q.horizon)? / q.horizon)
}

// ---------------------------------------------------------------------------
// Inequality ratios
// ---------------------------------------------------------------------------

/// `int |x|^{-b} |u|^{6-2b} / (||u_x||^2 ||u||^{4-2b})`.
pub fn gagliardo_nirenberg_ratio(u: &StateField, b: f64) -> Result<f64> {
    let m = mass(u);
    let k = kinetic(u);
    if m == 0.0 || k == 0.0 {
        return Err(Error::DegenerateInput(
            "ratio undefined for a constant or zero field".into(),
        ));
    }
    let num = integrate(
        &u.grid,
        u.grid
            .nodes()
            .iter()
            .zip(&u.values)
            .map(|(x, v)| x.abs().powf(-b) * v.norm().powf(6.0 - 2.0 * b)),
    );
    Ok(num / (k * m.powf(2.0 - b)))
}

/// `int |x|^{-b} |u|^2 / ||u||^2_{H^1}`.
pub fn singular_weight_ratio(u: &StateField, b: f64) -> Result<f64> {
    let denom = mass(u) + kinetic(u);
    if denom == 0.0 {
        return Err(Error::DegenerateInput("ratio undefined for the zero field".into()));
    }
    let num = integrate(
        &u.grid,
        u.grid
            .nodes()
            .iter()
            .zip(&u.values)
            .map(|(x, v)| x.abs().powf(-b) * v.norm_sqr()),
    );
    Ok(num / denom)
}

// ---------------------------------------------------------------------------
// Per-snapshot diagnostics
// ---------------------------------------------------------------------------

pub(crate) fn sample_weight(grid: &GridSpec, w: &WeightSpec, order: u32) -> Result<Vec<f64>> {
    grid.nodes().into_iter().map(|x| eval_phi(w, x, order)).collect()
}

/// Coefficient arrays at the nodes, computed once per grid/model/weight.
struct Coefficients {
    grid: GridSpec,
    sigma: f64,
    mu: f64,
    k: Vec<f64>,
    k_prime: Vec<f64>,
    v: Vec<f64>,
    v_prime: Vec<f64>,
    phi: Vec<f64>,
    phi_x: Vec<f64>,
    phi_xxx: Vec<f64>,
}

impl Coefficients {
    fn new(grid: &GridSpec, model: &ModelSpec, w: Option<&WeightSpec>) -> Result<Self> {
        let nodes = grid.nodes();
        let map = |f: &dyn Fn(f64) -> Result<f64>| -> Result<Vec<f64>> { nodes.iter().map(|&x| f(x)).collect() };
        let (phi, phi_x, phi_xxx) = match w {
            Some(w) => (
                sample_weight(grid, w, 0)?,
                sample_weight(grid, w, 1)?,
                sample_weight(grid, w, 3)?,
            ),
            None => (Vec::new(), Vec::new(), Vec::new()),
        };
        let with_v = model.mu != 0.0 && !model.potential.is_zero();
        Ok(Self {
            grid: *grid,
            sigma: model.sigma,
            mu: model.mu,
            k: map(&|x| model.eval_k(x))?,
            k_prime: map(&|x| model.eval_k_prime(x))?,
            v: if with_v {
                map(&|x| model.eval_v(x))?
            } else {
                vec![0.0; grid.point_count]
            },
            v_prime: if with_v {
                map(&|x| model.eval_v_prime(x))?
            } else {
                vec![0.0; grid.point_count]
            },
            phi,
            phi_x,
            phi_xxx,
        })
    }

    fn energy(&self, u: &[Complex64], ux: &[Complex64]) -> EnergyTerms {
        let h = self.grid.spacing();
        let mut terms = EnergyTerms::default();
        for j in 0..u.len() {
            let a2 = u[j].norm_sqr();
            terms.kinetic += ux[j].norm_sqr();
            terms.nonlinear += self.k[j] * a2 * power_of_modulus(a2, self.sigma);
            terms.potential += self.v[j] * a2;
        }
        terms.kinetic *= h;
        terms.nonlinear *= h / (self.sigma + 1.0);
        terms.potential *= h * self.mu;
        terms
    }

    fn virial_terms(&self, u: &[Complex64], ux: &[Complex64]) -> VirialTerms {
        let h = self.grid.spacing();
        let c = 1.0 / (self.sigma + 1.0);
        let mut t = VirialTerms::default();
        for j in 0..u.len() {
            let a2 = u[j].norm_sqr();
            let p = a2 * power_of_modulus(a2, self.sigma);
            t.kinetic += self.phi_x[j] * ux[j].norm_sqr();
            t.phi3 += self.phi_xxx[j] * a2;
            t.k_weight += self.phi_x[j] * self.k[j] * p;
            t.k_slope += self.phi[j] * self.k_prime[j] * p;
            t.potential += self.phi[j] * self.v_prime[j] * a2;
        }
        t.kinetic *= 2.0 * h;
        t.phi3 *= -0.5 * h;
        t.k_weight *= -(c - 1.0) * h;
        t.k_slope *= -c * h;
        t.potential *= -self.mu * h;
        t
    }
}

/// What the per-snapshot observer records besides the always-on quantities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsSpec {
    /// Weight of the active Virial identity.
    pub weight: WeightSpec,
    /// Interval for local norms.
    pub interval: (f64, f64),
    /// Outer fraction of the box monitored for tail mass.
    pub tail_fraction: f64,
}

impl Default for DiagnosticsSpec {
    fn default() -> Self {
        Self {
            weight: WeightSpec::Bounded,
            interval: (-2.0, 2.0),
            tail_fraction: 0.1,
        }
    }
}

/// Functional values of one recorded state.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    /// `I(u)` for the active weight.
    pub virial: f64,
    pub i_cutoff: Option<f64>,
    pub i_bounded: f64,
    pub rhs_terms: VirialTerms,
    pub h1_alpha: f64,
    pub l2_local: f64,
    pub linf_local: f64,
    pub tail_mass_fraction: f64,
    /// Even-part norm of the state as produced by the integrator.
    pub even_part: f64,
}

/// Evaluates [`DiagnosticsRecord`]s for a fixed grid, model and spec.
pub struct Diagnostics {
    spec: DiagnosticsSpec,
    coeffs: Coefficients,
    bounded_phi: Vec<f64>,
    alpha: Vec<f64>,
    overlap: Vec<(usize, f64)>,
    inside: Vec<usize>,
    spectral: Spectral,
}

impl Diagnostics {
    pub fn new(grid: &GridSpec, model: &ModelSpec, spec: DiagnosticsSpec) -> Result<Self> {
        require_virial_weight(&spec.weight)?;
        if !(spec.tail_fraction > 0.0 && spec.tail_fraction <= 0.5) {
            return Err(Error::Query("tail fraction must lie in (0, 0.5]".into()));
        }
        let (overlap, inside) = interval_weights(grid, spec.interval.0, spec.interval.1)?;
        Ok(Self {
            spec,
            coeffs: Coefficients::new(grid, model, Some(&spec.weight))?,
            bounded_phi: sample_weight(grid, &WeightSpec::Bounded, 0)?,
            alpha: sample_weight(grid, &WeightSpec::Alpha, 0)?,
            overlap,
            inside,
            spectral: Spectral::new(grid),
        })
    }

    pub fn spec(&self) -> &DiagnosticsSpec {
        &self.spec
    }

    pub fn record(&mut self, u: &StateField) -> DiagnosticsRecord {
        let grid = &u.grid;
        let ux = self.spectral.derivative(&u.values);
        let i_active = virial_from(grid, &self.coeffs.phi, &u.values, &ux);
        let i_bounded = match self.spec.weight {
            WeightSpec::Bounded => i_active,
            _ => virial_from(grid, &self.bounded_phi, &u.values, &ux),
        };
        let (l2_local, linf_local) = local_norms_from(&self.overlap, &self.inside, &u.values);
        DiagnosticsRecord {
            t: u.t,
            mass: mass(u),
            energy: self.coeffs.energy(&u.values, &ux).total(),
            virial: i_active,
            i_cutoff: matches!(self.spec.weight, WeightSpec::Cutoff { .. }).then_some(i_active),
            i_bounded,
            rhs_terms: self.coeffs.virial_terms(&u.values, &ux),
            h1_alpha: weighted_h1_from(grid, &self.alpha, &u.values, &ux),
            l2_local,
            linf_local,
            tail_mass_fraction: tail_mass_from(grid, self.spec.tail_fraction, &u.values),
            even_part: even_part_norm(u),
        }
    }
}

/// Centered differences `(I_{n+1} - I_{n-1}) / (t_{n+1} - t_{n-1})` of the
/// recorded Virial series, paired with the recorded `-dI/dt` at `t_n`.
/// Returns `(t_n, dI/dt, rhs_sum)` triples.
pub fn identity_residuals(records: &[DiagnosticsRecord]) -> Vec<(f64, f64, f64)> {
    records
        .windows(3)
        .map(|w| {
            let didt = (w[2].virial - w[0].virial) / (w[2].t - w[0].t);
            (w[1].t, didt, w[1].rhs_terms.sum())
        })
        .collect()
}

/// `max_n |dI/dt + rhs| / max_n |rhs|`.
pub fn max_relative_residual(records: &[DiagnosticsRecord]) -> f64 {
    let triples = identity_residuals(records);
    let scale = triples.iter().map(|r| r.2.abs()).fold(0.0, f64::max);
    let worst = triples.iter().map(|r| (r.1 + r.2).abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        worst
    } else {
        worst / scale
    }
}
