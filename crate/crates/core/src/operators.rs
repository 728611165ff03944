//! Bound states of `-d^2/dx^2 + mu V_0` and coercivity of the quadratic forms
//! `B(w)` and `B_V(w) = H(w) + J(w)`.
//!
//! The eigenproblem is discretized by three-point finite differences on the
//! staggered nodes with homogeneous Dirichlet values one cell beyond the box.
//! Eigenvalue counts come from Sturm sequences, so they are exact for the
//! discrete operator up to rounding in the pivots.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{even_part_norm, mass, weighted_h1};
use crate::model::{GridSpec, PotentialSpec, StateField, V0Variant, WeightSpec};
use crate::spectral::Spectral;
use crate::suite::gaussian_suite;

/// Symmetric tridiagonal matrix with constant off-diagonal.
#[derive(Debug, Clone)]
pub struct Tridiagonal {
    pub diag: Vec<f64>,
    pub off: f64,
}

impl Tridiagonal {
    /// `-d^2/dx^2 + mu V_0` on the grid nodes.
    pub fn schrodinger(v0: &[f64], mu: f64, h: f64) -> Self {
        let inv = 1.0 / (h * h);
        Self {
            diag: v0.iter().map(|v| 2.0 * inv + mu * v).collect(),
            off: -inv,
        }
    }

    /// Gershgorin interval containing the spectrum.
    pub fn bounds(&self) -> (f64, f64) {
        let r = 2.0 * self.off.abs();
        let lo = self.diag.iter().cloned().fold(f64::INFINITY, f64::min) - r;
        let hi = self.diag.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + r;
        (lo, hi)
    }

    /// Number of eigenvalues strictly below `lambda`.
    pub fn sturm_count(&self, lambda: f64) -> usize {
        let e2 = self.off * self.off;
        let tiny = f64::MIN_POSITIVE.sqrt() * (1.0 + lambda.abs());
        let mut count = 0;
        let mut q = 1.0;
        for (i, &d) in self.diag.iter().enumerate() {
            q = if i == 0 { d - lambda } else { d - lambda - e2 / q };
            if q == 0.0 {
                q = -tiny;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// The `index`-th smallest eigenvalue by bisection on the Sturm count.
    pub fn eigenvalue(&self, index: usize) -> Result<f64> {
        let (mut lo, mut hi) = self.bounds();
        for _ in 0..300 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                return Ok(mid);
            }
            if self.sturm_count(mid) > index {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 4.0 * f64::EPSILON * lo.abs().max(hi.abs()) {
                return Ok(0.5 * (lo + hi));
            }
        }
        Err(Error::Bisection { index, lo, hi })
    }

    /// Solve `(T - shift) x = rhs` with the Thomas algorithm.
    fn solve_shifted(&self, shift: f64, rhs: &[f64]) -> Vec<f64> {
        let n = self.diag.len();
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut beta = self.diag[0] - shift;
        c[0] = self.off / beta;
        d[0] = rhs[0] / beta;
        for i in 1..n {
            beta = self.diag[i] - shift - self.off * c[i - 1];
            c[i] = self.off / beta;
            d[i] = (rhs[i] - self.off * d[i - 1]) / beta;
        }
        let mut x = vec![0.0; n];
        x[n - 1] = d[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = d[i] - c[i] * x[i + 1];
        }
        x
    }

    /// Eigenvector for an eigenvalue estimate, by inverse iteration.
    pub fn eigenvector(&self, eigenvalue: f64) -> Vec<f64> {
        let shift = eigenvalue * (1.0 + 1e-8) - 1e-14;
        let n = self.diag.len();
        // Smooth, sign-definite start; the ground state has no nodes.
        let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.25 * (i as f64 / n as f64)).collect();
        for _ in 0..4 {
            v = self.solve_shifted(shift, &v);
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter_mut().for_each(|x| *x /= norm);
        }
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    Even,
    Odd,
    Indeterminate,
}

pub fn classify_parity(v: &[f64]) -> Parity {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Parity::Indeterminate;
    }
    let n = v.len();
    let (mut even, mut odd) = (0.0, 0.0);
    for i in 0..n {
        let r = v[n - 1 - i];
        even += (v[i] - r).powi(2);
        odd += (v[i] + r).powi(2);
    }
    let tol = 1e-6 * norm;
    if even.sqrt() <= tol {
        Parity::Even
    } else if odd.sqrt() <= tol {
        Parity::Odd
    } else {
        Parity::Indeterminate
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenReport {
    pub mu: f64,
    /// Richardson extrapolation `(4 E_{h/2} - E_h)/3` of the smallest eigenvalue.
    pub lowest_eigenvalue: f64,
    pub lowest_coarse: f64,
    pub lowest_fine: f64,
    /// Sturm count of eigenvalues below 0 on the fine grid.
    pub negative_count: usize,
    /// Negative eigenvalues located individually by bisection (fine grid).
    pub negative_eigenvalues: Vec<f64>,
    pub ground_state_parity: Parity,
    /// Quadrature of `int V_0`.
    pub moment_integral: f64,
    /// Largest tested coupling below which the predicted count held; a
    /// lower-bound witness for the threshold coupling, filled in by sweeps.
    pub mu0_estimate: Option<f64>,
}

fn lowest_on(v0: &dyn Fn(f64) -> Result<f64>, mu: f64, grid: &GridSpec) -> Result<(Tridiagonal, f64)> {
    let samples = grid.nodes().into_iter().map(v0).collect::<Result<Vec<_>>>()?;
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateInput("V_0 samples must be finite".into()));
    }
    let t = Tridiagonal::schrodinger(&samples, mu, grid.spacing());
    let e = t.eigenvalue(0)?;
    Ok((t, e))
}

/// Eigen-analysis of `-d^2/dx^2 + mu V_0` on `grid` and its refinement.
pub fn lowest_eigenvalue(v0: &dyn Fn(f64) -> Result<f64>, mu: f64, grid: &GridSpec) -> Result<EigenReport> {
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(Error::Validation(format!("coupling mu must be positive, got {mu}")));
    }
    let fine_grid = grid.refined();
    let (_, coarse) = lowest_on(v0, mu, grid)?;
    let (fine, e_fine) = lowest_on(v0, mu, &fine_grid)?;
    let negative_count = fine.sturm_count(0.0);
    let negative_eigenvalues = (0..negative_count)
        .map(|i| fine.eigenvalue(i))
        .collect::<Result<Vec<_>>>()?;
    let parity = classify_parity(&fine.eigenvector(e_fine));
    let samples = grid.nodes().into_iter().map(v0).collect::<Result<Vec<_>>>()?;
    Ok(EigenReport {
        mu,
        lowest_eigenvalue: (4.0 * e_fine - coarse) / 3.0,
        lowest_coarse: coarse,
        lowest_fine: e_fine,
        negative_count,
        negative_eigenvalues,
        ground_state_parity: parity,
        moment_integral: grid.spacing() * samples.iter().sum::<f64>(),
        mu0_estimate: None,
    })
}

/// Single-grid eigen-analysis from node samples of `V_0` (no extrapolation).
pub fn lowest_eigenvalue_samples(v0_samples: &[f64], mu: f64, grid: &GridSpec) -> Result<EigenReport> {
    if v0_samples.len() != grid.point_count {
        return Err(Error::Shape {
            expected: grid.point_count,
            got: v0_samples.len(),
        });
    }
    if !(mu > 0.0) {
        return Err(Error::Validation(format!("coupling mu must be positive, got {mu}")));
    }
    if v0_samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateInput("V_0 samples must be finite".into()));
    }
    let t = Tridiagonal::schrodinger(v0_samples, mu, grid.spacing());
    let e = t.eigenvalue(0)?;
    let negative_count = t.sturm_count(0.0);
    Ok(EigenReport {
        mu,
        lowest_eigenvalue: e,
        lowest_coarse: e,
        lowest_fine: e,
        negative_count,
        negative_eigenvalues: (0..negative_count)
            .map(|i| t.eigenvalue(i))
            .collect::<Result<Vec<_>>>()?,
        ground_state_parity: classify_parity(&t.eigenvector(e)),
        moment_integral: grid.spacing() * v0_samples.iter().sum::<f64>(),
        mu0_estimate: None,
    })
}

/// Sweep `mu_list` for `V_0` derived from `pot`. `mu0_estimate` is the largest
/// `mu` of the leading run of couplings whose negative count is at most 1.
pub fn simon_klaus_check(
    pot: &PotentialSpec,
    variant: V0Variant,
    mu_list: &[f64],
    grid: &GridSpec,
) -> Result<Vec<EigenReport>> {
    pot.validate()?;
    if mu_list.iter().any(|&m| !(m > 0.0)) || mu_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Validation("mu list must be positive and increasing".into()));
    }
    let v0 = |x: f64| pot.eval_v0(variant, x);
    let mut reports = mu_list
        .iter()
        .map(|&mu| lowest_eigenvalue(&v0, mu, grid))
        .collect::<Result<Vec<_>>>()?;
    let mu0 = reports
        .iter()
        .take_while(|r| r.negative_count <= 1)
        .last()
        .map(|r| r.mu);
    for r in &mut reports {
        r.mu0_estimate = mu0;
    }
    Ok(reports)
}

// ---------------------------------------------------------------------------
// Quadratic forms
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Form {
    B,
    #[serde(rename = "B_V")]
    BV,
}

/// Separately integrated parts of `B_V(w) = local + potential + gradient`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FormTerms {
    /// `-3 int (1+|x|)^{-4} |w|^2`
    pub local: f64,
    /// `2 int (1+|x|)^{-2} |w_x|^2`
    pub gradient: f64,
    /// `-mu int x V'/(1+|x|) |w|^2`, zero for `B`.
    pub potential: f64,
    /// `int |(w/(1+|x|))_x|^2 - mu int x (1+|x|) V' |w/(1+|x|)|^2`
    pub j: f64,
}

impl FormTerms {
    pub fn value(&self) -> f64 {
        self.local + self.gradient + self.potential
    }

    pub fn h(&self) -> f64 {
        self.value() - self.j
    }
}

/// Terms of the form for a (possibly complex) field: real and imaginary parts
/// are summed, i.e. `B(u_1) + B(u_2)`.
pub fn form_terms(w: &StateField, form: Form, pot: &PotentialSpec, mu: f64) -> Result<FormTerms> {
    let norm = mass(w).sqrt();
    if norm == 0.0 {
        return Ok(FormTerms::default());
    }
    let even = even_part_norm(w);
    if even > 1e-10 * norm {
        return Err(Error::SymmetryPrecondition { even_part: even / norm });
    }
    let g = &w.grid;
    let h = g.spacing();
    let wx = Spectral::new(g).derivative(&w.values);
    let with_v = form == Form::BV && mu != 0.0 && !pot.is_zero();
    let mut t = FormTerms::default();
    for (j, x) in g.nodes().into_iter().enumerate() {
        let a = 1.0 + x.abs();
        let w2 = w.values[j].norm_sqr();
        t.local += w2 / a.powi(4);
        t.gradient += wx[j].norm_sqr() / (a * a);
        // (w/(1+|x|))_x = w_x/(1+|x|) - sgn(x) w/(1+|x|)^2
        let q = wx[j] / a - w.values[j] * (x.signum() / (a * a));
        t.j += q.norm_sqr();
        if with_v {
            let xv = x * pot.eval_prime(x)?;
            t.potential += xv / a * w2;
            t.j -= mu * xv * a * w2 / (a * a);
        }
    }
    t.local *= -3.0 * h;
    t.gradient *= 2.0 * h;
    t.potential *= -mu * h;
    t.j *= h;
    Ok(t)
}

/// `B(w)` or `B_V(w)` for odd `w`.
pub fn quadratic_form(w: &StateField, form: Form, pot: &PotentialSpec, mu: f64) -> Result<f64> {
    Ok(form_terms(w, form, pot, mu)?.value())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoercivityReport {
    pub form: Form,
    pub sample_count: usize,
    /// Samples that entered the statistics (`||w||_{H^1_alpha} > 1e-12`).
    pub evaluated: usize,
    pub no_samples: bool,
    pub min_ratio: Option<f64>,
    /// Smallest `J(w)` over the samples (`B_V` only).
    pub min_j: Option<f64>,
    /// Seeds of samples with ratio `<= 0`.
    pub failures: Vec<u64>,
}

impl CoercivityReport {
    pub fn coercive(&self) -> bool {
        matches!(self.min_ratio, Some(r) if r > 0.0)
    }
}

/// `form(w) / ||w||^2_{H^1_alpha}` for one odd sample.
pub fn coercivity_ratio(w: &StateField, form: Form, pot: &PotentialSpec, mu: f64) -> Result<Option<(f64, FormTerms)>> {
    let denom = weighted_h1(w, &WeightSpec::Alpha)?;
    if denom.sqrt() <= 1e-12 {
        return Ok(None);
    }
    let t = form_terms(w, form, pot, mu)?;
    Ok(Some((t.value() / denom, t)))
}

/// Evaluate the form over odd projections of the seeded Gaussian suite.
pub fn coercivity_sweep(
    grid: &GridSpec,
    form: Form,
    pot: &PotentialSpec,
    mu: f64,
    sample_count: usize,
    seed: u64,
) -> Result<CoercivityReport> {
    use rayon::prelude::*;
    let samples = gaussian_suite(grid, seed, sample_count);
    let results = samples
        .par_iter()
        .enumerate()
        .map(|(i, u)| {
            let w = crate::solver::project_odd(u);
            Ok((seed + i as u64, coercivity_ratio(&w, form, pot, mu)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = CoercivityReport {
        form,
        sample_count,
        evaluated: 0,
        no_samples: sample_count == 0,
        min_ratio: None,
        min_j: None,
        failures: Vec::new(),
    };
    for (s, r) in results {
        let Some((ratio, terms)) = r else { continue };
        report.evaluated += 1;
        report.min_ratio = Some(report.min_ratio.map_or(ratio, |m: f64| m.min(ratio)));
        if form == Form::BV {
            report.min_j = Some(report.min_j.map_or(terms.j, |m: f64| m.min(terms.j)));
        }
        if ratio <= 0.0 {
            report.failures.push(s);
        }
    }
    Ok(report)
}
