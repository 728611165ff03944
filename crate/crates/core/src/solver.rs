//! Strang split-step Fourier integrator.
//!
//! The linear flow is diagonal in Fourier space and the nonlinear flow is a
//! pointwise phase rotation (it leaves `|u|` invariant), so both substeps are
//! solved exactly and the discrete `L^2` norm is conserved to roundoff.
//! Between observations adjacent linear half-steps are fused into full steps.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{even_part_norm, mass, Diagnostics, DiagnosticsRecord, DiagnosticsSpec};
use crate::model::{power_of_modulus, GridSpec, ModelSpec, StateField};
use crate::spectral::Spectral;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub dt: f64,
    pub t_final: f64,
    pub enforce_odd: bool,
    /// Record diagnostics every `observer_stride` steps.
    pub observer_stride: usize,
    /// Abort once the outer-10% mass fraction exceeds this.
    pub tail_abort_threshold: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_final: 1.0,
            enforce_odd: false,
            observer_stride: 100,
            tail_abort_threshold: 1e-8,
        }
    }
}

impl SolverConfig {
    pub fn new(dt: f64, t_final: f64) -> Result<Self> {
        let cfg = Self {
            dt,
            t_final,
            ..Self::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.observer_stride = stride;
        self
    }

    pub fn with_odd(mut self, enforce_odd: bool) -> Self {
        self.enforce_odd = enforce_odd;
        self
    }

    pub fn with_tail_threshold(mut self, threshold: f64) -> Self {
        self.tail_abort_threshold = threshold;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_final > 0.0) || !self.t_final.is_finite() {
            return Err(Error::Config(format!("T must be positive, got {}", self.t_final)));
        }
        let n = (self.t_final / self.dt).round();
        if n < 1.0 || (n * self.dt - self.t_final).abs() > 1e-9 * self.t_final {
            return Err(Error::Config(format!(
                "T = {} is not an integer multiple of dt = {}",
                self.t_final, self.dt
            )));
        }
        if self.observer_stride == 0 {
            return Err(Error::Config("observer_stride must be >= 1".into()));
        }
        if !(self.tail_abort_threshold > 0.0 && self.tail_abort_threshold <= 1.0) {
            return Err(Error::Config("tail_abort_threshold must lie in (0, 1]".into()));
        }
        Ok(())
    }

    /// Also checks the accuracy guard `dt <= h`.
    pub fn validate_for(&self, grid: &GridSpec) -> Result<()> {
        self.validate()?;
        if self.dt > grid.spacing() {
            return Err(Error::Config(format!(
                "dt = {} exceeds the grid spacing h = {}",
                self.dt,
                grid.spacing()
            )));
        }
        Ok(())
    }

    pub fn step_count(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }

    /// Number of records including `t = 0` and the final time.
    pub fn record_count(&self) -> usize {
        self.step_count().div_ceil(self.observer_stride) + 1
    }
}

/// Snapshots and their diagnostics at the observer strides.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub model: ModelSpec,
    pub solver: SolverConfig,
    pub snapshots: Vec<StateField>,
    pub records: Vec<DiagnosticsRecord>,
}

/// Precomputed multipliers for a fixed grid, model and `dt`.
pub struct Propagator {
    grid: GridSpec,
    dt: f64,
    sigma: f64,
    k: Vec<f64>,
    mu_v: Vec<f64>,
    half: Vec<Complex64>,
    full: Vec<Complex64>,
    spectral: Spectral,
}

fn phase_multiplier(k: &[f64], tau: f64) -> Vec<Complex64> {
    let scale = 1.0 / k.len() as f64;
    k.iter().map(|&k| Complex64::from_polar(scale, -k * k * tau)).collect()
}

impl Propagator {
    pub fn new(grid: &GridSpec, model: &ModelSpec, dt: f64) -> Result<Self> {
        let spectral = Spectral::new(grid);
        let nodes = grid.nodes();
        let k = nodes.iter().map(|&x| model.eval_k(x)).collect::<Result<Vec<_>>>()?;
        let mu_v = if model.mu != 0.0 {
            nodes
                .iter()
                .map(|&x| Ok(model.mu * model.eval_v(x)?))
                .collect::<Result<Vec<_>>>()?
        } else {
            vec![0.0; grid.point_count]
        };
        let half = phase_multiplier(spectral.wavenumbers(), 0.5 * dt);
        let full = phase_multiplier(spectral.wavenumbers(), dt);
        Ok(Self {
            grid: *grid,
            dt,
            sigma: model.sigma,
            k,
            mu_v,
            half,
            full,
            spectral,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn linear(&mut self, u: &mut [Complex64], full: bool) {
        let m = if full { &self.full } else { &self.half };
        self.spectral.apply_multiplier(u, m);
    }

    fn nonlinear(&self, u: &mut [Complex64], t: f64) -> Result<()> {
        for ((v, &k), &w) in u.iter_mut().zip(&self.k).zip(&self.mu_v) {
            let a2 = v.norm_sqr();
            let theta = self.dt * (k * power_of_modulus(a2, self.sigma) + w);
            if !theta.is_finite() || !a2.is_finite() {
                return Err(Error::NumericalOverflow { t });
            }
            *v *= Complex64::from_polar(1.0, -theta);
        }
        Ok(())
    }

    /// `steps` Strang steps with fused interior half-steps.
    pub fn advance(&mut self, u: &mut StateField, steps: usize) -> Result<()> {
        if steps == 0 {
            return Ok(());
        }
        if u.grid != self.grid {
            return Err(Error::Shape {
                expected: self.grid.point_count,
                got: u.values.len(),
            });
        }
        let t0 = u.t;
        self.linear(&mut u.values, false);
        for s in 0..steps {
            self.nonlinear(&mut u.values, t0 + s as f64 * self.dt)?;
            let last = s + 1 == steps;
            self.linear(&mut u.values, !last);
        }
        u.t = t0 + steps as f64 * self.dt;
        Ok(())
    }
}

/// Free propagator factor `e^{-i k^2 dt/2}` applied to every mode.
pub fn linear_halfstep(u: &StateField, dt: f64) -> StateField {
    let mut spectral = Spectral::new(&u.grid);
    let m = phase_multiplier(spectral.wavenumbers(), 0.5 * dt);
    let mut out = u.clone();
    spectral.apply_multiplier(&mut out.values, &m);
    out
}

/// Pointwise `u_j <- u_j e^{-i dt (K(x_j)|u_j|^{2 sigma} + mu V(x_j))}`.
pub fn nonlinear_fullstep(u: &StateField, model: &ModelSpec, dt: f64) -> Result<StateField> {
    let p = Propagator::new(&u.grid, model, dt)?;
    let mut out = u.clone();
    p.nonlinear(&mut out.values, u.t)?;
    Ok(out)
}

/// One Strang step: half linear, full nonlinear, half linear.
pub fn strang_step(u: &StateField, model: &ModelSpec, dt: f64) -> Result<StateField> {
    let mut p = Propagator::new(&u.grid, model, dt)?;
    let mut out = u.clone();
    p.advance(&mut out, 1)?;
    Ok(out)
}

/// `(u(x) - u(-x)) / 2` on the staggered grid.
pub fn project_odd(u: &StateField) -> StateField {
    let g = &u.grid;
    let values = (0..g.point_count)
        .map(|j| 0.5 * (u.values[j] - u.values[g.mirror(j)]))
        .collect();
    StateField {
        grid: u.grid,
        values,
        t: u.t,
    }
}

fn project_odd_in_place(u: &mut StateField) {
    let n = u.grid.point_count;
    for j in 0..n / 2 {
        let m = n - 1 - j;
        let odd = 0.5 * (u.values[j] - u.values[m]);
        u.values[j] = odd;
        u.values[m] = -odd;
    }
}

fn check_odd_start(u0: &StateField) -> Result<()> {
    let norm = mass(u0).sqrt();
    let even = even_part_norm(u0);
    if norm > 0.0 && even > 1e-12 * norm {
        return Err(Error::SymmetryPrecondition { even_part: even / norm });
    }
    Ok(())
}

/// Integrate from `u0`, calling `observe` at `t = 0`, at every stride and at
/// `T`. Stops with a boundary-contamination error after observing a state
/// whose tail mass exceeds the threshold.
pub fn run_observed<F>(
    u0: &StateField,
    model: &ModelSpec,
    cfg: &SolverConfig,
    diag: DiagnosticsSpec,
    mut observe: F,
) -> Result<()>
where
    F: FnMut(&StateField, &DiagnosticsRecord) -> Result<()>,
{
    cfg.validate_for(&u0.grid)?;
    model.validate()?;
    if cfg.enforce_odd {
        check_odd_start(u0)?;
    }
    let mut diagnostics = Diagnostics::new(&u0.grid, model, diag)?;
    let mut prop = Propagator::new(&u0.grid, model, cfg.dt)?;
    let mut u = u0.clone();
    let t0 = u.t;
    let total = cfg.step_count();
    let mut done = 0;
    loop {
        let record = diagnostics.record(&u);
        if cfg.enforce_odd {
            project_odd_in_place(&mut u);
        }
        observe(&u, &record)?;
        if record.tail_mass_fraction > cfg.tail_abort_threshold {
            return Err(Error::BoundaryContamination {
                t: record.t,
                fraction: record.tail_mass_fraction,
                threshold: cfg.tail_abort_threshold,
            });
        }
        if done == total {
            return Ok(());
        }
        let chunk = cfg.observer_stride.min(total - done);
        prop.advance(&mut u, chunk)?;
        done += chunk;
        // Avoid accumulated rounding in the clock.
        u.t = t0 + done as f64 * cfg.dt;
    }
}

/// Evolve with default diagnostics, storing every observed snapshot.
pub fn evolve(u0: &StateField, model: &ModelSpec, cfg: &SolverConfig) -> Result<Trajectory> {
    evolve_with(u0, model, cfg, DiagnosticsSpec::default())
}

pub fn evolve_with(
    u0: &StateField,
    model: &ModelSpec,
    cfg: &SolverConfig,
    diag: DiagnosticsSpec,
) -> Result<Trajectory> {
    let mut snapshots = Vec::with_capacity(cfg.record_count());
    let mut records = Vec::with_capacity(cfg.record_count());
    run_observed(u0, model, cfg, diag, |u, r| {
        snapshots.push(u.clone());
        records.push(*r);
        Ok(())
    })?;
    Ok(Trajectory {
        model: *model,
        solver: *cfg,
        snapshots,
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_grid, CoefficientFamily, InitialFamily, KCoefficient};
    use crate::test_support::assert_close;
    use std::f64::consts::PI;

    fn free() -> ModelSpec {
        ModelSpec::without_potential(1.0, 0.5, KCoefficient::zero()).unwrap()
    }

    fn k1() -> ModelSpec {
        ModelSpec::without_potential(1.0, 0.5, KCoefficient::pure(CoefficientFamily::K1Pure, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn linear_halfstep_examples() {
        let g = make_grid(40.0, 1024).unwrap();
        let z = linear_halfstep(&StateField::zeros(g), 0.1);
        assert!(z.is_zero());

        let k = PI / g.half_length;
        let mode = StateField::from_fn(g, |x| Complex64::new(0.0, k * x).exp());
        let dt = 0.3;
        let out = linear_halfstep(&mode, dt);
        let phase = Complex64::from_polar(1.0, -k * k * dt / 2.0);
        for (a, b) in out.values.iter().zip(&mode.values) {
            assert!((a - phase * b).norm() < 1e-13);
        }
    }

    #[test]
    fn free_gaussian_peak_at_unit_time() {
        // u(t,x) = (1+4it)^{-1/2} e^{-x^2/(1+4it)}
        let g = make_grid(40.0, 4096).unwrap();
        let mut u = StateField::from_real_fn(g, |x| (-x * x).exp());
        for _ in 0..1000 {
            u = linear_halfstep(&u, 2e-3);
        }
        let oracle = |x: f64| {
            let z = Complex64::new(1.0, 4.0);
            z.powf(-0.5) * (-(x * x) / z).exp()
        };
        let err = g
            .nodes()
            .iter()
            .zip(&u.values)
            .map(|(&x, v)| (v - oracle(x)).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-12, "err {err}");
        let peak = u.max_modulus();
        assert!((peak - 17f64.powf(-0.25)).abs() < 1e-3 * peak);
    }

    #[test]
    fn nonlinear_fullstep_examples() {
        let g = make_grid(40.0, 256).unwrap();
        let m = k1();
        assert!(nonlinear_fullstep(&StateField::zeros(g), &m, 0.1).unwrap().is_zero());

        let u = InitialFamily::default().sample(g);
        let v = nonlinear_fullstep(&u, &m, 0.1).unwrap();
        for (a, b) in u.values.iter().zip(&v.values) {
            assert!((a.norm() - b.norm()).abs() < 1e-15);
        }

        // Node where K(x_j) = 1 requires |x_j| = 1; choose a grid with such a node.
        let g = make_grid(16.0, 16).unwrap();
        let j = g.nodes().iter().position(|&x| (x - 1.0).abs() < 1e-12).unwrap();
        let mut values = vec![Complex64::new(0.0, 0.0); 16];
        values[j] = Complex64::new(1.0, 0.0);
        let u = StateField::new(g, values, 0.0).unwrap();
        let v = nonlinear_fullstep(&u, &m, 0.1).unwrap();
        assert!((v.values[j] - Complex64::new(0.9950041652780258, -0.09983341664682815)).norm() < 1e-15);
    }

    #[test]
    fn strang_without_nonlinearity_is_exact_free_flow() {
        let g = make_grid(20.0, 512).unwrap();
        let u = InitialFamily::default().sample(g);
        let a = strang_step(&u, &free(), 0.05).unwrap();
        let b = linear_halfstep(&linear_halfstep(&u, 0.05), 0.05);
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).norm() < 1e-14);
        }
    }

    #[test]
    fn fused_advance_matches_repeated_strang_steps() {
        let g = make_grid(20.0, 512).unwrap();
        let m = k1();
        let u0 = InitialFamily::default().sample(g);
        let mut fused = u0.clone();
        Propagator::new(&g, &m, 1e-2).unwrap().advance(&mut fused, 20).unwrap();
        let mut single = u0;
        for _ in 0..20 {
            single = strang_step(&single, &m, 1e-2).unwrap();
        }
        for (x, y) in fused.values.iter().zip(&single.values) {
            assert!((x - y).norm() < 1e-12);
        }
        assert_close(fused.t, 0.2, 1e-15);
    }

    #[test]
    fn project_odd_examples() {
        let g = make_grid(20.0, 512).unwrap();
        let even = StateField::from_real_fn(g, |x| (-x * x).exp());
        assert!(project_odd(&even).max_modulus() < 1e-16);
        let odd = StateField::from_real_fn(g, |x| x * (-x * x).exp());
        let p = project_odd(&odd);
        for (a, b) in p.values.iter().zip(&odd.values) {
            assert!((a - b).norm() < 1e-16);
        }
        let shifted = StateField::from_real_fn(g, |x| (-(x - 1.0).powi(2)).exp());
        let p = project_odd(&shifted);
        for (x, v) in g.nodes().iter().zip(&p.values) {
            let expected = 0.5 * ((-(x - 1.0).powi(2)).exp() - (-(x + 1.0).powi(2)).exp());
            assert!((v.re - expected).abs() < 1e-15);
        }
        let pp = project_odd(&p);
        assert_eq!(pp.values, p.values);
    }

    #[test]
    fn evolve_zero_and_record_count() {
        let g = make_grid(20.0, 256).unwrap();
        let cfg = SolverConfig::new(1e-2, 1.0).unwrap().with_stride(30);
        let traj = evolve(&StateField::zeros(g), &k1(), &cfg).unwrap();
        assert_eq!(traj.records.len(), cfg.record_count());
        assert_eq!(traj.records.len(), 5);
        assert_close(traj.records.last().unwrap().t, 1.0, 1e-15);
        for r in &traj.records {
            assert_eq!(r.mass, 0.0);
            assert_eq!(r.energy, 0.0);
            assert_eq!(r.virial, 0.0);
        }
        let times: Vec<f64> = traj.snapshots.iter().map(|s| s.t).collect();
        assert!(times.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn evolve_rejects_bad_configs() {
        let g = make_grid(20.0, 256).unwrap();
        let u = InitialFamily::default().sample(g);
        assert!(SolverConfig::new(0.3, 1.0).is_err());
        assert!(SolverConfig::new(-1.0, 1.0).is_err());
        let cfg = SolverConfig::new(0.5, 1.0).unwrap();
        assert!(evolve(&u, &k1(), &cfg).is_err());
        let gauss = InitialFamily::Gaussian { width: 1.0 }.sample(g);
        let cfg = SolverConfig::new(0.01, 0.1).unwrap().with_odd(true);
        assert!(matches!(
            evolve(&gauss, &k1(), &cfg),
            Err(Error::SymmetryPrecondition { .. })
        ));
    }

    #[test]
    fn tail_breach_aborts_with_time() {
        let g = make_grid(10.0, 256).unwrap();
        let u = StateField::from_real_fn(g, |x| (-(x - 3.0).powi(2)).exp() * (8.0 * x).cos());
        let cfg = SolverConfig::new(0.01, 5.0).unwrap().with_stride(10);
        match evolve(&u, &free(), &cfg) {
            Err(Error::BoundaryContamination { t, fraction, .. }) => {
                assert!(t > 0.0 && t < 5.0);
                assert!(fraction > 1e-8);
            }
            other => panic!("expected contamination, got {other:?}"),
        }
    }

    #[test]
    fn overflow_is_reported() {
        let g = make_grid(10.0, 64).unwrap();
        let u = StateField::from_real_fn(g, |x| 1e200 * (-x * x).exp());
        assert!(matches!(
            nonlinear_fullstep(&u, &k1(), 0.1),
            Err(Error::NumericalOverflow { .. })
        ));
    }

    #[test]
    fn free_flow_is_time_reversible() {
        let g = make_grid(20.0, 512).unwrap();
        let u = InitialFamily::default().sample(g);
        let back = linear_halfstep(&linear_halfstep(&u, 0.37), -0.37);
        for (a, b) in back.values.iter().zip(&u.values) {
            assert!((a - b).norm() < 1e-14);
        }
    }
}
