//! Scenario runners: evolve the initial data of a decay theorem and collect
//! local norms, Morawetz averages and the running `int ||u||^2_{H^1_alpha} dt`.
//!
//! The theorems give limits without rates, so every pass/fail threshold here
//! is a frozen regression value.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{morawetz_density, trapezoid_to, DiagnosticsRecord, DiagnosticsSpec, MorawetzKernel};
use crate::model::{scale_to_h1, GridSpec, InitialFamily, KClass, ModelSpec, StateField, WeightSpec};
use crate::solver::{run_observed, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TheoremTag {
    Thm1Case1,
    Thm1Case2,
    Thm1Case3,
    ThmOddCase1,
    ThmOddCase2,
    ThmPotential1,
    ThmPotential2,
}

/// Right-hand side shape of a Morawetz bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum BoundForm {
    /// `R/T + R^{-b}`
    RPowerB { b: f64 },
    /// `R/T + R^{-2}`
    RSquared,
}

impl BoundForm {
    pub fn eval(&self, t: f64, r: f64) -> f64 {
        match *self {
            BoundForm::RPowerB { b } => r / t + r.powf(-b),
            BoundForm::RSquared => r / t + r.powi(-2),
        }
    }
}

/// How the decay verdict reads the local-norm series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayMode {
    /// Running minimum of `||u||_{L^2(I)}` (decay along a subsequence).
    Subsequence,
    /// Maximum of `||u||_{L^inf(I)}` over the terminal window.
    FullLimit,
}

impl TheoremTag {
    pub fn tag(&self) -> &'static str {
        match self {
            TheoremTag::Thm1Case1 => "thm1_case1",
            TheoremTag::Thm1Case2 => "thm1_case2",
            TheoremTag::Thm1Case3 => "thm1_case3",
            TheoremTag::ThmOddCase1 => "thm_odd_case1",
            TheoremTag::ThmOddCase2 => "thm_odd_case2",
            TheoremTag::ThmPotential1 => "thm_potential_1",
            TheoremTag::ThmPotential2 => "thm_potential_2",
        }
    }

    pub fn requires_odd(&self) -> bool {
        !matches!(
            self,
            TheoremTag::Thm1Case1 | TheoremTag::Thm1Case2 | TheoremTag::Thm1Case3
        )
    }

    pub fn requires_small_data(&self) -> bool {
        !matches!(self, TheoremTag::Thm1Case1 | TheoremTag::ThmOddCase1)
    }

    pub fn with_potential(&self) -> bool {
        matches!(self, TheoremTag::ThmPotential1 | TheoremTag::ThmPotential2)
    }

    pub fn decay_mode(&self) -> DecayMode {
        match self {
            TheoremTag::ThmOddCase1 | TheoremTag::ThmOddCase2 | TheoremTag::ThmPotential2 => DecayMode::FullLimit,
            _ => DecayMode::Subsequence,
        }
    }

    /// Kernel of the associated Morawetz quantity.
    pub fn kernel(&self) -> MorawetzKernel {
        match self {
            TheoremTag::Thm1Case1 | TheoremTag::ThmOddCase1 => MorawetzKernel::XkprimeOver1px,
            TheoremTag::Thm1Case2 => MorawetzKernel::AbsxMinusB,
            TheoremTag::Thm1Case3 => MorawetzKernel::AbsxDecay,
            TheoremTag::ThmOddCase2 => MorawetzKernel::Alpha4Absx,
            TheoremTag::ThmPotential1 | TheoremTag::ThmPotential2 => MorawetzKernel::Alpha4Absx,
        }
    }

    /// Bound shape for averaged estimates; `None` when only finiteness is claimed.
    pub fn bound_form(&self, b: f64) -> Option<BoundForm> {
        match self {
            TheoremTag::Thm1Case1 | TheoremTag::Thm1Case3 => Some(BoundForm::RSquared),
            TheoremTag::Thm1Case2 => Some(BoundForm::RPowerB { b }),
            _ => None,
        }
    }

    /// Check the hypotheses on `sigma`, `b`, `K`, `mu` and `V`.
    pub fn check_model(&self, m: &ModelSpec) -> Result<()> {
        let tag = self.tag();
        let critical = 2.0 - m.b;
        let fail = |msg: String| Err(Error::Validation(format!("{tag} requires {msg}")));
        if self.with_potential() {
            if !(m.mu > 0.0) || m.potential.is_zero() {
                return fail("mu > 0 and a nonzero potential".into());
            }
        } else if m.mu != 0.0 {
            return fail("mu = 0".into());
        }
        let k = &m.k;
        match self {
            TheoremTag::Thm1Case1 | TheoremTag::ThmOddCase1 => {
                if !k.satisfies(KClass::K1) {
                    return fail("K in class (K1)".into());
                }
            }
            TheoremTag::Thm1Case2 => {
                if !(m.sigma > critical) {
                    return fail(format!("sigma > 2 - b = {critical}"));
                }
            }
            TheoremTag::Thm1Case3 => {
                if !(m.sigma <= critical) {
                    return fail(format!("sigma <= 2 - b = {critical}"));
                }
                if !k.satisfies(KClass::K3) {
                    return fail("K in class (K3)".into());
                }
            }
            TheoremTag::ThmOddCase2 => {
                if !k.satisfies(KClass::K4) {
                    return fail("K in class (K4)".into());
                }
            }
            TheoremTag::ThmPotential1 => {
                let ok =
                    (m.sigma > critical && k.satisfies(KClass::K2)) || (m.sigma <= critical && k.satisfies(KClass::K3));
                if !ok {
                    return fail(format!(
                        "sigma > 2 - b = {critical} with (K2), or sigma <= 2 - b with (K3)"
                    ));
                }
            }
            TheoremTag::ThmPotential2 => {
                if !(k.satisfies(KClass::K1) || k.satisfies(KClass::K4)) {
                    return fail("K in class (K1) or (K4)".into());
                }
            }
        }
        Ok(())
    }
}

impl std::str::FromStr for TheoremTag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        use TheoremTag::*;
        [
            Thm1Case1,
            Thm1Case2,
            Thm1Case3,
            ThmOddCase1,
            ThmOddCase2,
            ThmPotential1,
            ThmPotential2,
        ]
        .into_iter()
        .find(|t| t.tag() == s)
        .ok_or_else(|| Error::Validation(format!("unknown theorem tag `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub theorem: TheoremTag,
    pub model: ModelSpec,
    pub initial: InitialFamily,
    /// Target `H^1` norm of the initial data; required by small-data theorems.
    pub epsilon: Option<f64>,
    pub interval: (f64, f64),
    pub horizons: Vec<f64>,
    pub radii: Vec<f64>,
}

impl ScenarioConfig {
    pub fn new(theorem: TheoremTag, model: ModelSpec) -> Self {
        Self {
            theorem,
            model,
            initial: InitialFamily::default(),
            epsilon: None,
            interval: (-2.0, 2.0),
            horizons: Vec::new(),
            radii: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.theorem.check_model(&self.model)?;
        let tag = self.theorem.tag();
        if self.theorem.requires_odd() && !self.initial.is_odd() {
            return Err(Error::Validation(format!("{tag} requires odd initial data")));
        }
        match self.epsilon {
            Some(e) if !(e > 0.0) => {
                return Err(Error::Validation(format!("epsilon must be positive, got {e}")));
            }
            None if self.theorem.requires_small_data() => {
                return Err(Error::Validation(format!("{tag} requires a small-data epsilon")));
            }
            _ => {}
        }
        let (a, b) = self.interval;
        if !(a < b) {
            return Err(Error::Validation(format!("interval [{a}, {b}] must satisfy a < b")));
        }
        if self.horizons.iter().chain(&self.radii).any(|v| !(*v > 0.0)) {
            return Err(Error::Validation("horizons and radii must be positive".into()));
        }
        Ok(())
    }

    /// Initial state on `grid`, rescaled to `epsilon` when one is given.
    pub fn initial_state(&self, grid: &GridSpec) -> Result<StateField> {
        let u = self.initial.sample(*grid);
        match self.epsilon {
            Some(e) => scale_to_h1(&u, e),
            None => Ok(u),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MorawetzPoint {
    pub horizon: f64,
    pub radius: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundFit {
    /// `max value / form` over the pairs.
    pub c: f64,
    pub ratios: Vec<f64>,
    /// `max ratio / min ratio` (1 when all ratios vanish).
    pub spread: f64,
    /// Largest factor by which a ratio changes when `T` doubles at fixed `R`;
    /// `None` when no doubled pair exists.
    pub doubling_change: Option<f64>,
}

impl BoundFit {
    /// Finite spread below `max_spread` and doubling change below `max_change`.
    pub fn verified(&self, max_spread: f64, max_change: f64) -> bool {
        self.spread.is_finite() && self.spread < max_spread && self.doubling_change.is_some_and(|c| c < max_change)
    }
}

/// Fit `value <= C form(T, R)` with `C` the largest observed ratio.
pub fn fit_bound(averages: &[MorawetzPoint], form: BoundForm) -> Result<BoundFit> {
    if averages.is_empty() {
        return Err(Error::Query("fit_bound needs at least one (T, R) pair".into()));
    }
    let ratios: Vec<f64> = averages
        .iter()
        .map(|p| p.value / form.eval(p.horizon, p.radius))
        .collect();
    let c = ratios.iter().cloned().fold(0.0, f64::max);
    let min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let spread = if c == 0.0 { 1.0 } else { c / min };
    let mut change: Option<f64> = None;
    for (i, p) in averages.iter().enumerate() {
        for (j, q) in averages.iter().enumerate() {
            let same_r = (p.radius - q.radius).abs() <= 1e-12 * p.radius;
            if i != j && same_r && (q.horizon - 2.0 * p.horizon).abs() <= 1e-12 * q.horizon {
                let f = if ratios[i] == ratios[j] {
                    1.0
                } else {
                    (ratios[i] / ratios[j]).max(ratios[j] / ratios[i])
                };
                change = Some(change.map_or(f, |c| c.max(f)));
            }
        }
    }
    Ok(BoundFit {
        c,
        ratios,
        spread,
        doubling_change: change,
    })
}

/// Running minimum of a series and the times at which a new minimum is reached.
pub fn subsequence_scan(series: &[(f64, f64)]) -> Result<(Vec<f64>, Vec<f64>)> {
    let Some(&(t0, v0)) = series.first() else {
        return Err(Error::Query("subsequence scan needs a nonempty series".into()));
    };
    let mut env = Vec::with_capacity(series.len());
    let mut candidates = vec![t0];
    let mut best = v0;
    for (i, &(t, v)) in series.iter().enumerate() {
        if i > 0 && v < best {
            best = v;
            candidates.push(t);
        }
        env.push(best);
    }
    Ok((env, candidates))
}

/// Cumulative trapezoid integral.
pub fn running_integral(times: &[f64], values: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(times.len());
    let mut acc = 0.0;
    for i in 0..times.len() {
        if i > 0 {
            acc += 0.5 * (times[i] - times[i - 1]) * (values[i] + values[i - 1]);
        }
        out.push(acc);
    }
    out
}

/// Frozen regression thresholds used by the verdicts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Full-limit theorems: terminal-window max / initial value of `||u||_{L^inf(I)}`.
    pub full_limit_factor: f64,
    /// Subsequence theorems: final envelope / initial value of `||u||_{L^2(I)}`.
    pub subsequence_factor: f64,
    /// Fraction of the horizon forming the terminal window.
    pub terminal_fraction: f64,
    /// Terminal-window share of the running `H^1_alpha` integral.
    pub plateau_fraction: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            full_limit_factor: 0.2,
            subsequence_factor: 0.5,
            terminal_fraction: 0.1,
            plateau_fraction: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub mode: DecayMode,
    /// Observed ratio compared against the decay threshold.
    pub decay_ratio: f64,
    pub decay_pass: bool,
    /// Terminal-window share of the running `H^1_alpha` integral (odd theorems).
    pub plateau_share: Option<f64>,
    pub plateau_pass: bool,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub theorem: TheoremTag,
    pub valid: bool,
    /// Time of a tail-mass breach or overflow, when the run stopped early.
    pub breach_time: Option<f64>,
    pub failure: Option<String>,
    pub times: Vec<f64>,
    pub l2_local: Vec<f64>,
    pub linf_local: Vec<f64>,
    /// Running minimum of `l2_local`.
    pub envelope: Vec<f64>,
    /// Times of new minima of `l2_local`.
    pub witnesses: Vec<f64>,
    /// `int_0^t ||u||^2_{H^1_alpha}`; the final value is the plateau `M`.
    pub h1_alpha_integral: Vec<f64>,
    pub morawetz_kernel: MorawetzKernel,
    /// Cumulative `int_0^t int kernel |u|^{2 sigma + 2}` (unlocalized kernels).
    pub morawetz_cumulative: Vec<f64>,
    pub morawetz: Vec<MorawetzPoint>,
    pub fit: Option<BoundFit>,
    pub max_even_part: f64,
    pub max_tail_mass: f64,
    pub thresholds: Thresholds,
    pub verdict: Verdict,
}

impl DecayReport {
    pub fn passed(&self) -> bool {
        self.valid && self.verdict.passed
    }
}

/// Run the scenario from its configured initial data.
pub fn run_scenario(grid: &GridSpec, cfg: &ScenarioConfig, solver: &SolverConfig) -> Result<DecayReport> {
    cfg.validate()?;
    let u0 = cfg.initial_state(grid)?;
    run_scenario_from(&u0, cfg, solver, Thresholds::default())
}

/// Run the scenario from explicit initial data (no rescaling).
pub fn run_scenario_from(
    u0: &StateField,
    cfg: &ScenarioConfig,
    solver: &SolverConfig,
    thresholds: Thresholds,
) -> Result<DecayReport> {
    run_scenario_recorded(u0, cfg, solver, thresholds).map(|(report, _)| report)
}

/// As [`run_scenario_from`], also returning every diagnostics record.
pub fn run_scenario_recorded(
    u0: &StateField,
    cfg: &ScenarioConfig,
    solver: &SolverConfig,
    thresholds: Thresholds,
) -> Result<(DecayReport, Vec<DiagnosticsRecord>)> {
    cfg.validate()?;
    let grid = u0.grid;
    let model = &cfg.model;
    let kernel_kind = cfg.theorem.kernel();
    let horizon_max = cfg.horizons.iter().cloned().fold(0.0, f64::max);
    if horizon_max > solver.t_final * (1.0 + 1e-12) {
        return Err(Error::Query(format!(
            "horizon {horizon_max} exceeds the run length {}",
            solver.t_final
        )));
    }
    if kernel_kind.is_localized() && cfg.radii.iter().any(|&r| r > grid.half_length / 2.0) {
        return Err(Error::Query("Morawetz radius exceeds half the box half-length".into()));
    }
    // One kernel per radius for localized kernels, one global kernel otherwise.
    let mut kernels = Vec::new();
    if kernel_kind.is_localized() {
        for &r in &cfg.radii {
            kernels.push(kernel_kind.sample(&grid, model, r)?);
        }
    } else {
        kernels.push(kernel_kind.sample(&grid, model, grid.half_length)?);
    }
    let diag = DiagnosticsSpec {
        weight: WeightSpec::Bounded,
        interval: cfg.interval,
        tail_fraction: 0.1,
    };

    let mut times = Vec::new();
    let mut l2 = Vec::new();
    let mut linf = Vec::new();
    let mut h1a = Vec::new();
    let mut dens: Vec<Vec<f64>> = vec![Vec::new(); kernels.len()];
    let mut max_even: f64 = 0.0;
    let mut max_tail: f64 = 0.0;
    let mut records = Vec::with_capacity(solver.record_count());
    let outcome = run_observed(u0, model, solver, diag, |u, r| {
        records.push(*r);
        times.push(r.t);
        l2.push(r.l2_local);
        linf.push(r.linf_local);
        h1a.push(r.h1_alpha);
        max_even = max_even.max(r.even_part);
        max_tail = max_tail.max(r.tail_mass_fraction);
        for (k, d) in kernels.iter().zip(dens.iter_mut()) {
            d.push(morawetz_density(k, model.sigma, &u.values, &grid));
        }
        Ok(())
    });
    let (valid, breach_time, failure) = match outcome {
        Ok(()) => (true, None, None),
        Err(e @ Error::BoundaryContamination { t, .. }) | Err(e @ Error::NumericalOverflow { t }) => {
            (false, Some(t), Some(e.to_string()))
        }
        Err(e) => return Err(e),
    };

    let series: Vec<(f64, f64)> = times.iter().cloned().zip(l2.iter().cloned()).collect();
    let (envelope, witnesses) = subsequence_scan(&series)?;
    let h1_alpha_integral = running_integral(&times, &h1a);
    let morawetz_cumulative = if kernel_kind.is_localized() {
        Vec::new()
    } else {
        running_integral(&times, &dens[0])
    };

    let mut morawetz = Vec::new();
    if valid && kernel_kind.is_localized() {
        for (ri, &r) in cfg.radii.iter().enumerate() {
            for &t in &cfg.horizons {
                let value = trapezoid_to(&times, &dens[ri], t)? / t;
                morawetz.push(MorawetzPoint {
                    horizon: t,
                    radius: r,
                    value,
                });
            }
        }
    }
    let fit = match cfg.theorem.bound_form(model.b) {
        Some(form) if !morawetz.is_empty() => Some(fit_bound(&morawetz, form)?),
        _ => None,
    };

    let verdict = decide(
        cfg.theorem,
        &times,
        &l2,
        &linf,
        &envelope,
        &h1_alpha_integral,
        &thresholds,
    );
    let report = DecayReport {
        theorem: cfg.theorem,
        valid,
        breach_time,
        failure,
        times,
        l2_local: l2,
        linf_local: linf,
        envelope,
        witnesses,
        h1_alpha_integral,
        morawetz_kernel: kernel_kind,
        morawetz_cumulative,
        morawetz,
        fit,
        max_even_part: max_even,
        max_tail_mass: max_tail,
        thresholds,
        verdict,
    };
    Ok((report, records))
}

fn ratio(value: f64, reference: f64) -> f64 {
    if reference == 0.0 {
        0.0
    } else {
        value / reference
    }
}

fn decide(
    theorem: TheoremTag,
    times: &[f64],
    l2: &[f64],
    linf: &[f64],
    envelope: &[f64],
    h1_integral: &[f64],
    th: &Thresholds,
) -> Verdict {
    let mode = theorem.decay_mode();
    let t_end = *times.last().unwrap_or(&0.0);
    let window_start = t_end * (1.0 - th.terminal_fraction);
    let (decay_ratio, limit) = match mode {
        DecayMode::Subsequence => (
            ratio(*envelope.last().unwrap_or(&0.0), l2.first().copied().unwrap_or(0.0)),
            th.subsequence_factor,
        ),
        DecayMode::FullLimit => {
            let tail_max = times
                .iter()
                .zip(linf)
                .filter(|(t, _)| **t >= window_start)
                .map(|(_, v)| *v)
                .fold(0.0, f64::max);
            (
                ratio(tail_max, linf.first().copied().unwrap_or(0.0)),
                th.full_limit_factor,
            )
        }
    };
    // Zero data decays trivially.
    let trivial = l2.first().copied().unwrap_or(0.0) == 0.0 && linf.first().copied().unwrap_or(0.0) == 0.0;
    let decay_pass = trivial || decay_ratio < limit;

    let (plateau_share, plateau_pass) = if theorem.requires_odd() {
        let total = *h1_integral.last().unwrap_or(&0.0);
        let at_window = times
            .iter()
            .zip(h1_integral)
            .find(|(t, _)| **t >= window_start)
            .map(|(_, v)| *v)
            .unwrap_or(total);
        let share = ratio(total - at_window, total);
        (Some(share), total == 0.0 || share < th.plateau_fraction)
    } else {
        (None, true)
    };
    Verdict {
        mode,
        decay_ratio,
        decay_pass,
        plateau_share,
        plateau_pass,
        passed: decay_pass && plateau_pass,
    }
}
