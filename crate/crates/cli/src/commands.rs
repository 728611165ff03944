use std::collections::HashSet;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use inls_core::experiments::{run_scenario_recorded, Thresholds};
use inls_core::functionals::{
    gagliardo_nirenberg_ratio, max_relative_residual, singular_weight_ratio, DiagnosticsSpec,
};
use inls_core::io::{parse_config, write_json, write_timeseries, ConfigFile, RunManifest};
use inls_core::model::{
    make_grid, scale_to_h1, CoefficientFamily, InitialFamily, KCoefficient, ModelSpec, PotentialSpec, V0Variant,
    WeightSpec,
};
use inls_core::operators::{coercivity_sweep, simon_klaus_check, Form};
use inls_core::solver::{run_observed, SolverConfig};
use inls_core::suite::gaussian_suite;
use inls_core::{run_scenario, Error, Result};
use serde::Serialize;

use crate::{EigenArgs, IdentityArgs, InequalityArgs, MorawetzArgs, PotentialKind, Status, Variant, Weight};

const J_FLOOR: f64 = -1e-10;
const GN_STABILITY: f64 = 0.05;
const RATIO_RANGE: (f64, f64) = (3.0, 5.0);

fn status(pass: bool) -> Status {
    if pass {
        Status::Pass
    } else {
        Status::Fail
    }
}

/// Write `text` and a newline to stdout; a closed pipe is not an error.
fn emit(text: &str) -> Result<()> {
    let mut out = io::stdout().lock();
    match writeln!(out, "{text}").and_then(|_| out.flush()) {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(Error::io("<stdout>", e)),
        _ => Ok(()),
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    emit(&serde_json::to_string_pretty(value).map_err(|e| Error::Validation(e.to_string()))?)
}

/// Run one config into `out`; returns whether the verdict passed.
fn simulate_into(config: &Path, out: &Path) -> Result<bool> {
    let (scenario, solver, grid) = parse_config(config)?;
    let start = Instant::now();
    let u0 = scenario.initial_state(&grid)?;
    let (report, records) = run_scenario_recorded(&u0, &scenario, &solver, Thresholds::default())?;
    let elapsed = start.elapsed().as_secs_f64();

    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    write_timeseries(&records, &out.join("timeseries.csv"))?;
    write_json(&report, &out.join("report.json"))?;
    // An invalid run that never breached the tail monitor stopped on overflow.
    let overflow = !report.valid && report.max_tail_mass <= solver.tail_abort_threshold;
    let manifest = RunManifest::build(
        ConfigFile::from_configs(&scenario, &solver, &grid),
        out,
        &["timeseries.csv", "report.json"],
        elapsed,
        report.valid,
        if overflow { None } else { report.breach_time },
        overflow,
    )?;
    write_json(&manifest, &out.join("manifest.json"))?;
    Ok(report.passed())
}

pub fn simulate(config: &Path, out: &Path) -> Result<Status> {
    let passed = simulate_into(config, out)?;
    emit(&format!(
        "{}: {}",
        config.display(),
        if passed { "PASS" } else { "FAIL" }
    ))?;
    Ok(status(passed))
}

fn potential(kind: PotentialKind, m: f64, n: f64, eps: f64) -> Result<PotentialSpec> {
    Ok(match kind {
        PotentialKind::Zero => PotentialSpec::zero(),
        PotentialKind::InversePower => PotentialSpec::inverse_power(m, n)?.with_smoothing(eps),
        PotentialKind::Yukawa => PotentialSpec::yukawa(m, n)?.with_smoothing(eps),
    })
}

pub fn eigen(a: &EigenArgs) -> Result<Status> {
    let pot = potential(a.potential, a.m, a.n, a.eps)?;
    let variant = match a.variant {
        Variant::Cutoff => V0Variant::Cutoff,
        Variant::Bounded => V0Variant::Bounded,
    };
    let grid = make_grid(a.half_length, a.points)?;
    let reports = simon_klaus_check(&pot, variant, &a.mu, &grid)?;
    print_json(&reports)?;
    // Small coupling: one bound state iff int V_0 <= 0 and V_0 is not identically zero.
    let weakest = &reports[0];
    let expected = usize::from(!pot.is_zero() && weakest.moment_integral <= 0.0);
    Ok(status(weakest.negative_count == expected))
}

fn parse_mollify(text: &str, h: f64) -> Result<f64> {
    let bad = || Error::Validation(format!("cannot parse mollification length `{text}`"));
    let value = match text.strip_suffix('h') {
        Some("") => h,
        Some(k) => k.trim().parse::<f64>().map_err(|_| bad())? * h,
        None => text.trim().parse::<f64>().map_err(|_| bad())?,
    };
    if !(value >= 0.0) || !value.is_finite() {
        return Err(bad());
    }
    Ok(value)
}

fn identity_residual(a: &IdentityArgs, dt: f64, stride: usize) -> Result<f64> {
    let grid = make_grid(a.half_length, a.points)?;
    let eps = parse_mollify(&a.mollify, grid.spacing())?;
    let k = KCoefficient::new(CoefficientFamily::K1Pure, 1.0, eps)?;
    let model = if a.mu > 0.0 {
        ModelSpec::new(
            a.sigma,
            a.b,
            a.mu,
            k,
            PotentialSpec::inverse_power(0.0, 3.0)?.with_smoothing(eps),
        )?
    } else {
        ModelSpec::without_potential(a.sigma, a.b, k)?
    };
    let u0 = scale_to_h1(&InitialFamily::default().sample(grid), 0.5)?;
    let cfg = SolverConfig::new(dt, a.t_final)?.with_stride(stride).with_odd(true);
    let weight = match a.weight {
        Weight::Bounded => WeightSpec::Bounded,
        Weight::Cutoff => WeightSpec::Cutoff { radius: a.radius },
    };
    let diag = DiagnosticsSpec {
        weight,
        ..DiagnosticsSpec::default()
    };
    let mut records = Vec::with_capacity(cfg.record_count());
    run_observed(&u0, &model, &cfg, diag, |_, r| {
        records.push(*r);
        Ok(())
    })?;
    Ok(max_relative_residual(&records))
}

pub fn verify_identity(a: &IdentityArgs) -> Result<Status> {
    let coarse = identity_residual(a, a.dt, a.stride)?;
    let fine = identity_residual(a, a.dt / 2.0, a.stride)?;
    let ratio = coarse / fine;
    emit(&format!(
        "{:>12}  {:>14}\n{:>12.4e}  {:>14.6e}\n{:>12.4e}  {:>14.6e}\nratio {ratio:.4}",
        "dt",
        "max_rel_resid",
        a.dt,
        coarse,
        a.dt / 2.0,
        fine
    ))?;
    Ok(status(
        coarse < a.max_residual && (RATIO_RANGE.0..=RATIO_RANGE.1).contains(&ratio),
    ))
}

#[derive(Serialize)]
struct MorawetzOutput<'a> {
    valid: bool,
    failure: &'a Option<String>,
    kernel: inls_core::functionals::MorawetzKernel,
    points: &'a [inls_core::experiments::MorawetzPoint],
    fit: &'a Option<inls_core::experiments::BoundFit>,
    verified: bool,
}

pub fn morawetz(a: &MorawetzArgs) -> Result<Status> {
    let (mut scenario, solver, grid) = parse_config(&a.config)?;
    if let Some(h) = &a.horizons {
        scenario.horizons = h.clone();
    }
    if let Some(r) = &a.radii {
        scenario.radii = r.clone();
    }
    if scenario.theorem.bound_form(scenario.model.b).is_none() {
        return Err(Error::Query(format!(
            "{} has no Morawetz bound to fit",
            scenario.theorem.tag()
        )));
    }
    if scenario.horizons.is_empty() || scenario.radii.is_empty() {
        return Err(Error::Query("horizons and radii must be nonempty".into()));
    }
    let report = run_scenario(&grid, &scenario, &solver)?;
    let verified = report.valid
        && report
            .fit
            .as_ref()
            .is_some_and(|f| f.verified(a.max_spread, a.max_change));
    print_json(&MorawetzOutput {
        valid: report.valid,
        failure: &report.failure,
        kernel: report.morawetz_kernel,
        points: &report.morawetz,
        fit: &report.fit,
        verified,
    })?;
    Ok(status(verified))
}

pub fn sweep(configs: &[PathBuf], out: &Path, jobs: usize) -> Result<Status> {
    use rayon::prelude::*;
    let mut stems = HashSet::new();
    let mut targets = Vec::with_capacity(configs.len());
    for c in configs {
        let stem = c
            .file_stem()
            .ok_or_else(|| Error::Validation(format!("config path `{}` has no file name", c.display())))?;
        if !stems.insert(stem.to_owned()) {
            return Err(Error::Validation(format!(
                "duplicate config name `{}`",
                stem.to_string_lossy()
            )));
        }
        targets.push((c.clone(), out.join(stem)));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Validation(e.to_string()))?;
    let results: Vec<Result<bool>> = pool.install(|| targets.par_iter().map(|(c, o)| simulate_into(c, o)).collect());

    let mut any_error = false;
    let mut all_pass = true;
    for ((config, _), r) in targets.iter().zip(results) {
        match r {
            Ok(p) => {
                all_pass &= p;
                emit(&format!("{}: {}", config.display(), if p { "PASS" } else { "FAIL" }))?;
            }
            Err(e) => {
                any_error = true;
                emit(&format!("{}: ERROR {e}", config.display()))?;
            }
        }
    }
    if any_error {
        return Err(Error::Validation("one or more sweep jobs failed".into()));
    }
    Ok(status(all_pass))
}

#[derive(Serialize)]
struct InequalityOutput {
    samples: usize,
    seed: u64,
    gn_sup: f64,
    gn_sup_refined: f64,
    gn_relative_change: f64,
    singular_weight_sup: f64,
    coercivity_b: inls_core::operators::CoercivityReport,
    coercivity_bv: inls_core::operators::CoercivityReport,
    passed: bool,
}

fn suite_sup(
    half_length: f64,
    points: usize,
    a: &InequalityArgs,
    f: fn(&inls_core::StateField, f64) -> Result<f64>,
) -> Result<f64> {
    let grid = make_grid(half_length, points)?;
    gaussian_suite(&grid, a.seed, a.samples)
        .iter()
        .map(|u| f(u, a.b))
        .try_fold(0.0, |m: f64, r| r.map(|r| m.max(r)))
}

pub fn inequalities(a: &InequalityArgs) -> Result<Status> {
    let gn = suite_sup(a.half_length, a.points, a, gagliardo_nirenberg_ratio)?;
    let gn_fine = suite_sup(a.half_length, 2 * a.points, a, gagliardo_nirenberg_ratio)?;
    let singular = suite_sup(a.half_length, a.points, a, singular_weight_ratio)?;
    let grid = make_grid(a.half_length, a.points)?;
    let b = coercivity_sweep(&grid, Form::B, &PotentialSpec::zero(), 0.0, a.samples, a.seed)?;
    let yukawa = PotentialSpec::yukawa(a.yukawa_m, a.yukawa_n)?;
    let bv = coercivity_sweep(&grid, Form::BV, &yukawa, a.mu, a.samples, a.seed)?;
    let change = ((gn_fine - gn) / gn).abs();
    let passed = gn.is_finite()
        && change < GN_STABILITY
        && b.coercive()
        && bv.coercive()
        && bv.min_j.is_some_and(|j| j >= J_FLOOR);
    print_json(&InequalityOutput {
        samples: a.samples,
        seed: a.seed,
        gn_sup: gn,
        gn_sup_refined: gn_fine,
        gn_relative_change: change,
        singular_weight_sup: singular,
        coercivity_b: b,
        coercivity_bv: bv,
        passed,
    })?;
    Ok(status(passed))
}
