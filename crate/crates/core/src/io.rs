//! JSON run configuration, CSV time series and run manifests.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::experiments::{ScenarioConfig, TheoremTag};
use crate::functionals::DiagnosticsRecord;
use crate::model::{
    make_grid, CoefficientFamily, GridSpec, InitialFamily, KCoefficient, ModelSpec, PotentialFamily, PotentialSpec,
};
use crate::solver::SolverConfig;

pub const TIMESERIES_HEADER: &str =
    "t,mass,energy,I,rhs_sum,rhs_kinetic,rhs_phi3,rhs_K1,rhs_K2,rhs_V,h1_alpha,l2_local,linf_local,tail_mass";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(rename = "L")]
    pub half_length: f64,
    #[serde(rename = "N")]
    pub point_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSection {
    Zero,
    InversePower {
        m: f64,
        n: f64,
        #[serde(default)]
        eps: f64,
    },
    Yukawa {
        m: f64,
        n: f64,
        #[serde(default)]
        eps: f64,
    },
}

impl PotentialSection {
    fn to_spec(self) -> Result<PotentialSpec> {
        let (spec, eps) = match self {
            PotentialSection::Zero => (PotentialSpec::zero(), 0.0),
            PotentialSection::InversePower { m, n, eps } => (PotentialSpec::inverse_power(m, n)?, eps),
            PotentialSection::Yukawa { m, n, eps } => (PotentialSpec::yukawa(m, n)?, eps),
        };
        let spec = spec.with_smoothing(eps);
        spec.validate()?;
        Ok(spec)
    }

    fn from_spec(p: &PotentialSpec) -> Self {
        let eps = p.smoothing;
        match p.family {
            PotentialFamily::Zero => PotentialSection::Zero,
            PotentialFamily::InversePower { m, n } => PotentialSection::InversePower { m, n, eps },
            PotentialFamily::Yukawa { m, n } => PotentialSection::Yukawa { m, n, eps },
        }
    }
}

fn one() -> f64 {
    1.0
}

fn zero_potential() -> PotentialSection {
    PotentialSection::Zero
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub sigma: f64,
    pub b: f64,
    #[serde(rename = "K")]
    pub k: String,
    #[serde(rename = "K_sign", default = "one")]
    pub k_sign: f64,
    #[serde(rename = "K_eps", default)]
    pub k_eps: f64,
    #[serde(default)]
    pub mu: f64,
    #[serde(rename = "V", default = "zero_potential")]
    pub v: PotentialSection,
}

fn default_stride() -> usize {
    SolverConfig::default().observer_stride
}

fn default_tail() -> f64 {
    SolverConfig::default().tail_abort_threshold
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub dt: f64,
    #[serde(rename = "T")]
    pub t_final: f64,
    #[serde(default)]
    pub enforce_odd: bool,
    #[serde(default = "default_stride")]
    pub observer_stride: usize,
    #[serde(default = "default_tail")]
    pub tail_abort_threshold: f64,
}

fn default_interval() -> (f64, f64) {
    (-2.0, 2.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub theorem: String,
    #[serde(default)]
    pub initial: InitialFamily,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default = "default_interval")]
    pub interval: (f64, f64),
    #[serde(default)]
    pub horizons: Vec<f64>,
    #[serde(default)]
    pub radii: Vec<f64>,
}

/// On-disk run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub grid: GridSection,
    pub model: ModelSection,
    pub solver: SolverSection,
    pub scenario: ScenarioSection,
}

impl ConfigFile {
    /// Validate and convert into the run types.
    pub fn resolve(&self) -> Result<(ScenarioConfig, SolverConfig, GridSpec)> {
        let grid =
            make_grid(self.grid.half_length, self.grid.point_count).map_err(|e| Error::Validation(e.to_string()))?;
        let m = &self.model;
        let family = CoefficientFamily::from_tag(&m.k).ok_or_else(|| Error::Parse {
            key: "model.K".into(),
            message: format!("unknown coefficient family `{}`", m.k),
        })?;
        let k = if family == CoefficientFamily::Zero {
            KCoefficient::zero()
        } else {
            KCoefficient::new(family, m.k_sign, m.k_eps)?
        };
        let model = ModelSpec::new(m.sigma, m.b, m.mu, k, m.v.to_spec()?)?;
        let s = &self.solver;
        let solver = SolverConfig {
            dt: s.dt,
            t_final: s.t_final,
            enforce_odd: s.enforce_odd,
            observer_stride: s.observer_stride,
            tail_abort_threshold: s.tail_abort_threshold,
        };
        solver.validate().map_err(|e| Error::Validation(e.to_string()))?;
        let sc = &self.scenario;
        let theorem: TheoremTag = sc.theorem.parse().map_err(|_| Error::Parse {
            key: "scenario.theorem".into(),
            message: format!("unknown theorem tag `{}`", sc.theorem),
        })?;
        let scenario = ScenarioConfig {
            theorem,
            model,
            initial: sc.initial,
            epsilon: sc.epsilon,
            interval: sc.interval,
            horizons: sc.horizons.clone(),
            radii: sc.radii.clone(),
        };
        scenario.validate()?;
        Ok((scenario, solver, grid))
    }

    pub fn from_configs(scenario: &ScenarioConfig, solver: &SolverConfig, grid: &GridSpec) -> Self {
        let m = &scenario.model;
        ConfigFile {
            grid: GridSection {
                half_length: grid.half_length,
                point_count: grid.point_count,
            },
            model: ModelSection {
                sigma: m.sigma,
                b: m.b,
                k: m.k.family.tag().into(),
                k_sign: m.k.sign,
                k_eps: m.k.smoothing,
                mu: m.mu,
                v: PotentialSection::from_spec(&m.potential),
            },
            solver: SolverSection {
                dt: solver.dt,
                t_final: solver.t_final,
                enforce_odd: solver.enforce_odd,
                observer_stride: solver.observer_stride,
                tail_abort_threshold: solver.tail_abort_threshold,
            },
            scenario: ScenarioSection {
                theorem: scenario.theorem.tag().into(),
                initial: scenario.initial,
                epsilon: scenario.epsilon,
                interval: scenario.interval,
                horizons: scenario.horizons.clone(),
                radii: scenario.radii.clone(),
            },
        }
    }
}

/// Parse without validating the physics.
pub fn parse_config_str(text: &str) -> Result<ConfigFile> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| Error::Parse {
        key: e.path().to_string(),
        message: e.inner().to_string(),
    })
}

pub fn parse_config(path: &Path) -> Result<(ScenarioConfig, SolverConfig, GridSpec)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_str(&text)?.resolve()
}

/// Shortest round-trip decimal (`{:?}` on `f64`).
fn fmt_real(out: &mut String, v: f64) {
    write!(out, "{v:?}").unwrap();
}

pub fn timeseries_csv(records: &[DiagnosticsRecord]) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(TIMESERIES_HEADER);
    out.push('\n');
    for r in records {
        let t = &r.rhs_terms;
        let cols = [
            r.t,
            r.mass,
            r.energy,
            r.virial,
            t.sum(),
            t.kinetic,
            t.phi3,
            t.k_weight,
            t.k_slope,
            t.potential,
            r.h1_alpha,
            r.l2_local,
            r.linf_local,
            r.tail_mass_fraction,
        ];
        for (i, v) in cols.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            fmt_real(&mut out, *v);
        }
        out.push('\n');
    }
    out
}

pub fn write_timeseries(records: &[DiagnosticsRecord], path: &Path) -> Result<()> {
    fs::write(path, timeseries_csv(records)).map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Validation(e.to_string()))?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: ConfigFile,
    pub version: String,
    pub wall_clock_seconds: f64,
    pub files: Vec<FileEntry>,
    pub valid: bool,
    pub tail_breach_time: Option<f64>,
    pub overflow: bool,
}

impl RunManifest {
    /// Hash `files` (relative to `dir`) and assemble the manifest.
    pub fn build(
        config: ConfigFile,
        dir: &Path,
        files: &[&str],
        wall_clock_seconds: f64,
        valid: bool,
        tail_breach_time: Option<f64>,
        overflow: bool,
    ) -> Result<Self> {
        let files = files
            .iter()
            .map(|f| {
                Ok(FileEntry {
                    path: PathBuf::from(f),
                    sha256: sha256_file(&dir.join(f))?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            config,
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_clock_seconds,
            files,
            valid,
            tail_breach_time,
            overflow,
        })
    }

    /// Every listed file exists under `dir` and matches its hash.
    pub fn verify(&self, dir: &Path) -> Result<bool> {
        for f in &self.files {
            if sha256_file(&dir.join(&f.path))? != f.sha256 {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::VirialTerms;

    const MINIMAL: &str = r#"{
        "grid": {"L": 40, "N": 4096},
        "model": {"sigma": 1, "b": 0.5, "K": "K1_pure", "mu": 0},
        "solver": {"dt": 0.001, "T": 50},
        "scenario": {"theorem": "thm_odd_case1"}
    }"#;

    #[test]
    fn minimal_config_parses() {
        let (sc, solver, grid) = parse_config_str(MINIMAL).unwrap().resolve().unwrap();
        assert_eq!(grid.point_count, 4096);
        assert_eq!(solver.dt, 0.001);
        assert_eq!(sc.theorem, TheoremTag::ThmOddCase1);
        assert_eq!(sc.model.k.family, CoefficientFamily::K1Pure);
    }

    #[test]
    fn bad_b_and_case_two_range_are_rejected() {
        let bad = MINIMAL.replace("\"b\": 0.5", "\"b\": 1.5");
        let err = parse_config_str(&bad).unwrap().resolve().unwrap_err();
        assert!(err.to_string().contains("b must lie in (0,1)"), "{err}");

        let case2 = MINIMAL
            .replace("thm_odd_case1\"", "thm1_case2\", \"epsilon\": 0.1")
            .replace("K1_pure", "K2_pure");
        let err = parse_config_str(&case2).unwrap().resolve().unwrap_err();
        assert!(err.to_string().contains("sigma > 2 - b"), "{err}");
    }

    #[test]
    fn unknown_keys_are_named() {
        let typo = MINIMAL.replace("\"mu\": 0", "\"mu\": 0, \"sigmaa\": 2");
        match parse_config_str(&typo) {
            Err(Error::Parse { key, message }) => {
                assert_eq!(key, "model.sigmaa");
                assert!(message.contains("sigmaa"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn timeseries_formats() {
        assert_eq!(timeseries_csv(&[]), format!("{TIMESERIES_HEADER}\n"));
        let zero = timeseries_csv(&[DiagnosticsRecord::default()]);
        let row = zero.lines().nth(1).unwrap();
        assert_eq!(row, vec!["0.0"; 14].join(","));
        let r = DiagnosticsRecord {
            t: 0.1,
            mass: 1e-300,
            rhs_terms: VirialTerms {
                kinetic: 1.0 / 3.0,
                ..Default::default()
            },
            ..Default::default()
        };
        let csv = timeseries_csv(&[r]);
        let cols: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
        assert_eq!(cols[0], "0.1");
        assert_eq!(cols[1].parse::<f64>().unwrap(), 1e-300);
        assert_eq!(cols[5].parse::<f64>().unwrap(), 1.0 / 3.0);
        assert_eq!(cols[4], cols[5]);
    }

    #[test]
    fn config_round_trip() {
        let (sc, solver, grid) = parse_config_str(MINIMAL).unwrap().resolve().unwrap();
        let echo = ConfigFile::from_configs(&sc, &solver, &grid);
        let text = serde_json::to_string(&echo).unwrap();
        let again = parse_config_str(&text).unwrap().resolve().unwrap();
        assert_eq!(again, (sc, solver, grid));
    }
}
