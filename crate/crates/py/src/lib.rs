//! Python module `inls`: grids, models, states, the split-step integrator,
//! eigen-analysis and the inequality suites.

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use inls_core::functionals as fx;
use inls_core::model::{self as md, CoefficientFamily};
use inls_core::{experiments, io, operators, solver, suite};

fn err(e: inls_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(name = "Grid", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyGrid(md::GridSpec);

#[pymethods]
impl PyGrid {
    #[new]
    #[pyo3(signature = (half_length, point_count))]
    fn new(half_length: f64, point_count: usize) -> PyResult<Self> {
        md::make_grid(half_length, point_count).map(Self).map_err(err)
    }

    #[getter]
    fn half_length(&self) -> f64 {
        self.0.half_length
    }

    #[getter]
    fn point_count(&self) -> usize {
        self.0.point_count
    }

    #[getter]
    fn spacing(&self) -> f64 {
        self.0.spacing()
    }

    fn nodes(&self) -> Vec<f64> {
        self.0.nodes()
    }

    fn refined(&self) -> Self {
        Self(self.0.refined())
    }

    fn __repr__(&self) -> String {
        format!(
            "Grid(half_length={}, point_count={})",
            self.0.half_length, self.0.point_count
        )
    }
}

#[pyclass(name = "Potential", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyPotential(md::PotentialSpec);

fn variant(name: &str) -> PyResult<md::V0Variant> {
    match name {
        "cutoff" => Ok(md::V0Variant::Cutoff),
        "bounded" => Ok(md::V0Variant::Bounded),
        _ => Err(PyValueError::new_err(format!("unknown V_0 variant `{name}`"))),
    }
}

#[pymethods]
impl PyPotential {
    #[staticmethod]
    fn zero() -> Self {
        Self(md::PotentialSpec::zero())
    }

    #[staticmethod]
    #[pyo3(signature = (m, n, eps = 0.0))]
    fn inverse_power(m: f64, n: f64, eps: f64) -> PyResult<Self> {
        md::PotentialSpec::inverse_power(m, n)
            .map(|p| Self(p.with_smoothing(eps)))
            .map_err(err)
    }

    #[staticmethod]
    #[pyo3(signature = (m, n, eps = 0.0))]
    fn yukawa(m: f64, n: f64, eps: f64) -> PyResult<Self> {
        md::PotentialSpec::yukawa(m, n)
            .map(|p| Self(p.with_smoothing(eps)))
            .map_err(err)
    }

    fn eval(&self, x: f64) -> PyResult<f64> {
        self.0.eval(x).map_err(err)
    }

    #[pyo3(signature = (x, variant = "cutoff"))]
    fn v0(&self, x: f64, variant: &str) -> PyResult<f64> {
        self.0.eval_v0(self::variant(variant)?, x).map_err(err)
    }
}

#[pyclass(name = "Model", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyModel(md::ModelSpec);

#[pymethods]
impl PyModel {
    #[new]
    #[pyo3(signature = (sigma, b, k = "K1_pure", k_sign = 1.0, k_eps = 0.0, mu = 0.0, potential = None))]
    fn new(
        sigma: f64,
        b: f64,
        k: &str,
        k_sign: f64,
        k_eps: f64,
        mu: f64,
        potential: Option<PyRef<'_, PyPotential>>,
    ) -> PyResult<Self> {
        let family = CoefficientFamily::from_tag(k)
            .ok_or_else(|| PyValueError::new_err(format!("unknown coefficient family `{k}`")))?;
        let coeff = if family == CoefficientFamily::Zero {
            md::KCoefficient::zero()
        } else {
            md::KCoefficient::new(family, k_sign, k_eps).map_err(err)?
        };
        let pot = potential.map_or_else(md::PotentialSpec::zero, |p| p.0);
        md::ModelSpec::new(sigma, b, mu, coeff, pot).map(Self).map_err(err)
    }

    #[getter]
    fn sigma(&self) -> f64 {
        self.0.sigma
    }

    #[getter]
    fn b(&self) -> f64 {
        self.0.b
    }

    #[getter]
    fn mu(&self) -> f64 {
        self.0.mu
    }

    fn eval_k(&self, x: f64) -> PyResult<f64> {
        self.0.eval_k(x).map_err(err)
    }
}

#[pyclass(name = "State", skip_from_py_object)]
#[derive(Clone)]
struct PyState(md::StateField);

#[pymethods]
impl PyState {
    #[new]
    #[pyo3(signature = (grid, values, t = 0.0))]
    fn new(grid: PyRef<'_, PyGrid>, values: Vec<Complex64>, t: f64) -> PyResult<Self> {
        md::StateField::new(grid.0, values, t).map(Self).map_err(err)
    }

    /// Sample an initial family: `odd_gaussian_pair`, `odd_xgaussian` or `gaussian`.
    #[staticmethod]
    #[pyo3(signature = (grid, family = "odd_gaussian_pair", center = 1.0, width = 1.0))]
    fn initial(grid: PyRef<'_, PyGrid>, family: &str, center: f64, width: f64) -> PyResult<Self> {
        let f = match family {
            "odd_gaussian_pair" => md::InitialFamily::OddGaussianPair { center, width },
            "odd_xgaussian" => md::InitialFamily::OddXgaussian { width },
            "gaussian" => md::InitialFamily::Gaussian { width },
            _ => return Err(PyValueError::new_err(format!("unknown initial family `{family}`"))),
        };
        Ok(Self(f.sample(grid.0)))
    }

    /// Random Gaussian-sum sample from the seeded suite.
    #[staticmethod]
    fn suite_sample(grid: PyRef<'_, PyGrid>, seed: u64) -> Self {
        Self(suite::gaussian_sample(&grid.0, seed))
    }

    #[getter]
    fn values(&self) -> Vec<Complex64> {
        self.0.values.clone()
    }

    #[getter]
    fn t(&self) -> f64 {
        self.0.t
    }

    #[getter]
    fn grid(&self) -> PyGrid {
        PyGrid(self.0.grid)
    }

    fn mass(&self) -> f64 {
        fx::mass(&self.0)
    }

    fn energy(&self, model: PyRef<'_, PyModel>) -> PyResult<f64> {
        fx::energy(&self.0, &model.0).map(|e| e.total()).map_err(err)
    }

    fn h1_norm(&self) -> f64 {
        md::h1_norm(&self.0)
    }

    fn scale_to_h1(&self, target: f64) -> PyResult<Self> {
        md::scale_to_h1(&self.0, target).map(Self).map_err(err)
    }

    fn max_modulus(&self) -> f64 {
        self.0.max_modulus()
    }

    fn even_part(&self) -> f64 {
        fx::even_part_norm(&self.0)
    }

    /// `(||u||_{L^2(a,b)}, ||u||_{L^inf(a,b)})`.
    fn local_norms(&self, a: f64, b: f64) -> PyResult<(f64, f64)> {
        fx::local_norms(&self.0, a, b).map_err(err)
    }

    /// Virial functional with the bounded weight, or the cutoff weight of radius `radius`.
    #[pyo3(signature = (radius = None))]
    fn virial(&self, radius: Option<f64>) -> PyResult<f64> {
        let w = radius.map_or(md::WeightSpec::Bounded, |radius| md::WeightSpec::Cutoff { radius });
        fx::virial(&self.0, &w).map_err(err)
    }

    fn project_odd(&self) -> Self {
        Self(solver::project_odd(&self.0))
    }

    fn gagliardo_nirenberg_ratio(&self, b: f64) -> PyResult<f64> {
        fx::gagliardo_nirenberg_ratio(&self.0, b).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.0.values.len()
    }
}

#[pyclass(name = "Trajectory", frozen)]
struct PyTrajectory(solver::Trajectory);

impl PyTrajectory {
    fn column(&self, f: impl Fn(&fx::DiagnosticsRecord) -> f64) -> Vec<f64> {
        self.0.records.iter().map(f).collect()
    }
}

#[pymethods]
impl PyTrajectory {
    #[getter]
    fn times(&self) -> Vec<f64> {
        self.column(|r| r.t)
    }

    #[getter]
    fn mass(&self) -> Vec<f64> {
        self.column(|r| r.mass)
    }

    #[getter]
    fn energy(&self) -> Vec<f64> {
        self.column(|r| r.energy)
    }

    #[getter]
    fn virial(&self) -> Vec<f64> {
        self.column(|r| r.virial)
    }

    #[getter]
    fn l2_local(&self) -> Vec<f64> {
        self.column(|r| r.l2_local)
    }

    #[getter]
    fn linf_local(&self) -> Vec<f64> {
        self.column(|r| r.linf_local)
    }

    #[getter]
    fn tail_mass(&self) -> Vec<f64> {
        self.column(|r| r.tail_mass_fraction)
    }

    fn snapshot(&self, index: usize) -> PyResult<PyState> {
        self.0
            .snapshots
            .get(index)
            .map(|s| PyState(s.clone()))
            .ok_or_else(|| PyValueError::new_err(format!("no snapshot {index}")))
    }

    fn final_state(&self) -> PyState {
        PyState(
            self.0
                .snapshots
                .last()
                .expect("trajectories hold at least one snapshot")
                .clone(),
        )
    }

    /// Identity residual `max |dI/dt + rhs| / max |rhs|` over the records.
    fn virial_residual(&self) -> f64 {
        fx::max_relative_residual(&self.0.records)
    }

    /// The records as CSV text.
    fn to_csv(&self) -> String {
        io::timeseries_csv(&self.0.records)
    }

    fn __len__(&self) -> usize {
        self.0.records.len()
    }
}

#[pyfunction]
#[allow(clippy::too_many_arguments)]
#[pyo3(signature = (state, model, dt, t_final, stride = 100, enforce_odd = false, tail_threshold = 1e-8))]
fn evolve(
    py: Python<'_>,
    state: PyRef<'_, PyState>,
    model: PyRef<'_, PyModel>,
    dt: f64,
    t_final: f64,
    stride: usize,
    enforce_odd: bool,
    tail_threshold: f64,
) -> PyResult<PyTrajectory> {
    let cfg = solver::SolverConfig::new(dt, t_final)
        .map_err(err)?
        .with_stride(stride)
        .with_odd(enforce_odd)
        .with_tail_threshold(tail_threshold);
    let (u0, m) = (state.0.clone(), model.0);
    py.detach(|| solver::evolve(&u0, &m, &cfg))
        .map(PyTrajectory)
        .map_err(err)
}

#[pyclass(name = "EigenReport", frozen)]
struct PyEigenReport(operators::EigenReport);

#[pymethods]
impl PyEigenReport {
    #[getter]
    fn mu(&self) -> f64 {
        self.0.mu
    }

    #[getter]
    fn lowest_eigenvalue(&self) -> f64 {
        self.0.lowest_eigenvalue
    }

    #[getter]
    fn negative_count(&self) -> usize {
        self.0.negative_count
    }

    #[getter]
    fn negative_eigenvalues(&self) -> Vec<f64> {
        self.0.negative_eigenvalues.clone()
    }

    #[getter]
    fn ground_state_parity(&self) -> String {
        format!("{:?}", self.0.ground_state_parity).to_lowercase()
    }

    #[getter]
    fn moment_integral(&self) -> f64 {
        self.0.moment_integral
    }

    #[getter]
    fn mu0_estimate(&self) -> Option<f64> {
        self.0.mu0_estimate
    }
}

/// Bound states of `-d^2/dx^2 + mu V_0` with `V_0` sampled on the grid nodes.
#[pyfunction]
fn lowest_eigenvalue(samples: Vec<f64>, mu: f64, grid: PyRef<'_, PyGrid>) -> PyResult<PyEigenReport> {
    operators::lowest_eigenvalue_samples(&samples, mu, &grid.0)
        .map(PyEigenReport)
        .map_err(err)
}

#[pyfunction]
#[pyo3(signature = (potential, mu_list, grid, variant = "cutoff"))]
fn simon_klaus(
    potential: PyRef<'_, PyPotential>,
    mu_list: Vec<f64>,
    grid: PyRef<'_, PyGrid>,
    variant: &str,
) -> PyResult<Vec<PyEigenReport>> {
    let v = self::variant(variant)?;
    operators::simon_klaus_check(&potential.0, v, &mu_list, &grid.0)
        .map(|rs| rs.into_iter().map(PyEigenReport).collect())
        .map_err(err)
}

#[pyclass(name = "CoercivityReport", frozen)]
struct PyCoercivity(operators::CoercivityReport);

#[pymethods]
impl PyCoercivity {
    #[getter]
    fn evaluated(&self) -> usize {
        self.0.evaluated
    }

    #[getter]
    fn min_ratio(&self) -> Option<f64> {
        self.0.min_ratio
    }

    #[getter]
    fn min_j(&self) -> Option<f64> {
        self.0.min_j
    }

    #[getter]
    fn failures(&self) -> Vec<u64> {
        self.0.failures.clone()
    }

    fn coercive(&self) -> bool {
        self.0.coercive()
    }
}

/// Form `"B"` (no potential) or `"B_V"` over odd projections of the seeded suite.
#[pyfunction]
#[pyo3(signature = (grid, form = "B", potential = None, mu = 0.0, samples = 100, seed = suite::SUITE_SEED))]
fn coercivity(
    py: Python<'_>,
    grid: PyRef<'_, PyGrid>,
    form: &str,
    potential: Option<PyRef<'_, PyPotential>>,
    mu: f64,
    samples: usize,
    seed: u64,
) -> PyResult<PyCoercivity> {
    let form = match form {
        "B" => operators::Form::B,
        "B_V" => operators::Form::BV,
        _ => return Err(PyValueError::new_err(format!("unknown form `{form}`"))),
    };
    let pot = potential.map_or_else(md::PotentialSpec::zero, |p| p.0);
    let g = grid.0;
    py.detach(|| operators::coercivity_sweep(&g, form, &pot, mu, samples, seed))
        .map(PyCoercivity)
        .map_err(err)
}

/// Run the scenario described by a JSON config file; returns the report as JSON text.
#[pyfunction]
fn run_config(py: Python<'_>, path: std::path::PathBuf) -> PyResult<String> {
    let (scenario, solver, grid) = io::parse_config(&path).map_err(err)?;
    let report = py
        .detach(|| experiments::run_scenario(&grid, &scenario, &solver))
        .map_err(err)?;
    serde_json::to_string(&report).map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pymodule]
pub fn inls(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGrid>()?;
    m.add_class::<PyPotential>()?;
    m.add_class::<PyModel>()?;
    m.add_class::<PyState>()?;
    m.add_class::<PyTrajectory>()?;
    m.add_class::<PyEigenReport>()?;
    m.add_class::<PyCoercivity>()?;
    m.add_function(wrap_pyfunction!(evolve, m)?)?;
    m.add_function(wrap_pyfunction!(lowest_eigenvalue, m)?)?;
    m.add_function(wrap_pyfunction!(simon_klaus, m)?)?;
    m.add_function(wrap_pyfunction!(coercivity, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    m.add("SUITE_SEED", suite::SUITE_SEED)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
