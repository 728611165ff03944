//! Simulation and diagnostics for the one-dimensional inhomogeneous NLS
//!
//! `i u_t + u_xx = K(x)|u|^{2 sigma} u + mu V(x) u`
//!
//! on a periodic box: split-step time stepping, Virial and Morawetz
//! functionals, Schrödinger-operator eigenvalue counts and coercivity tests of
//! the associated quadratic forms.

pub mod error;
pub mod experiments;
pub mod functionals;
pub mod io;
pub mod model;
pub mod operators;
pub mod solver;
mod spectral;
pub mod suite;

#[cfg(test)]
#[path = "../tests/common/oracle.rs"]
mod test_support;

pub use error::{Error, Result};
pub use experiments::{run_scenario, DecayReport, ScenarioConfig, TheoremTag};
pub use functionals::{DiagnosticsRecord, DiagnosticsSpec, EnergyTerms, MorawetzKernel, MorawetzQuery, VirialTerms};
pub use io::{parse_config, write_timeseries, RunManifest};
pub use model::{
    make_grid, CoefficientFamily, GridSpec, InitialFamily, KClass, KCoefficient, ModelSpec, PotentialFamily,
    PotentialSpec, StateField, V0Variant, WeightSpec,
};
pub use operators::{lowest_eigenvalue, quadratic_form, simon_klaus_check, CoercivityReport, EigenReport, Form};
pub use solver::{evolve, SolverConfig, Trajectory};
