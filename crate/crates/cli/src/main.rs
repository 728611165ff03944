//! `inls`: run scenarios, eigen-analyses and inequality suites from the command line.
//!
//! Exit codes: 0 when every verdict passes, 2 when a verdict fails, 1 on error.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "inls", version, about = "Inhomogeneous NLS simulation and diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario; write timeseries.csv, report.json and manifest.json.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Bound-state count of -d^2/dx^2 + mu V_0 over a list of couplings.
    Eigen(EigenArgs),
    /// Residual of the Virial identity at dt and dt/2.
    VerifyIdentity(IdentityArgs),
    /// Morawetz averages over a (T, R) grid and the bound fit.
    Morawetz(MorawetzArgs),
    /// Run several configs concurrently, each into OUT/<config stem>/.
    Sweep {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Worker threads (0 = all cores).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Gagliardo-Nirenberg and coercivity suites.
    Inequalities(InequalityArgs),
}

#[derive(Clone, Copy, ValueEnum)]
pub enum PotentialKind {
    Zero,
    InversePower,
    Yukawa,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Variant {
    Cutoff,
    Bounded,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Weight {
    Cutoff,
    Bounded,
}

#[derive(Args)]
pub struct EigenArgs {
    #[arg(long, value_enum)]
    potential: PotentialKind,
    #[arg(long, default_value_t = 0.5)]
    m: f64,
    #[arg(long, default_value_t = 1.0)]
    n: f64,
    /// Smoothing length of |x| in V.
    #[arg(long, default_value_t = 0.0)]
    eps: f64,
    #[arg(long, value_enum, default_value = "cutoff")]
    variant: Variant,
    /// Couplings, comma separated and increasing.
    #[arg(long, value_delimiter = ',', required = true)]
    mu: Vec<f64>,
    #[arg(long = "L", default_value_t = 512.0)]
    half_length: f64,
    #[arg(long = "N", default_value_t = 8192)]
    points: usize,
}

#[derive(Args)]
pub struct IdentityArgs {
    #[arg(long, value_enum, default_value = "bounded")]
    weight: Weight,
    /// Cutoff radius.
    #[arg(long, default_value_t = 10.0)]
    radius: f64,
    /// Mollification length of K, either a number or a multiple of h such as `4h`.
    #[arg(long, default_value = "4h")]
    mollify: String,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    /// Coupling of the inverse-power potential (m = 0, n = 3); 0 disables it.
    #[arg(long, default_value_t = 0.0)]
    mu: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, default_value_t = 0.5)]
    b: f64,
    #[arg(long = "L", default_value_t = 40.0)]
    half_length: f64,
    #[arg(long = "N", default_value_t = 16384)]
    points: usize,
    #[arg(long = "T", default_value_t = 2.0)]
    t_final: f64,
    /// Steps between records at the coarse dt.
    #[arg(long, default_value_t = 20)]
    stride: usize,
    #[arg(long, default_value_t = 1e-3)]
    max_residual: f64,
}

#[derive(Args)]
pub struct MorawetzArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, value_delimiter = ',')]
    horizons: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    radii: Option<Vec<f64>>,
    #[arg(long, default_value_t = 10.0)]
    max_spread: f64,
    #[arg(long, default_value_t = 2.0)]
    max_change: f64,
}

#[derive(Args)]
pub struct InequalityArgs {
    #[arg(long = "L", default_value_t = 20.0)]
    half_length: f64,
    /// Coarse point count; the suite is repeated at 2N.
    #[arg(long = "N", default_value_t = 8192)]
    points: usize,
    #[arg(long, default_value_t = 100)]
    samples: usize,
    #[arg(long, default_value_t = inls_core::suite::SUITE_SEED)]
    seed: u64,
    #[arg(long, default_value_t = 0.5)]
    b: f64,
    /// Coupling of the Yukawa potential in B_V.
    #[arg(long, default_value_t = 0.01)]
    mu: f64,
    #[arg(long, default_value_t = 0.5)]
    yukawa_m: f64,
    #[arg(long, default_value_t = 1.0)]
    yukawa_n: f64,
}

/// Outcome of a subcommand that completed without error.
pub enum Status {
    Pass,
    Fail,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Simulate { config, out } => commands::simulate(&config, &out),
        Command::Eigen(a) => commands::eigen(&a),
        Command::VerifyIdentity(a) => commands::verify_identity(&a),
        Command::Morawetz(a) => commands::morawetz(&a),
        Command::Sweep { configs, out, jobs } => commands::sweep(&configs, &out, jobs),
        Command::Inequalities(a) => commands::inequalities(&a),
    };
    match result {
        Ok(Status::Pass) => ExitCode::SUCCESS,
        Ok(Status::Fail) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
