use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod output;

use output::CliError;

#[derive(Parser, Debug)]
#[command(name = "pseudospin", version, about = "Orbital pseudospin dynamics of an electron beam in a quadrupole-octupole field")]
struct Cli {
    /// Worker threads for data-parallel stages (1 runs sequentially)
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the Fock-space projection oracle and the shell-algebra checks
    Verify(VerifyArgs),
    /// Integrate the quasiclassical flow and/or the quantum shell dynamics
    Simulate(SimulateArgs),
    /// Sweep mu, b0 or the seed angle and record flips and Floquet exponents
    Scan(ScanArgs),
    /// Write transverse intensity grids at selected z
    Render(RenderArgs),
    /// Print the dimensionless parameters of a scenario
    Derive(DeriveArgs),
}

#[derive(Args, Debug, serde::Serialize)]
pub struct VerifyArgs {
    /// Largest shell 2j in the Fock oracle
    #[arg(long, default_value_t = 24)]
    pub two_j_max: usize,
    /// Truncation margin: n_max = 2j + margin (needs >= 4)
    #[arg(long, default_value_t = 8)]
    pub margin: usize,
    /// Coefficient of x^2 y^2 in the octupole quartic
    #[arg(long, default_value_t = -6.0, allow_hyphen_values = true)]
    pub quartic_cross_coeff: f64,
    /// Largest 2j for the su(2) commutator and Casimir checks
    #[arg(long, default_value_t = 200)]
    pub algebra_two_j_max: u32,
    /// Directory for verify.json and manifest.json
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Classical,
    Quantum,
    Both,
}

#[derive(Args, Debug, serde::Serialize)]
pub struct SimulateArgs {
    /// Scenario file or preset name (paper-static, paper-breathing)
    #[arg(long)]
    pub scenario: String,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Mode::Classical)]
    pub mode: Mode,
    /// Accuracy target for invariants and norm
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = 100.0)]
    pub zmax: f64,
    /// Output spacing of the classical trajectory
    #[arg(long, default_value_t = 0.01)]
    pub sample_step: f64,
    /// Output spacing of the quantum trajectory
    #[arg(long, default_value_t = 0.05)]
    pub quantum_sample_step: f64,
    /// Override the control parameter mu derived from the scenario
    #[arg(long)]
    pub mu: Option<f64>,
    /// Shell size 2j for the quantum run (mu is kept fixed)
    #[arg(long)]
    pub two_j: Option<u32>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Mu,
    B0,
    Delta,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Floquet {
    Hill,
    Exact,
}

#[derive(Args, Debug, serde::Serialize)]
pub struct ScanArgs {
    #[arg(long, value_enum)]
    pub axis: Axis,
    #[arg(long, allow_hyphen_values = true)]
    pub from: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub to: f64,
    /// Number of grid points, end points included
    #[arg(long)]
    pub steps: usize,
    /// Take the fixed parameters from a scenario
    #[arg(long)]
    pub scenario: Option<String>,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub b0: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long, default_value_t = 20.0)]
    pub zmax: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Linear system for the Floquet exponent (default: hill for b0 scans, exact otherwise)
    #[arg(long, value_enum)]
    pub floquet: Option<Floquet>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    /// The tilted coherent state of the scenario
    Seeded,
    /// The aligned vortex state |j, j>
    Pole,
}

#[derive(Args, Debug, serde::Serialize)]
pub struct RenderArgs {
    #[arg(long)]
    pub scenario: String,
    /// Comma-separated z values
    #[arg(long, value_delimiter = ',', required = true)]
    pub z: Vec<f64>,
    /// Shell size 2j used for the images (mu is kept fixed)
    #[arg(long)]
    pub two_j: Option<u32>,
    #[arg(long, default_value_t = 128)]
    pub resolution: usize,
    #[arg(long, value_enum, default_value_t = Source::Seeded)]
    pub source: Source,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, serde::Serialize)]
pub struct DeriveArgs {
    #[arg(long)]
    pub scenario: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn configure_jobs(jobs: Option<usize>) -> Result<pseudospin::Execution, CliError> {
    use pseudospin::Execution;
    match jobs {
        Some(0) => Err(CliError::Usage("--jobs must be at least 1".into())),
        Some(1) => Ok(Execution::Sequential),
        _ if !Execution::parallel_available() => Ok(Execution::Sequential),
        #[cfg(feature = "parallel")]
        Some(n) => {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| CliError::Usage(format!("cannot start {n} workers: {e}")))?;
            Ok(Execution::Parallel)
        }
        _ => Ok(Execution::Parallel),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let exec = configure_jobs(cli.jobs)?;
    match cli.command {
        Command::Verify(a) => commands::verify(&a, exec),
        Command::Simulate(a) => commands::simulate(&a),
        Command::Scan(a) => commands::scan(&a, exec),
        Command::Render(a) => commands::render(&a, exec),
        Command::Derive(a) => commands::derive(&a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
