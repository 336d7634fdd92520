//! `sdg`: solves, convergence studies, stability scans and multilevel runs.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "sdg", version, about = "Iterative DG time integrators: solve, converge, stability, mlrun")]
struct Cli {
    /// Worker threads for scans and convergence rows (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate a problem and print the endpoint of every step.
    #[command(allow_negative_numbers = true)]
    Solve(SolveArgs),
    /// Endpoint errors and observed orders over a list of step sizes.
    #[command(allow_negative_numbers = true)]
    Converge(ConvergeArgs),
    /// Amplification factor raster and A-stability probe.
    #[command(allow_negative_numbers = true)]
    Stability(StabilityArgs),
    /// Error history of one-level sweeps against multilevel cycles.
    #[command(allow_negative_numbers = true)]
    Mlrun(MlrunArgs),
}

#[derive(Args, Debug, Clone, Default)]
pub struct SchemeArgs {
    /// exdg, exsdg, imsdg, sisdg or imsdg-theta (solve/converge also take rk4, ssprk3).
    #[arg(long)]
    pub scheme: Option<String>,
    /// Polynomial degree.
    #[arg(long)]
    pub p: Option<usize>,
    /// Sweeps per step.
    #[arg(long = "K")]
    pub k: Option<usize>,
    /// Damping of the last sweep for imsdg-theta.
    #[arg(long)]
    pub theta: Option<f64>,
    /// Predictor: euler-march or constant.
    #[arg(long)]
    pub init: Option<String>,
    #[arg(long)]
    pub newton_tol: Option<f64>,
    #[arg(long)]
    pub newton_iter: Option<usize>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct ProblemArgs {
    /// dahlquist, vanderpol, bad or advection.
    #[arg(long)]
    pub problem: Option<String>,
    /// Dahlquist coefficient.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Van der Pol stiffness parameter.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Van der Pol implicit equation: first or second.
    #[arg(long)]
    pub implicit: Option<String>,
    /// Advection grid cells.
    #[arg(long)]
    pub cells: Option<usize>,
    /// Final time (defaults to the problem's own).
    #[arg(long)]
    pub tend: Option<f64>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct SolveArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub scheme: SchemeArgs,
    /// Number of uniform steps.
    #[arg(long)]
    pub steps: Option<usize>,
    /// key=value settings file; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output file (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct ConvergeArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub scheme: SchemeArgs,
    /// Strictly decreasing step sizes, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    pub dt: Option<String>,
    /// analytic or numeric (fine-grid degree-9 run).
    #[arg(long)]
    pub reference: Option<String>,
    /// Steps of the numeric reference run.
    #[arg(long)]
    pub ref_steps: Option<usize>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct StabilityArgs {
    #[command(flatten)]
    pub scheme: SchemeArgs,
    /// Real-axis window `min,max`.
    #[arg(long, allow_hyphen_values = true)]
    pub re: Option<String>,
    /// Imaginary-axis window `min,max`.
    #[arg(long, allow_hyphen_values = true)]
    pub im: Option<String>,
    #[arg(long)]
    pub nx: Option<usize>,
    #[arg(long)]
    pub ny: Option<usize>,
    /// CSV of `re,im,abs_am` (default: stdout).
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Plain P2 graymap of the region.
    #[arg(long)]
    pub pgm: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct MlrunArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub scheme: SchemeArgs,
    /// Step size of the single interval.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Level degrees, finest first (e.g. `6,3`).
    #[arg(long)]
    pub levels: Option<String>,
    /// Number of sweeps / cycles.
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(commands::EXIT_USAGE);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: cannot configure worker pool: {e}");
            return ExitCode::from(commands::EXIT_USAGE);
        }
    }
    let result = match cli.command {
        Command::Solve(a) => commands::solve(a),
        Command::Converge(a) => commands::converge(a),
        Command::Stability(a) => commands::stability(a),
        Command::Mlrun(a) => commands::mlrun(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
