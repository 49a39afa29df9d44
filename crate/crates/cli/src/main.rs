//! `csvgd`: deterministic experiment runner for constrained Stein
//! variational gradient descent.
//!
//! Exit codes: 0 success (including nonconverged solves), 1 invalid
//! configuration or usage, 2 solver failure.

mod config;
mod run;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use config::{parse_config, ExperimentConfig, FlagOverrides};

#[derive(Parser)]
#[command(
    name = "csvgd",
    version,
    about = "Constrained Stein variational gradient descent experiments"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// 2-d toy problem: linear cost inside a disk
    Toy2d(RunArgs),
    /// Obstacle-avoiding trajectory distribution
    Trajectory(RunArgs),
    /// 6-DOF arm inverse kinematics with placement constraints
    Ik(RunArgs),
    /// Point-cloud pose estimation on a tabletop
    Icp(RunArgs),
    /// Methods x formulations x seeds sweep from a config file
    Matrix(MatrixArgs),
    /// Finite-difference check of every problem's gradients
    Gradcheck(GradcheckArgs),
}

#[derive(Args)]
struct RunArgs {
    /// RNG seed (overrides the config file)
    #[arg(long)]
    seed: Option<u64>,
    /// Particle count (overrides the config file)
    #[arg(long)]
    particles: Option<usize>,
    /// q | p | unconstrained
    #[arg(long)]
    method: Option<String>,
    /// auglag | quadpenalty | logbarrier | relaxedlogbarrier
    #[arg(long)]
    formulation: Option<String>,
    /// Output directory
    #[arg(long)]
    out: Option<String>,
    /// TOML config file
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct MatrixArgs {
    /// TOML config file with a [matrix] block and a problem name
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config file)
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct GradcheckArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn load_config(path: &PathBuf) -> Result<ExperimentConfig, config::ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config::ConfigError(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

fn run_problem(name: &str, args: &RunArgs) -> u8 {
    let file = match &args.config {
        Some(path) => match load_config(path) {
            Ok(cfg) => Some(cfg),
            Err(e) => {
                eprintln!("{e}");
                return 1;
            }
        },
        None => None,
    };
    let flags = FlagOverrides {
        seed: args.seed,
        particles: args.particles,
        method: args.method.clone(),
        formulation: args.formulation.clone(),
        out: args.out.clone(),
    };
    let exp = match config::resolve(name, file.as_ref(), &flags) {
        Ok(e) => e,
        Err(e) => {
            eprintln!("{e}");
            return 1;
        }
    };
    match run::execute(&exp) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("solver error: {e}");
            2
        }
    }
}

fn run_matrix(args: &MatrixArgs) -> u8 {
    let file = match load_config(&args.config) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("{e}");
            return 1;
        }
    };
    let problem = match &file.problem {
        Some(p) => p.clone(),
        None => {
            eprintln!("invalid config: matrix runs need a top-level problem name");
            return 1;
        }
    };
    if file.matrix.is_none() {
        eprintln!("invalid config: matrix runs need a [matrix] block");
        return 1;
    }
    let flags = FlagOverrides {
        out: args.out.clone(),
        ..FlagOverrides::default()
    };
    let exp = match config::resolve(&problem, Some(&file), &flags) {
        Ok(e) => e,
        Err(e) => {
            eprintln!("{e}");
            return 1;
        }
    };
    match run::execute(&exp) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("solver error: {e}");
            2
        }
    }
}

fn run_gradcheck(args: &GradcheckArgs) -> u8 {
    let results = run::gradcheck(args.seed);
    let mut ok = true;
    for (name, err) in &results {
        println!("{name}: max relative gradient error {err:.3e}");
        if !(*err < 1e-4) {
            ok = false;
        }
    }
    if ok {
        println!("all gradients pass (< 1e-4)");
        0
    } else {
        eprintln!("gradient check failed");
        2
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    ExitCode::SUCCESS
                }
                _ => {
                    eprint!("{e}");
                    ExitCode::from(1)
                }
            };
        }
    };
    let code = match &cli.cmd {
        Cmd::Toy2d(args) => run_problem("toy2d", args),
        Cmd::Trajectory(args) => run_problem("trajectory", args),
        Cmd::Ik(args) => run_problem("ik", args),
        Cmd::Icp(args) => run_problem("icp", args),
        Cmd::Matrix(args) => run_matrix(args),
        Cmd::Gradcheck(args) => run_gradcheck(args),
    };
    ExitCode::from(code)
}
