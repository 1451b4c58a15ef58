use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use shiftsolve::config::Command;
use shiftsolve::run::{execute, Overrides};

#[derive(Parser)]
#[command(
    name = "shiftsolve",
    version,
    about = "Spectral solvers for -u'' - a u(x-h) = f and its nonlocal nonlinear extension"
)]
struct Cli {
    /// JSON run configuration
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output_dir`)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for randomized checks (overrides `seed`)
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Symbol samples, classification and gap constant
    Spectrum,
    /// Solve -u'' - a u(x-h) = f
    SolveLinear,
    /// Fixed point of the nonlocal equation
    SolveNonlinear,
    /// Stability constant N and contraction factor
    Constants,
    /// Convergence along a sequence of right-hand sides or kernels
    Sequence,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Spectrum => Command::Spectrum,
            Cmd::SolveLinear => Command::SolveLinear,
            Cmd::SolveNonlinear => Command::SolveNonlinear,
            Cmd::Constants => Command::Constants,
            Cmd::Sequence => Command::Sequence,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let Some(config) = cli.config else {
        eprintln!(r#"{{"error":"Config","message":"--config <path> is required","hypothesis_violation":false}}"#);
        return ExitCode::from(1);
    };
    let overrides = Overrides {
        out: cli.out,
        seed: cli.seed,
    };
    ExitCode::from(execute(cli.command.into(), &config, &overrides) as u8)
}
