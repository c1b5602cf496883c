use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qbridge_cli::commands::{Command, Invocation, Overrides};

#[derive(Parser)]
#[command(
    name = "qbridge",
    version,
    about = "Quantum Schrödinger bridges for pre/post-selected experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Solve the bridge and its time reversal; write a result document.
    Solve(Common),
    /// Prior and most likely intermediate distributions over a τ grid, as CSV.
    Intermediate(Common),
    /// Weak values, the most likely weak value and the finite-δ table.
    Weak(Common),
    /// Monte Carlo endpoint counts and the exact rate check.
    Simulate(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Sinkhorn tolerance on the marginal residual.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of τ grid points.
    #[arg(long)]
    tau_grid: Option<usize>,
    /// Quadrature nodes for weak-readout integrals.
    #[arg(long)]
    quad_nodes: Option<usize>,
    /// Worker threads (results do not depend on this).
    #[arg(long)]
    workers: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, common) = match cli.command {
        Sub::Solve(c) => (Command::Solve, c),
        Sub::Intermediate(c) => (Command::Intermediate, c),
        Sub::Weak(c) => (Command::Weak, c),
        Sub::Simulate(c) => (Command::Simulate, c),
    };
    let invocation = Invocation {
        command,
        config: common.config,
        out: common.out,
        overrides: Overrides {
            tol: common.tol,
            max_iter: common.max_iter,
            seed: common.seed,
            tau_grid: common.tau_grid,
            quad_nodes: common.quad_nodes,
            workers: common.workers,
        },
    };
    ExitCode::from(invocation.run())
}
