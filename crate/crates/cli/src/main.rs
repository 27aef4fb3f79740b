use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use kricci_cli::{cmd_classify, cmd_solve, cmd_sweep, cmd_verify, RunOptions};

#[derive(Parser)]
#[command(name = "kricci", version, about = "Conformal k-Ricci blow-up solver and verification harness")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
    /// JSON config; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Seed for randomized sampling.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for sweeps (default: one per core).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
}

#[derive(Subcommand, Clone, Copy)]
enum Verb {
    /// Check closed-form residuals and barrier certificates.
    Verify,
    /// Run one Dirichlet, blow-up or maximal solve.
    Solve,
    /// Tabulate the codimension regularity classification.
    Classify,
    /// Run a solve for each listed equation in parallel.
    Sweep,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let opts = RunOptions {
        config: cli.config,
        out: cli.out,
        seed: cli.seed,
        jobs: cli.jobs,
    };
    let run = match cli.verb {
        Verb::Verify => cmd_verify,
        Verb::Solve => cmd_solve,
        Verb::Classify => cmd_classify,
        Verb::Sweep => cmd_sweep,
    };
    match run(&opts) {
        Ok(outcome) if outcome.passed => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
