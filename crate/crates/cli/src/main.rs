//! `costfolio`: tail fits, turnover-wealth laws, Q curves, cost-aware
//! portfolio sizing and synthetic-population checks from the command line.

use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod error;
mod output;

use commands::fit_dist::FitDistArgs;
use commands::optimize::OptimizeArgs;
use commands::q::QArgs;
use commands::simulate::PopulationArgs;
use commands::turnover_law::TurnoverLawArgs;
use commands::Done;
use error::{CliError, CliResult};
use output::Run;

#[derive(Debug, Parser)]
#[command(name = "costfolio", version, about, propagate_version = true)]
struct Cli {
    /// Worker threads; defaults to one per core. Ignored in builds without
    /// the `parallel` feature. Results do not depend on it.
    #[arg(long, global = true, env = "COSTFOLIO_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a heavy-tailed family to one CSV column, with BCa intervals.
    FitDist(FitDistArgs),
    /// Loess, regime thresholds and double-linear fit of <log T> on <log P_v>.
    TurnoverLaw(TurnoverLawArgs),
    /// PDF, CDF and survival curves of Q = T / P_v.
    Q(QArgs),
    /// Optimal invested fraction and number of assets under a power-law fee.
    Optimize(OptimizeArgs),
    /// Generate a synthetic population and its transaction logs.
    Simulate(PopulationArgs),
    /// Simulate, then re-derive the exponents from the logs.
    Validate(PopulationArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::FitDist(_) => "fit-dist",
            Command::TurnoverLaw(_) => "turnover-law",
            Command::Q(_) => "q",
            Command::Optimize(_) => "optimize",
            Command::Simulate(_) => "simulate",
            Command::Validate(_) => "validate",
        }
    }

    fn run(&self) -> CliResult<Done> {
        match self {
            Command::FitDist(a) => commands::fit_dist::run(a),
            Command::TurnoverLaw(a) => commands::turnover_law::run(a),
            Command::Q(a) => commands::q::run(a),
            Command::Optimize(a) => commands::optimize::run(a),
            Command::Simulate(a) => commands::simulate::run_simulate(a),
            Command::Validate(a) => commands::simulate::run_validate(a),
        }
    }
}

fn execute(cli: &Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::input("config", "threads must be at least 1"));
        }
        #[cfg(feature = "parallel")]
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::input("config", e.to_string()))?;
    }
    let done = cli.command.run()?;
    let run = Run { command: cli.command.name(), seed: done.seed, config: done.config, inputs: &done.inputs };
    for path in output::commit(&done.out, &done.outputs, &run)? {
        println!("{}", path.display());
    }
    match done.failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.code)
        }
    }
}
