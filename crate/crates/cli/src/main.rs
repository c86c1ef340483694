//! Command-line front end for the critical-mass laboratory.
//!
//! Commands: classify | constant | simulate | sweep | verify. Configuration
//! comes from a JSON file (`--config`), with `--override KEY=VALUE` edits
//! applied by dotted path. Exit codes: 0 ok, 1 verify failure, 2 config
//! error, 3 maximizer non-convergence, 4 missing constants, 5 numerical
//! overflow. Identical config and seed produce byte-identical outputs.

mod classify;
mod config;
mod constant;
mod output;
mod simulate;
mod sweep;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use output::EXIT_CONFIG;

#[derive(Parser)]
#[command(
    name = "critmass",
    about = "Numerical laboratory for a two-species chemotaxis system: \
             simulation, sharp constants, and critical-mass classification",
    after_help = "Log verbosity is controlled by the CRITMASS_LOG environment \
                  variable (quiet | info | debug)."
)]
struct Cli {
    /// JSON configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory for CSV/JSON artifacts.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Random seed for multi-start maximization.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for sweeps and multi-start runs.
    #[arg(long, global = true, default_value_t = 1)]
    parallel: usize,
    /// Config edits by dotted path, e.g. model.m1=1.5 (repeatable).
    #[arg(long = "override", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify a mass/exponent configuration via the matching criterion.
    Classify,
    /// Estimate one of the interpolation constants.
    Constant,
    /// Integrate the system forward and emit the diagnostics trajectory.
    Simulate,
    /// Run a mass-grid phase experiment comparing prediction and simulation.
    Sweep,
    /// Run the invariant battery; exit 0 iff everything passes.
    Verify,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.parallel < 1 {
        eprintln!("config error: --parallel must be >= 1");
        return ExitCode::from(EXIT_CONFIG as u8);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.parallel)
        .build();
    let pool = match pool {
        Ok(p) => p,
        Err(e) => {
            eprintln!("config error: cannot build the worker pool: {e}");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };

    let cfg = match config::load(cli.config.as_deref(), &cli.overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };

    let out_dir = cli.out.as_deref();
    let default_out = PathBuf::from(".");
    let code = pool.install(|| match cli.command {
        Command::Classify => classify::run(&cfg, out_dir),
        Command::Constant => constant::run(&cfg, out_dir, cli.seed),
        Command::Simulate => simulate::run(&cfg, out_dir.unwrap_or(&default_out)),
        Command::Sweep => sweep::run(&cfg, out_dir.unwrap_or(&default_out)),
        Command::Verify => verify::run(&cfg),
    });
    ExitCode::from(code as u8)
}
