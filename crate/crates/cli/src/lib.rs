//! Runner behind the `grasshopper` binary: grid files, single-angle solves,
//! angle sweeps with resumable results tables, and verification exports.

pub mod cli;
pub mod commands;
pub mod error;
pub mod results;
pub mod theta;

pub use cli::{Cli, Command};
pub use commands::{cmd_build_grid, cmd_solve, cmd_sweep, cmd_verify};
pub use error::{CliError, CliResult};

/// Caps rayon parallelism from `GRASSHOPPER_THREADS`, if set.
pub fn configure_threads() -> CliResult<()> {
    let Ok(value) = std::env::var("GRASSHOPPER_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("GRASSHOPPER_THREADS must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))
}

/// Runs a parsed command line.
pub fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::BuildGrid(args) => cmd_build_grid(args).map(drop),
        Command::Solve(args) => cmd_solve(args).map(drop),
        Command::Sweep(args) => cmd_sweep(args).map(drop),
        Command::Verify(args) => cmd_verify(args).map(drop),
    }
}
