mod commands;
mod error;
mod output;
mod plots;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::error::{CliError, EXIT_CONFIG, EXIT_OK};

/// Numerical laboratory for Rayleigh-Taylor mixing with mass diffusion.
///
/// Exit status: 0 on success, 1 when a check fails or the solver breaks
/// down, 2 for configuration and input errors. RTMIX_THREADS caps the
/// worker thread pool.
#[derive(Debug, Parser)]
#[command(name = "rtmix", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the 2D solver from a configuration file.
    Simulate(commands::simulate::SimulateArgs),
    /// Print the mixing-zone prefactor table.
    RiemannTable(commands::riemann_table::RiemannTableArgs),
    /// Sample random profiles against the sharp interpolation inequality.
    InterpCheck(commands::interp_check::InterpCheckArgs),
    /// Evaluate the energy, entropy and perimeter bounds on a saved series.
    VerifyBounds(commands::verify_bounds::VerifyBoundsArgs),
    /// Feed an analytic Riemann profile through the diagnostics.
    ReplayProfile(commands::replay::ReplayArgs),
}

fn init_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("RTMIX_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("RTMIX_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    init_threads()?;
    match cli.command {
        Command::Simulate(a) => commands::simulate::run(a),
        Command::RiemannTable(a) => commands::riemann_table::run(a),
        Command::InterpCheck(a) => commands::interp_check::run(a),
        Command::VerifyBounds(a) => commands::verify_bounds::run(a),
        Command::ReplayProfile(a) => commands::replay::run(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rtmix: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
