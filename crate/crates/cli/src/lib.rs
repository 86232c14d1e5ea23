//! Command-line driver for the octahedron surface-growth SCA.

use std::ffi::OsString;
use std::io::Write;

use clap::{Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod error;
pub mod session;

pub use config::{EngineChoice, FileConfig, RunArgs, RunConfig};
pub use error::CliError;
pub use session::{run_command, run_session, RunOutcome};

#[derive(Debug, Parser)]
#[command(name = "octsca", version, about = "Bit-vectorized octahedron surface-growth simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate and record W²(t) on a logarithmic schedule.
    Run(RunArgs),
    /// Time engines over a matrix of sizes and probabilities.
    Bench(commands::BenchArgs),
    /// Convert between snapshots and height profiles.
    #[command(subcommand)]
    Snapshot(commands::SnapshotCommand),
    /// Fit growth exponents to a measurement CSV.
    Fit(commands::FitArgs),
}

pub fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Run(args) => {
            let outcome = run_command(args)?;
            writeln!(
                stdout,
                "seed={} records={} out={}",
                outcome.config.seed,
                outcome.records.len(),
                outcome.config.out.display()
            )?;
            Ok(())
        }
        Command::Bench(args) => commands::bench_command(args, stdout),
        Command::Snapshot(cmd) => commands::snapshot_command(cmd),
        Command::Fit(args) => commands::fit_command(args, stdout),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let stdout = std::io::stdout();
    match execute(&cli, &mut stdout.lock()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("octsca: {e}");
            e.exit_code()
        }
    }
}
