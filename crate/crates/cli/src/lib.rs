//! Command-line front end: configuration, subcommands and output files.

pub mod commands;
pub mod config;
pub mod output;

use std::path::Path;

use thiserror::Error;

pub use commands::Report;
pub use config::Config;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{0}")]
    Core(#[from] dryland_core::Error),
    #[error("i/o: {0}")]
    Io(String),
}

impl CliError {
    /// 2 usage, 3 regime rejection, 4 numerical failure.
    pub fn exit_code(&self) -> i32 {
        use dryland_core::Error as E;
        match self {
            CliError::Usage(_) | CliError::Io(_) => 2,
            CliError::Core(E::Regime(_)) => 3,
            CliError::Core(E::Numerical(_)) => 4,
            CliError::Core(_) => 2,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "E_USAGE",
            CliError::Io(_) => "E_IO",
            CliError::Core(e) => e.code(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Scale,
    Fronts,
    Skeleton,
    Simulate,
    Sweep,
    Melnikov,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Scale => "scale",
            Command::Fronts => "fronts",
            Command::Skeleton => "skeleton",
            Command::Simulate => "simulate",
            Command::Sweep => "sweep",
            Command::Melnikov => "melnikov",
        }
    }
}

/// Runs one command and writes its outputs and the manifest into `out`.
pub fn run(command: Command, cfg: &Config, out: &Path, workers: usize) -> Result<Report, CliError> {
    output::prepare_out(out)?;
    let mut rep = match command {
        Command::Scale => commands::cmd_scale(cfg, out)?,
        Command::Fronts => commands::cmd_fronts(cfg, out)?,
        Command::Skeleton => commands::cmd_skeleton(cfg, out)?,
        Command::Simulate => commands::cmd_simulate(cfg, out)?,
        Command::Sweep => commands::cmd_sweep(cfg, out, workers)?,
        Command::Melnikov => commands::cmd_melnikov(cfg, out)?,
    };
    let m = output::write_manifest(out, command.name(), cfg, &rep.files)?;
    rep.files.push(m);
    Ok(rep)
}
