use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dryland_cli::{run, CliError, Command, Config};

#[derive(Parser)]
#[command(name = "dryland", version, about = "Fronts, patterns and simulations of a reduced dryland vegetation model")]
struct Args {
    #[command(subcommand)]
    command: Cmd,
    /// Flat key = value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Override a configuration entry (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    /// Worker threads for sweeps.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Scale unscaled model parameters.
    Scale,
    /// Primary, higher-order, to-periodic and stationary fronts.
    Fronts,
    /// Singular skeleton of a spot, gap or periodic pattern.
    Skeleton,
    /// Direct PDE simulation.
    Simulate,
    /// Parameter sweep.
    Sweep,
    /// Melnikov and normal-form diagnostics.
    Melnikov,
}

fn resolve(args: &Args) -> Result<Config, CliError> {
    let mut cfg = match &args.config {
        Some(p) => Config::from_file(p)?,
        None => Config::default(),
    };
    for kv in &args.set {
        cfg.set(kv)?;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let command = match args.command {
        Cmd::Scale => Command::Scale,
        Cmd::Fronts => Command::Fronts,
        Cmd::Skeleton => Command::Skeleton,
        Cmd::Simulate => Command::Simulate,
        Cmd::Sweep => Command::Sweep,
        Cmd::Melnikov => Command::Melnikov,
    };
    let result = resolve(&args).and_then(|cfg| run(command, &cfg, &args.out, args.workers));
    match result {
        Ok(rep) => {
            for (k, v) in &rep.summary {
                println!("{k}: {v}");
            }
            for f in &rep.files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error [{}]: {e}", e.code());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
