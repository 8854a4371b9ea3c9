mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::CliError;
use crate::config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "holowave", version, about = "Water waves with constant vorticity in holomorphic coordinates")]
struct Cli {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for sweeps; defaults to all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the configured initial data, writing snapshots and a diagnostics CSV.
    Simulate,
    /// Fit linear-mode frequencies and compare with the dispersion relation.
    Dispersion,
    /// Check the normal-form symbol systems and the cubic residual slope.
    NormalformVerify,
    /// Small-data lifespan scan.
    LifespanScan,
    /// Energy drift scan of raw and modified energies.
    DriftScan,
    /// Recompute the diagnostics record of a snapshot.
    Diagnose {
        /// Snapshot file.
        snapshot: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: &Cli) -> Result<ExitCode, CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Config(e.to_string()))?;
    }
    let (mut cfg, base) = match &cli.config {
        Some(path) => {
            let base = path.parent().map(|p| p.to_path_buf()).unwrap_or_default();
            (RunConfig::load(path).map_err(CliError::Config)?, base)
        }
        None => (RunConfig::default_config(), PathBuf::from(".")),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    std::fs::create_dir_all(&cli.out).map_err(|e| CliError::Io(format!("{}: {e}", cli.out.display())))?;
    match &cli.command {
        Command::Simulate => commands::simulate(&cfg, &base, &cli.out),
        Command::Dispersion => commands::dispersion(&cfg, &cli.out),
        Command::NormalformVerify => commands::normalform_verify(&cfg, &cli.out),
        Command::LifespanScan => commands::lifespan_scan(&cfg, &cli.out),
        Command::DriftScan => commands::drift_scan(&cfg, &cli.out),
        Command::Diagnose { snapshot } => commands::diagnose(&cfg, snapshot, &cli.out),
    }
}
