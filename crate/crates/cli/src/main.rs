mod config;
mod error;
mod pipeline;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::RunConfig;
use error::CliError;
use pipeline::Run;

/// Coupled map lattice laboratory: simulation, random walks in the induced
/// environment and numerical renormalization.
#[derive(Debug, Parser)]
#[command(name = "cmlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration; defaults apply to anything left out.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `run.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides `run.out_dir`.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// `section.key=value` override, repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Full coupled evolution with a conservation log and snapshots.
    Simulate,
    /// Quenched vs annealed diffusion of the linearised dynamics.
    Rwre,
    /// RG flow of the lazy-walk kernel.
    RgKernel,
    /// RG flow of environment noise and the bad-region census.
    RgNoise,
    /// Space-time correlations of the chaotic layer.
    Mixing,
    /// Kernel flow, noise flow and quenched diffusion in one report.
    Report,
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    let mut config = RunConfig::load(cli.config.as_deref(), &cli.overrides)?;
    if let Some(seed) = cli.seed {
        config.run.seed = seed;
    }
    if let Some(dir) = &cli.out_dir {
        config.run.out_dir = dir.clone();
    }
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(CliError::Config("--workers must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let out_dir = config.run.out_dir.clone();
    let needs_rg = !matches!(cli.command, Command::Simulate | Command::Mixing);
    let run = Run::new(&config, &out_dir, needs_rg)?;
    match cli.command {
        Command::Simulate => pipeline::simulate(&run),
        Command::Rwre => pipeline::rwre(&run),
        Command::RgKernel => pipeline::rg_kernel(&run),
        Command::RgNoise => pipeline::rg_noise(&run),
        Command::Mixing => pipeline::mixing(&run),
        Command::Report => pipeline::report(&run),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cmlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
