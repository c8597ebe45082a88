mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "elastoscat", version, about = "Elastic scattering: forward solves, far fields, DtN checks and shape inversion")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML experiment configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Seed for parameter draws and measurement noise.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Uniform refinements of the configured mesh; for `convergence`, the
    /// number of levels.
    #[arg(long, global = true)]
    pub mesh_level: Option<usize>,
    /// DtN truncation `N_t`, overriding the configuration.
    #[arg(long, global = true)]
    pub nt: Option<usize>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Total field on the mesh nodes for every frequency and direction.
    Forward,
    /// Error tables for the closed-form transmission benchmarks.
    Convergence,
    /// Far-field patterns of the scattered fields.
    Farfield,
    /// DtN property suite over random parameter draws.
    DtnCheck {
        #[arg(long, value_enum, default_value = "2")]
        dim: Dim,
    },
    /// Shape reconstruction from synthetic data.
    Invert,
    /// Hankel ratio table with Wronskian residuals.
    #[command(hide = true)]
    SpecfunTable {
        #[arg(long, default_value_t = 50)]
        n_max: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Dim {
    #[value(name = "2")]
    Two,
    #[value(name = "3")]
    Three,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::FAILURE;
        }
    }
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
