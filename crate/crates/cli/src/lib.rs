//! Command-line front end of the switching-process engine.

pub mod builtins;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use clap::{Parser, Subcommand, ValueEnum};
use commands::{Check, GlobalOptions};
use config::{Experiment, ExperimentConfig};
use error::CliError;
use std::ffi::OsString;
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "spsim", version, about = "Simulate and verify switching processes")]
struct Cli {
    /// Master seed (overrides run.seed).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (overrides run.workers).
    #[arg(long, global = true, env = "SPSIM_WORKERS")]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample trajectories and write trajectories.csv and renewals.csv.
    Simulate { config: PathBuf },
    /// Run a verification check and write verify_<which>.csv.
    Verify { which: Which, config: PathBuf },
    /// Print the named rates, kernels, test functions and jump measures.
    ListBuiltins,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Which {
    Kolmogorov,
    ConditionalLaw,
    Stationary,
    ChapmanKolmogorov,
    FeynmanKac,
}

impl From<Which> for Check {
    fn from(w: Which) -> Self {
        match w {
            Which::Kolmogorov => Check::Kolmogorov,
            Which::ConditionalLaw => Check::ConditionalLaw,
            Which::Stationary => Check::Stationary,
            Which::ChapmanKolmogorov => Check::ChapmanKolmogorov,
            Which::FeynmanKac => Check::FeynmanKac,
        }
    }
}

fn load(path: &PathBuf) -> Result<Experiment, CliError> {
    Experiment::build(ExperimentConfig::from_path(path)?)
}

fn execute(cli: Cli) -> Result<i32, CliError> {
    let opts = GlobalOptions { seed: cli.seed, workers: cli.workers, out_dir: cli.out_dir };
    match cli.command {
        Command::ListBuiltins => {
            print!("{}", commands::list_builtins());
            Ok(0)
        }
        Command::Simulate { config } => {
            let exp = load(&config)?;
            let s = commands::simulate(&exp, &opts)?;
            println!(
                "paths={} mean_N_horizon={:.6} se={:.3e} censored_fraction={:.6}",
                s.n_paths, s.jump_count.mean, s.jump_count.std_error, s.censored_fraction
            );
            Ok(0)
        }
        Command::Verify { which, config } => {
            let exp = load(&config)?;
            let reports = commands::verify(&exp, which.into(), &opts)?;
            for r in &reports {
                println!("{}", r.summary());
            }
            Ok(if reports.iter().all(|r| r.pass) { 0 } else { 1 })
        }
    }
}

/// Parses `args` and runs the command; returns the process exit status
/// (0 pass, 1 a check failed, 2 configuration error, 3 runtime error).
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("spsim: {e}");
            e.exit_code()
        }
    }
}
