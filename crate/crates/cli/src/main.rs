mod commands;
mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use commands::Preset;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] subharmonic::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{failed} of {total} sweep points failed")]
    Sweep { failed: usize, total: usize, code: u8 },
}

impl CliError {
    /// 2 validation, 3 integration, 4 fit or certification, 1 anything else.
    pub fn exit_code(&self) -> u8 {
        use subharmonic::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Core(E::Integration { .. }) => 3,
            CliError::Core(E::Fit(_) | E::Certification(_)) => 4,
            CliError::Core(_) => 2,
            CliError::Io(_) => 1,
            CliError::Sweep { code, .. } => *code,
        }
    }
}

/// Two-mode bosonic conversion simulator: numerics, closed forms and sweeps.
#[derive(Debug, Parser)]
#[command(name = "subharmonic", version)]
struct Cli {
    /// Worker threads for sweeps and presets (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Scenario file with dotted `section.key = value` lines.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Enlarge the truncation until N_b(t) stops changing.
    #[arg(long)]
    certify: bool,
    /// Output directory (overrides outputs.dir).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[arg(long, value_name = "PATH", required_unless_present = "preset", conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Run a built-in pump scenario (fig1a: N_a = 10, fig1b: N_a = 69) for k = 1, 2, 3.
    #[arg(long, value_enum, value_name = "NAME")]
    preset: Option<Preset>,
    #[arg(long)]
    certify: bool,
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Propagate the scenario and write the observable trace.
    Simulate(RunArgs),
    /// Evaluate the closed-form N_b(t) on the scenario's time grid.
    Analytic(RunArgs),
    /// Numeric and closed-form N_b side by side with their relative gap.
    Compare(CompareArgs),
    /// Fit growth rates over sweep.n_a (and sweep.k) and the scaling exponent.
    Sweep(RunArgs),
    /// Print the physical constants and the Dirac gain.
    Constants {
        /// Positronium density in cm^-3.
        #[arg(long, value_name = "X")]
        density: Option<f64>,
    },
}

fn load(path: &Path, out: Option<PathBuf>) -> Result<config::Scenario, CliError> {
    let mut scenario = config::load(path)?;
    if let Some(dir) = out {
        scenario.out_dir = dir;
    }
    Ok(scenario)
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::Config("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    match cli.command {
        Command::Simulate(a) => commands::cmd_simulate(&load(&a.config, a.out)?, a.certify),
        Command::Analytic(a) => commands::cmd_analytic(&load(&a.config, a.out)?),
        Command::Compare(a) => match (a.preset, a.config) {
            (Some(preset), _) => commands::cmd_preset(preset, a.certify, a.out),
            (None, Some(path)) => commands::cmd_compare(&load(&path, a.out)?, a.certify),
            (None, None) => unreachable!("clap requires --config or --preset"),
        },
        Command::Sweep(a) => commands::cmd_sweep(&load(&a.config, a.out)?, a.certify),
        Command::Constants { density } => commands::cmd_constants(density),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
