//! `pnp` — run the classical / drag-modified ion transport solvers from a
//! config file or a named preset, emitting CSV artifacts.
//!
//! Exit codes: 0 steady, 2 max_steps hit without steadiness, 1 runtime or
//! config errors, 64 usage errors.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};

use pnp_core::config::{DiffusionConfig, RunModel, SimulationConfig};
use pnp_core::driver;

#[derive(Parser)]
#[command(
    name = "pnp",
    version,
    about = "1D Poisson-Nernst-Planck solver: classical and drag-modified models",
    after_help = "One of --config or --preset is required (except for subcommands).\n\
                  Presets: fig41-left, fig41-right."
)]
struct Cli {
    /// Path to a flat `key = value` config file
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Named preset instead of a config file
    #[arg(long, value_name = "NAME", conflicts_with = "config")]
    preset: Option<String>,

    /// Override the configured model
    #[arg(long, value_name = "MODEL")]
    model: Option<ModelArg>,

    /// Override the configured output directory
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Suppress the one-line run summary
    #[arg(long)]
    quiet: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scalar inhomogeneous diffusion solver f_t = (b (a f)')'
    Diffusion {
        /// Path to a flat `key = value` config file (keys: x_left, x_right,
        /// n_cells, a, b, f0, dt, steady_tol, max_steps, out_dir,
        /// snapshot_stride)
        #[arg(long, value_name = "PATH")]
        config: PathBuf,

        /// Override the configured output directory
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,

        /// Suppress the one-line run summary
        #[arg(long)]
        quiet: bool,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModelArg {
    Classical,
    Modified,
    Both,
}

impl From<ModelArg> for RunModel {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Classical => RunModel::Classical,
            ModelArg::Modified => RunModel::Modified,
            ModelArg::Both => RunModel::Both,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    ExitCode::SUCCESS
                }
                _ => {
                    eprint!("{e}");
                    ExitCode::from(64)
                }
            };
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Exit::Usage(msg)) => {
            eprintln!("pnp: {msg}");
            eprintln!("Run 'pnp --help' for usage.");
            ExitCode::from(64)
        }
        Err(Exit::Failure(msg)) => {
            eprintln!("pnp: {msg}");
            ExitCode::from(1)
        }
    }
}

enum Exit {
    Usage(String),
    Failure(String),
}

impl From<pnp_core::Error> for Exit {
    fn from(e: pnp_core::Error) -> Self {
        Exit::Failure(e.to_string())
    }
}

fn read_config_file(path: &PathBuf) -> Result<String, Exit> {
    fs::read_to_string(path)
        .map_err(|e| Exit::Failure(format!("cannot read config '{}': {e}", path.display())))
}

fn dispatch(cli: Cli) -> Result<u8, Exit> {
    if let Some(Command::Diffusion { config, out, quiet }) = cli.command {
        let text = read_config_file(&config)?;
        let mut dc = DiffusionConfig::parse(&text)?;
        if let Some(out) = out {
            dc.out_dir = out.to_string_lossy().into_owned();
        }
        let outcome = driver::run_diffusion(&dc)?;
        if !quiet {
            println!("{}", outcome.summary_line);
        }
        return Ok(outcome.exit_code as u8);
    }

    let mut config = match (&cli.config, &cli.preset) {
        (Some(path), None) => SimulationConfig::parse(&read_config_file(path)?)?,
        (None, Some(name)) => SimulationConfig::preset(name)?,
        (None, None) => {
            return Err(Exit::Usage(
                "one of --config or --preset is required".to_string(),
            ))
        }
        (Some(_), Some(_)) => unreachable!("clap rejects the combination"),
    };
    if let Some(model) = cli.model {
        config.model = model.into();
    }
    if let Some(out) = cli.out {
        config.out_dir = out.to_string_lossy().into_owned();
    }
    config.validate()?;

    let outcome = driver::run(&config)?;
    if !cli.quiet {
        println!("{}", outcome.summary_line);
    }
    Ok(outcome.exit_code as u8)
}
