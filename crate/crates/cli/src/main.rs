use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use spray_cli::commands::{
    cmd_bogovskii_test, cmd_decay_study, cmd_kinetic_compare, cmd_run, cmd_validate,
    CommandOptions,
};
use spray_cli::{CliError, CliResult, RunConfig};

#[derive(Parser)]
#[command(name = "simulate", version, about = "Two-phase spray flow solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one configuration and write the records CSV.
    Run(Common),
    /// Run and check conservation, balance laws and inequalities.
    Validate(Common),
    /// Decay-rate fits over a list of perturbation amplitudes.
    DecayStudy {
        #[command(flatten)]
        common: Common,
        /// Comma-separated amplitudes (overrides `decay_study.amplitudes`).
        #[arg(long, value_delimiter = ',')]
        amplitudes: Option<Vec<f64>>,
    },
    /// Compare against the particle solver (1D only).
    KineticCompare(Common),
    /// Poisson and Bogovskii checks on random mean-zero fields.
    BogovskiiTest(Common),
}

#[derive(Args)]
struct Common {
    /// JSON configuration file.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Configuration file, as a positional argument.
    #[arg(value_name = "CONFIG", conflicts_with = "config")]
    config_pos: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Overrides the initial-data seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Also write `plot_data.csv` with t, log L, log E_sigma.
    #[arg(long)]
    emit_plot_data: bool,
}

impl Common {
    fn load(&self, amplitudes: Option<Vec<f64>>) -> CliResult<(RunConfig, CommandOptions)> {
        let path = self
            .config
            .as_ref()
            .or(self.config_pos.as_ref())
            .ok_or_else(|| CliError::Config("--config PATH is required".into()))?;
        let cfg = RunConfig::load(path)?;
        let opts = CommandOptions {
            out: self.out.clone(),
            seed: self.seed,
            emit_plot_data: self.emit_plot_data,
            amplitudes,
        };
        Ok((cfg, opts))
    }
}

fn configure_threads() -> CliResult<()> {
    let Ok(v) = std::env::var("SIM_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("SIM_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(e.to_string()))
}

fn dispatch(cli: Cli) -> CliResult<()> {
    configure_threads()?;
    let mut out = std::io::stdout().lock();
    match cli.command {
        Command::Run(c) => {
            let (cfg, opts) = c.load(None)?;
            cmd_run(&cfg, &opts, &mut out).map(drop)
        }
        Command::Validate(c) => {
            let (cfg, opts) = c.load(None)?;
            cmd_validate(&cfg, &opts, &mut out).map(drop)
        }
        Command::DecayStudy { common, amplitudes } => {
            let (cfg, opts) = common.load(amplitudes)?;
            cmd_decay_study(&cfg, &opts, &mut out).map(drop)
        }
        Command::KineticCompare(c) => {
            let (cfg, opts) = c.load(None)?;
            cmd_kinetic_compare(&cfg, &opts, &mut out).map(drop)
        }
        Command::BogovskiiTest(c) => {
            let (cfg, opts) = c.load(None)?;
            cmd_bogovskii_test(&cfg, &opts, &mut out).map(drop)
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("simulate: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
