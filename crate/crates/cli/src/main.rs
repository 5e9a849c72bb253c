use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use levy_bounds::LevyError;

mod commands;

#[derive(Parser)]
#[command(name = "levy-bounds", version, about = "Skeleton bounds and drift criteria for Lévy processes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tail table x,N,M,T,D,A,U,criterion over params.x_grid.
    Curve(Common),
    /// Drift-to-infinity verdict, with Monte Carlo evidence when [sim] is set.
    Classify(Common),
    /// Simulate paths; `--out` is a directory for the CSV files and summary.json.
    Simulate(Common),
    /// Run the verification suite named by params.suite.
    Verify(Common),
    /// P(X at the exit time of [-r, r] is positive) for each r in params.r_list.
    ExitProb(Common),
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    config: PathBuf,
    /// Output file (directory for `simulate`); standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides sim.seed.
    #[arg(long)]
    seed: Option<u64>,
}

/// Failure of a command with its exit status.
#[derive(Debug)]
pub enum Failure {
    Verification(String),
    Config(anyhow::Error),
    Numeric(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        match e.downcast_ref::<LevyError>() {
            Some(le) if le.is_config_error() => Failure::Config(e),
            _ => Failure::Numeric(e),
        }
    }
}

impl From<LevyError> for Failure {
    fn from(e: LevyError) -> Self {
        Failure::from(anyhow::Error::new(e))
    }
}

fn load(common: &Common) -> Result<levy_bounds::RunConfig, Failure> {
    let text = fs::read_to_string(&common.config)
        .with_context(|| format!("cannot read {}", common.config.display()))
        .map_err(Failure::Config)?;
    let mut config = levy_bounds::RunConfig::from_toml_str(&text)
        .with_context(|| format!("in {}", common.config.display()))
        .map_err(Failure::Config)?;
    if let Some(seed) = common.seed {
        config.sim.get_or_insert_with(Default::default).seed = seed;
    }
    Ok(config)
}

pub fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

type Handler = fn(&levy_bounds::RunConfig, Option<&Path>) -> Result<(), Failure>;

fn run(cli: Cli) -> Result<(), Failure> {
    let (common, f): (&Common, Handler) = match &cli.command {
        Command::Curve(c) => (c, commands::curve),
        Command::Classify(c) => (c, commands::classify),
        Command::Simulate(c) => (c, commands::simulate),
        Command::Verify(c) => (c, commands::verify),
        Command::ExitProb(c) => (c, commands::exit_prob),
    };
    let config = load(common)?;
    f(&config, common.out.as_deref())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification(msg)) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Numeric(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}
