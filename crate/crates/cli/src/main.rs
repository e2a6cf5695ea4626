use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use heat_inverse_cli::{commands, CliError, ExperimentConfig, LoadedConfig, Overrides};

#[derive(Parser, Debug)]
#[command(name = "heat-inverse", version, about = "Recover source, boundary and initial data of the heat equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// TOML experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Noise seed; also the base seed of the study trials.
    #[arg(long)]
    seed: Option<u64>,
    /// Named problem preset; replaces per-function sources from the config.
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate the observation series.
    Simulate(Common),
    /// Reconstruct h, v and g from an observation file.
    Invert {
        observations: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run the noise-amplification study.
    Study(Common),
}

fn load(common: &Common) -> Result<LoadedConfig, CliError> {
    let mut loaded = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => LoadedConfig {
            config: ExperimentConfig::default(),
            base_dir: PathBuf::from("."),
        },
    };
    loaded.config.apply(&Overrides {
        preset: common.preset.clone(),
        seed: common.seed,
        output_dir: common.out.clone(),
    });
    Ok(loaded)
}

fn run(cli: Cli) -> Result<Vec<PathBuf>, CliError> {
    match cli.command {
        Command::Simulate(c) => Ok(commands::simulate(&load(&c)?)?.files),
        Command::Invert { observations, common } => Ok(commands::invert_file(&observations, &load(&common)?)?.files),
        Command::Study(c) => Ok(commands::study(&load(&c)?)?.files),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
