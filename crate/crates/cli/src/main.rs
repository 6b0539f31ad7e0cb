use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, ValueEnum};
use fpme_core::{execute, par, parse_config_with, Error, Mode};

#[derive(Debug, Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum ModeArg {
    Linear,
    Picard,
    SweepEpsilon,
    Properties,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Linear => Mode::Linear,
            ModeArg::Picard => Mode::Picard,
            ModeArg::SweepEpsilon => Mode::SweepEpsilon,
            ModeArg::Properties => Mode::Properties,
        }
    }
}

/// Pseudo-spectral fractional porous medium laboratory.
///
/// The worker pool size is taken from FPME_THREADS when set.
#[derive(Debug, Parser)]
#[command(name = "fpme", version)]
struct Cli {
    mode: ModeArg,
    /// TOML configuration document.
    #[arg(long)]
    config: PathBuf,
    /// Override a configuration key, e.g. `--set grid.n=128`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    let text = std::fs::read_to_string(&cli.config)
        .with_context(|| format!("reading {}", cli.config.display()))?;
    let spec = parse_config_with(&text, &cli.overrides, Some(cli.mode.into()))
        .with_context(|| format!("loading {}", cli.config.display()))?;
    let summary = par::install(par::threads_from_env(), || execute(&spec))
        .with_context(|| format!("{} run into {}", spec.mode.as_str(), spec.output.dir.display()))?;
    println!("{} run complete: {} files in {}", spec.mode.as_str(), summary.files.len(), summary.output_dir.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e.downcast_ref::<Error>().map(Error::exit_code).unwrap_or(1);
            ExitCode::from(code as u8)
        }
    }
}
