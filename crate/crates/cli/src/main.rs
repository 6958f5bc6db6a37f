use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;

use fockspace_cli::{init_workers, run, ExperimentConfig, SUBCOMMANDS};

/// Run one fockspace experiment.
#[derive(Debug, Parser)]
#[command(name = "fockspace", version, about)]
struct Args {
    /// One of the experiment subcommands (see --help).
    #[arg(value_parser = clap::builder::PossibleValuesParser::new(SUBCOMMANDS))]
    subcommand: String,
    /// Config file with `section.key = value` lines.
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// `key=value` overrides applied after the config file.
    overrides: Vec<String>,
}

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn real_main() -> Result<()> {
    let args = Args::parse();
    init_workers()?;
    let text = std::fs::read_to_string(&args.config)
        .with_context(|| format!("reading {}", args.config.display()))?;
    let cfg = ExperimentConfig::parse(&text)?.with_overrides(&args.overrides)?;
    let m = run(&args.subcommand, &cfg, args.seed, &args.out)?;
    println!("{}", m.dir.display());
    Ok(())
}
