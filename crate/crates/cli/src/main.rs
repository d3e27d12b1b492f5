use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;
use lepage_cli::config::{parse_config, Format, Threads};
use lepage_cli::run::run;

/// Le Page series experiments driven by a TOML config.
///
/// Exit status: 0 on success, 2 when a check reports a violation, 1 on errors.
#[derive(Debug, Parser)]
#[command(name = "lepage", version)]
struct Args {
    /// Experiment config file.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads: a positive count or "auto".
    #[arg(long)]
    threads: Option<Threads>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated output formats.
    #[arg(long, value_delimiter = ',')]
    format: Option<Vec<Format>>,
}

fn execute(args: Args) -> anyhow::Result<i32> {
    let text = std::fs::read_to_string(&args.config)
        .with_context(|| format!("cannot read config {}", args.config.display()))?;
    let mut config = parse_config(&text)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(threads) = args.threads {
        config.threads = threads;
    }
    if let Some(out) = args.out {
        config.output_dir = out;
    }
    if let Some(formats) = args.format {
        config.formats = formats;
    }
    let base = args.config.parent().map(PathBuf::from).unwrap_or_default();
    let outcome = run(&config, &base)?;
    eprintln!(
        "{} run {} -> {}{}",
        config.command.as_str(),
        outcome.run_id,
        outcome.manifest.display(),
        outcome.verdict.map(|v| format!(" ({v:?})")).unwrap_or_default()
    );
    Ok(outcome.exit_code())
}

fn main() -> ExitCode {
    match execute(Args::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
