use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use plate_lab_cli::{run_subcommand, Format, Overrides, Subcommand};

/// Numerical laboratory for the damped transmission Euler-Bernoulli beam and
/// its Carleman weights.
#[derive(Debug, Parser)]
#[command(name = "plate-lab", version)]
struct Cli {
    #[arg(value_enum)]
    command: Subcommand,
    /// JSON experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `output.directory`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated output formats; CSV and JSON are always written.
    #[arg(long, value_delimiter = ',', value_enum)]
    format: Option<Vec<Format>>,
    /// Seed for random draws (overrides `seed`).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for parallel scans.
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("config error at --threads: must be positive");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("config error at --threads: {e}");
            return ExitCode::from(2);
        }
    }
    let overrides = Overrides {
        out: cli.out,
        formats: cli.format,
        seed: cli.seed,
    };
    match run_subcommand(cli.command, &cli.config, &overrides) {
        Ok(summary) => {
            println!("{}: all {} checks passed", summary.subcommand, summary.checks.len());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
