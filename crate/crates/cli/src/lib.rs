//! Command-line front end of `plate-lab`: JSON configuration, one experiment
//! per subcommand, and CSV/JSON/SVG artifacts.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod svg;

use std::path::{Path, PathBuf};

pub use config::{load_config, parse_config, ExperimentConfig, Format};
pub use error::CliError;
pub use experiments::{run_experiment, Subcommand};
pub use output::{Outcome, Summary};

/// Overrides applied on top of the configuration file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub formats: Option<Vec<Format>>,
    pub seed: Option<u64>,
}

pub fn resolve(mut cfg: ExperimentConfig, o: &Overrides) -> ExperimentConfig {
    if let Some(dir) = &o.out {
        cfg.output.directory = dir.clone();
    }
    if let Some(f) = &o.formats {
        cfg.output.formats = f.clone();
    }
    if let Some(seed) = o.seed {
        cfg.seed = seed;
    }
    cfg
}

/// Runs one subcommand and writes its artifacts. An experiment whose checks
/// fail still writes its files and then returns [`CliError::Assertion`].
pub fn run_subcommand(cmd: Subcommand, config: &Path, overrides: &Overrides) -> Result<Summary, CliError> {
    let cfg = resolve(load_config(config)?, overrides);
    run_resolved(cmd, &cfg)
}

pub fn run_resolved(cmd: Subcommand, cfg: &ExperimentConfig) -> Result<Summary, CliError> {
    let outcome = run_experiment(cmd, cfg)?;
    output::write_outcome(&outcome, &cfg.output.directory, &cfg.output.formats)?;
    let failed = outcome.summary.failed_checks();
    if !failed.is_empty() {
        return Err(CliError::Assertion(format!("{}: {}", cmd.name(), failed.join(", "))));
    }
    Ok(outcome.summary)
}
