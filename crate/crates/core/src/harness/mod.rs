//! Experiment configuration, replication grid and result files.

mod config;
mod experiment;
mod output;

pub use config::{EngineOptions, ExperimentConfig, SCHEMA_VERSION, STRATEGIES};
pub use experiment::{
    run_experiment, run_strategies, starting_samples, starting_seed, strategy_seed, Cell,
    ExperimentResult,
};
pub use output::{
    check_writable, emit_results, load_results, summarize, write_plotdata, Statistics,
    StrategySummary, Summary, ITERATIONS_FILE, PLOTDATA_DIR, RESULTS_FILE, SUMMARY_FILE,
};

use std::path::Path;

use crate::error::Result;

/// Checks the output directory, runs the experiment and writes its files.
pub fn run_and_emit(config: &ExperimentConfig, dir: &Path) -> Result<ExperimentResult> {
    config.validate()?;
    check_writable(dir)?;
    let result = run_experiment(config)?;
    emit_results(&result, dir)?;
    Ok(result)
}
