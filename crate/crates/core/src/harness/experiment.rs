use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::engine::{run, starting_times, BOConfig, RunTrace, Schedule};
use crate::error::{Error, Result};
use crate::gp::{Dataset, Point};
use crate::optim::Bounds;
use crate::seed;
use crate::testbed::{
    true_maximizer, true_value, GroundTruth, OracleInstance, OracleSpec, GRID_RESOLUTION,
};

/// Outcome of one strategy in one replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub rep: usize,
    pub strategy: String,
    pub seed: u64,
    pub trace: Option<RunTrace>,
    pub error: Option<String>,
    /// Noise-free objective at each decision.
    pub true_values: Vec<f64>,
    pub final_native: Option<Vec<f64>>,
    /// Noise-free `f(x_T, T)`.
    pub final_value: Option<f64>,
    /// `||x_T - x*_T||` in native units.
    pub final_distance: Option<f64>,
}

impl Cell {
    /// Ran to the final decision without error. Oracles without a
    /// noise-free form still succeed with empty metrics.
    pub fn succeeded(&self) -> bool {
        self.error.is_none()
            && self
                .trace
                .as_ref()
                .is_some_and(|t| t.final_decision().is_some())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub ground_truth: Option<GroundTruth>,
    pub schedule: Vec<f64>,
    /// Ordered by replication, then by the configured strategy order.
    pub cells: Vec<Cell>,
}

impl ExperimentResult {
    pub fn dim(&self) -> usize {
        self.config.oracle_spec().dim()
    }

    pub fn cells_for<'a>(&'a self, strategy: &'a str) -> impl Iterator<Item = &'a Cell> + 'a {
        self.cells.iter().filter(move |c| c.strategy == strategy)
    }
}

/// Seed of strategy `name` in replication `rep`.
pub fn strategy_seed(base: u64, rep: usize, name: &str) -> u64 {
    seed::derive(base, &[rep as u64, seed::label(name)])
}

/// Seed of the starting samples of replication `rep`, shared by all strategies.
pub fn starting_seed(base: u64, rep: usize) -> u64 {
    seed::derive(base, &[rep as u64])
}

/// Starting observations: uniform points at evenly spaced times.
pub fn starting_samples(
    spec: &OracleSpec,
    config: &ExperimentConfig,
    rep: usize,
) -> Result<Dataset> {
    let mut rng = seed::rng(starting_seed(config.seed, rep));
    let dim = spec.dim();
    let domain = spec.domain();
    let mut oracle =
        OracleInstance::new(spec, seed::derive(starting_seed(config.seed, rep), &[1]))?;
    let unit = Bounds::unit(dim);
    let mut data = Dataset::new(dim);
    for t in starting_times(config.t_first, config.t_start, config.n_start)? {
        let u = unit.sample_uniform(&mut rng);
        let y = oracle.evaluate_native(&domain.to_native(&u), t)?;
        data.push(Point::clamped(&u), t, y)?;
    }
    Ok(data)
}

/// Runs every configured strategy in every replication.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let strategies = config
        .strategies
        .iter()
        .map(|s| Ok((s.clone(), config.strategy_config(s)?)))
        .collect::<Result<Vec<_>>>()?;
    run_strategies(config, &strategies)
}

/// Like [`run_experiment`] with explicit engine configurations per strategy name.
pub fn run_strategies(
    config: &ExperimentConfig,
    strategies: &[(String, BOConfig)],
) -> Result<ExperimentResult> {
    let spec = config.oracle_spec();
    spec.validate()?;
    let schedule = Schedule::uniform(config.t_start, config.horizon, config.decisions())?;
    let ground_truth = match true_maximizer(&spec, config.horizon, GRID_RESOLUTION) {
        Ok(g) => Some(g),
        Err(e) => {
            log::info!("no ground truth for {}: {e}", spec.kind);
            None
        }
    };
    let starts: Vec<Result<Dataset>> = (0..config.replications)
        .into_par_iter()
        .map(|r| starting_samples(&spec, config, r))
        .collect();
    let jobs: Vec<(usize, usize)> = (0..config.replications)
        .flat_map(|r| (0..strategies.len()).map(move |s| (r, s)))
        .collect();
    let cells: Vec<Cell> = jobs
        .par_iter()
        .map(|&(r, s)| {
            let (name, bo) = &strategies[s];
            let seed = strategy_seed(config.seed, r, name);
            let outcome = starts[r]
                .as_ref()
                .map_err(|e| Error::Oracle(format!("starting samples failed: {e}")))
                .and_then(|data| run_cell(&spec, data.clone(), &schedule, bo, seed));
            let mut cell = Cell {
                rep: r,
                strategy: name.clone(),
                seed,
                trace: None,
                error: None,
                true_values: Vec::new(),
                final_native: None,
                final_value: None,
                final_distance: None,
            };
            match outcome {
                Ok(trace) => {
                    fill_metrics(&mut cell, &spec, &trace, ground_truth.as_ref());
                    cell.error = trace.failure.clone();
                    cell.trace = Some(trace);
                }
                Err(e) => {
                    log::warn!("replication {r}, strategy {name} failed: {e}");
                    cell.error = Some(e.to_string());
                }
            }
            cell
        })
        .collect();
    Ok(ExperimentResult {
        config: config.clone(),
        ground_truth,
        schedule: schedule.times().to_vec(),
        cells,
    })
}

fn run_cell(
    spec: &OracleSpec,
    data: Dataset,
    schedule: &Schedule,
    bo: &BOConfig,
    seed: u64,
) -> Result<RunTrace> {
    let mut oracle = OracleInstance::new(spec, seed::derive(seed, &[1]))?;
    let config = BOConfig { seed, ..bo.clone() };
    run(&mut oracle, data, schedule.clone(), config)
}

fn fill_metrics(cell: &mut Cell, spec: &OracleSpec, trace: &RunTrace, truth: Option<&GroundTruth>) {
    let domain = spec.domain();
    // Oracles without a noise-free form leave the metrics empty.
    let Ok(values) = trace
        .steps
        .iter()
        .map(|s| true_value(spec, &domain.to_native(&s.x), s.t))
        .collect::<Result<Vec<f64>>>()
    else {
        return;
    };
    cell.true_values = values;
    if let Some((x, _)) = trace.final_decision() {
        let native = domain.to_native(x);
        cell.final_value = cell.true_values.last().copied().filter(|v| v.is_finite());
        cell.final_distance = truth.map(|g| domain.native_distance(x, &g.point));
        cell.final_native = Some(native);
    }
}
