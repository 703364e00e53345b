use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::experiment::ExperimentResult;
use crate::error::{Error, Result};

pub const ITERATIONS_FILE: &str = "iterations.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const RESULTS_FILE: &str = "results.json";
pub const PLOTDATA_DIR: &str = "plotdata";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Statistics {
    pub count: usize,
    pub mean: f64,
    /// Sample standard deviation.
    pub std: f64,
    pub stderr: f64,
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
    pub iqr: f64,
}

impl Statistics {
    /// `None` for an empty sample.
    pub fn of(values: &[f64]) -> Option<Self> {
        let n = values.len();
        if n == 0 {
            return None;
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let (q25, median, q75) = (
            quantile(&sorted, 0.25),
            quantile(&sorted, 0.5),
            quantile(&sorted, 0.75),
        );
        Some(Self {
            count: n,
            mean,
            std,
            stderr: std / (n as f64).sqrt(),
            median,
            q25,
            q75,
            iqr: q75 - q25,
        })
    }
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategySummary {
    pub strategy: String,
    pub replications: usize,
    pub failures: usize,
    /// Noise-free `f(x_T, T)`.
    pub final_value: Option<Statistics>,
    /// `||x_T - x*_T||` in native units.
    pub final_distance: Option<Statistics>,
    /// Observed `y_T`.
    pub final_observation: Option<Statistics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub oracle: String,
    pub horizon: f64,
    pub optimum_value: Option<f64>,
    pub optimum_native: Option<Vec<f64>>,
    pub strategies: Vec<StrategySummary>,
}

pub fn summarize(result: &ExperimentResult) -> Summary {
    let strategies = result
        .config
        .strategies
        .iter()
        .map(|name| {
            let cells: Vec<_> = result.cells_for(name).collect();
            let ok: Vec<_> = cells.iter().filter(|c| c.succeeded()).collect();
            let values: Vec<f64> = ok.iter().filter_map(|c| c.final_value).collect();
            let distances: Vec<f64> = ok.iter().filter_map(|c| c.final_distance).collect();
            let observations: Vec<f64> = ok
                .iter()
                .filter_map(|c| {
                    c.trace
                        .as_ref()
                        .and_then(|t| t.final_decision())
                        .map(|(_, y)| y)
                })
                .collect();
            StrategySummary {
                strategy: name.clone(),
                replications: cells.len(),
                failures: cells.len() - ok.len(),
                final_value: Statistics::of(&values),
                final_distance: Statistics::of(&distances),
                final_observation: Statistics::of(&observations),
            }
        })
        .collect();
    Summary {
        oracle: result.config.oracle.name().to_string(),
        horizon: result.config.horizon,
        optimum_value: result.ground_truth.as_ref().map(|g| g.value),
        optimum_native: result.ground_truth.as_ref().map(|g| g.native.clone()),
        strategies,
    }
}

/// Fails early if `dir` cannot be created or written.
pub fn check_writable(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)
        .map_err(|e| Error::Config(format!("cannot create {}: {e}", dir.display())))?;
    let probe = dir.join(".write-probe");
    fs::write(&probe, b"")
        .map_err(|e| Error::Config(format!("cannot write to {}: {e}", dir.display())))?;
    fs::remove_file(probe)?;
    Ok(())
}

/// Writes the iteration CSV, the JSON summary, the full results and the plot data.
pub fn emit_results(result: &ExperimentResult, dir: &Path) -> Result<()> {
    check_writable(dir)?;
    write_iterations(result, &dir.join(ITERATIONS_FILE))?;
    fs::write(
        dir.join(SUMMARY_FILE),
        serde_json::to_string_pretty(&summarize(result))? + "\n",
    )?;
    fs::write(
        dir.join(RESULTS_FILE),
        serde_json::to_string(result)? + "\n",
    )?;
    write_plotdata(result, dir)
}

pub fn load_results(dir: &Path) -> Result<ExperimentResult> {
    Ok(serde_json::from_str(&fs::read_to_string(
        dir.join(RESULTS_FILE),
    )?)?)
}

fn write_iterations(result: &ExperimentResult, path: &Path) -> Result<()> {
    let d = result.dim();
    let domain = result.config.oracle_spec().domain();
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = ["rep", "strategy", "iter", "t"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((1..=d).map(|i| format!("x_{i}")));
    header.extend(
        ["yhat", "acq_value", "wall_ms"]
            .iter()
            .map(|s| s.to_string()),
    );
    w.write_record(&header)?;
    for cell in &result.cells {
        let Some(trace) = &cell.trace else { continue };
        for s in &trace.steps {
            let mut row = vec![
                cell.rep.to_string(),
                cell.strategy.clone(),
                s.index.to_string(),
                s.t.to_string(),
            ];
            row.extend(domain.to_native(&s.x).iter().map(|v| v.to_string()));
            row.extend([
                s.observation.to_string(),
                s.acquisition_value.to_string(),
                s.wall_ms.to_string(),
            ]);
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Per-strategy mean and standard deviation of the noise-free objective at
/// each scheduled decision, over replications.
pub fn write_plotdata(result: &ExperimentResult, dir: &Path) -> Result<()> {
    let out = dir.join(PLOTDATA_DIR);
    fs::create_dir_all(&out)?;
    for name in &result.config.strategies {
        let mut w = csv::Writer::from_path(out.join(format!("{name}.csv")))?;
        w.write_record(["step", "t", "mean", "std", "count"])?;
        for (k, t) in result.schedule.iter().enumerate() {
            let values: Vec<f64> = result
                .cells_for(name)
                .filter_map(|c| c.true_values.get(k).copied())
                .filter(|v| v.is_finite())
                .collect();
            let (mean, std) = Statistics::of(&values)
                .map(|s| (s.mean, s.std))
                .unwrap_or((f64::NAN, f64::NAN));
            w.write_record([
                (k + 1).to_string(),
                t.to_string(),
                mean.to_string(),
                std.to_string(),
                values.len().to_string(),
            ])?;
        }
        w.flush()?;
    }
    Ok(())
}
