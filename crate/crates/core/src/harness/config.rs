use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::acquisition::AcquisitionKind;
use crate::engine::{BOConfig, TwoStepMethod};
use crate::error::{Error, Result};
use crate::testbed::{OracleKind, OracleSpec, DEFAULT_NOISE_VARIANCE};
use crate::value::{TargetPolicy, ValueFunctionSpec};

pub const SCHEMA_VERSION: u32 = 1;

/// Strategy names understood by [`strategy_config`].
pub const STRATEGIES: &[&str] = &[
    "Random", "EI", "PI", "UCB", "EImumax", "PImumax", "mumax", "KG", "r2LEY", "r2LEI", "r2LPI",
    "r2LUCB",
];

/// Solver settings shared by every strategy of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineOptions {
    /// Starting points for acquisition and value-function maximization.
    pub n_starts: usize,
    /// Uniform candidates scored to choose those starts.
    pub raw_samples: usize,
    pub max_iterations: usize,
    /// Fantasy draws per lookahead decision.
    pub mc_samples: usize,
    pub method: TwoStepMethod,
    /// Starts per inner maximization when `method` is Monte Carlo.
    pub inner_starts: usize,
    pub refit_each_step: bool,
    pub fit_starts: usize,
    pub refit_starts: usize,
    /// Confidence parameter for UCB and r2LUCB.
    pub beta: f64,
    pub fantasy_observation_noise: bool,
}

impl Default for EngineOptions {
    fn default() -> Self {
        let bo = BOConfig::default();
        Self {
            n_starts: bo.optimizer.n_starts,
            raw_samples: bo.optimizer.raw_samples,
            max_iterations: bo.optimizer.max_iterations,
            mc_samples: bo.acquisition.mc_samples,
            method: bo.method,
            inner_starts: bo.inner_optimizer.n_starts,
            refit_each_step: bo.refit_each_step,
            fit_starts: bo.fit.n_starts,
            refit_starts: bo.refit_starts,
            beta: bo.acquisition.beta,
            fantasy_observation_noise: bo.acquisition.fantasy_observation_noise,
        }
    }
}

impl EngineOptions {
    /// Engine configuration for a named strategy.
    pub fn strategy_config(&self, name: &str, record_timing: bool) -> Result<BOConfig> {
        let beta = self.beta;
        let mut config = match name {
            "Random" => BOConfig::myopic(AcquisitionKind::Random),
            "EI" => BOConfig::myopic(AcquisitionKind::ExpectedImprovement),
            "PI" => BOConfig::myopic(AcquisitionKind::ProbabilityOfImprovement),
            "UCB" => BOConfig::myopic(AcquisitionKind::UpperConfidenceBound),
            "EImumax" => BOConfig::myopic(AcquisitionKind::ExpectedImprovementMuMax),
            "PImumax" => BOConfig::myopic(AcquisitionKind::ProbabilityOfImprovementMuMax),
            "mumax" => BOConfig::myopic(AcquisitionKind::MuMax),
            "KG" => BOConfig {
                acquisition: crate::acquisition::AcquisitionSpec::new(
                    AcquisitionKind::KnowledgeGradient,
                ),
                ..BOConfig::default()
            },
            "r2LEY" => BOConfig::two_step(ValueFunctionSpec::identity()),
            "r2LEI" => BOConfig::two_step(ValueFunctionSpec::expected_improvement(
                TargetPolicy::PosteriorMeanMax,
            )),
            "r2LPI" => BOConfig::two_step(ValueFunctionSpec::probability_of_improvement(
                TargetPolicy::PosteriorMeanMax,
            )),
            "r2LUCB" => BOConfig::two_step(ValueFunctionSpec::upper_confidence_bound(beta)),
            other => {
                return Err(Error::Config(format!(
                    "unknown strategy {other:?}; known: {}",
                    STRATEGIES.join(", ")
                )));
            }
        };
        config.optimizer.n_starts = self.n_starts;
        config.optimizer.raw_samples = self.raw_samples;
        config.optimizer.max_iterations = self.max_iterations;
        config.inner_optimizer.n_starts = self.inner_starts;
        config.inner_optimizer.max_iterations = self.max_iterations;
        config.acquisition.mc_samples = self.mc_samples;
        config.acquisition.beta = beta;
        config.acquisition.fantasy_observation_noise = self.fantasy_observation_noise;
        config.method = self.method;
        config.refit_each_step = self.refit_each_step;
        config.fit.n_starts = self.fit_starts;
        config.refit_starts = self.refit_starts;
        config.record_timing = record_timing;
        config.validate()?;
        Ok(config)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub oracle: OracleKind,
    #[serde(default = "default_noise")]
    pub noise_variance: f64,
    pub strategies: Vec<String>,
    /// Total number of observations `q`, starting samples included.
    pub budget: usize,
    /// Number of starting samples `n`.
    pub n_start: usize,
    /// Starting samples are evenly spaced over `[t_first, t_start]`.
    #[serde(default)]
    pub t_first: f64,
    pub t_start: f64,
    pub horizon: f64,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    /// Wall-clock times make outputs differ between runs, so they are off
    /// unless asked for.
    #[serde(default)]
    pub record_timing: bool,
    #[serde(default)]
    pub engine: EngineOptions,
}

fn default_noise() -> f64 {
    DEFAULT_NOISE_VARIANCE
}

fn default_replications() -> usize {
    1
}

fn default_output() -> PathBuf {
    PathBuf::from("results")
}

impl ExperimentConfig {
    pub fn new(
        oracle: OracleKind,
        strategies: &[&str],
        budget: usize,
        n_start: usize,
        t_start: f64,
        horizon: f64,
    ) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            oracle,
            noise_variance: DEFAULT_NOISE_VARIANCE,
            strategies: strategies.iter().map(|s| s.to_string()).collect(),
            budget,
            n_start,
            t_first: 0.0,
            t_start,
            horizon,
            replications: 1,
            seed: 0,
            output_dir: default_output(),
            record_timing: false,
            engine: EngineOptions::default(),
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let config: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn oracle_spec(&self) -> OracleSpec {
        OracleSpec::new(self.oracle.clone()).with_noise(self.noise_variance)
    }

    /// Number of scheduled decisions `q - n`.
    pub fn decisions(&self) -> usize {
        self.budget - self.n_start
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        self.oracle_spec().validate()?;
        if self.n_start >= self.budget {
            return Err(Error::Config(format!(
                "n_start ({}) must be below budget ({})",
                self.n_start, self.budget
            )));
        }
        if self.replications == 0 {
            return Err(Error::Config("replications must be at least 1".into()));
        }
        if !(self.horizon > self.t_start) || !(self.t_start >= self.t_first) || self.t_first < 0.0 {
            return Err(Error::Config(format!(
                "times must satisfy 0 <= t_first <= t_start < horizon (got {}, {}, {})",
                self.t_first, self.t_start, self.horizon
            )));
        }
        if self.n_start > 1 && !(self.t_start > self.t_first) {
            return Err(Error::Config(
                "several starting samples need t_first < t_start".into(),
            ));
        }
        let mut seen = std::collections::BTreeSet::new();
        for s in &self.strategies {
            if !seen.insert(s) {
                return Err(Error::Config(format!("strategy {s} listed twice")));
            }
            self.strategy_config(s)?;
        }
        Ok(())
    }

    /// Engine configuration for a named strategy; the seed is set by the harness.
    pub fn strategy_config(&self, name: &str) -> Result<BOConfig> {
        self.engine.strategy_config(name, self.record_timing)
    }
}
