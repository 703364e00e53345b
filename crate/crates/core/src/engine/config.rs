use serde::{Deserialize, Serialize};

use crate::acquisition::{AcquisitionKind, AcquisitionSpec};
use crate::error::{Error, Result};
use crate::gp::{FitConfig, Hyperparameters};
use crate::optim::OptimizerConfig;
use crate::value::ValueFunctionSpec;

/// How the two-step acquisition is maximized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum TwoStepMethod {
    /// Joint ascent over the decision and the fantasies' maximizers.
    #[default]
    OneShot,
    /// Multistart ascent on the Monte Carlo estimate, each evaluation
    /// solving the inner maximizations.
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BOConfig {
    pub acquisition: AcquisitionSpec,
    /// Value function at the horizon; drives the final decision of a
    /// lookahead run.
    pub value_function: ValueFunctionSpec,
    /// Acquisition and value-function maximization.
    pub optimizer: OptimizerConfig,
    /// Per-fantasy maximization inside Monte Carlo evaluations.
    pub inner_optimizer: OptimizerConfig,
    pub method: TwoStepMethod,
    pub refit_each_step: bool,
    pub fit: FitConfig,
    /// Random starts for refits after the first fit; the previous
    /// hyperparameters are always used as an additional start.
    pub refit_starts: usize,
    /// Used until enough data exist to fit.
    pub initial_hyperparameters: Hyperparameters,
    pub seed: u64,
    /// Record decision wall-clock times in the trace.
    pub record_timing: bool,
}

impl Default for BOConfig {
    fn default() -> Self {
        Self {
            acquisition: AcquisitionSpec::new(AcquisitionKind::TwoStepLookahead(
                ValueFunctionSpec::identity(),
            )),
            value_function: ValueFunctionSpec::identity(),
            optimizer: OptimizerConfig {
                raw_samples: 512,
                ..OptimizerConfig::default()
            },
            inner_optimizer: OptimizerConfig {
                n_starts: 4,
                ..OptimizerConfig::default()
            },
            method: TwoStepMethod::OneShot,
            refit_each_step: true,
            fit: FitConfig::default(),
            refit_starts: 1,
            initial_hyperparameters: Hyperparameters::default(),
            seed: 0,
            record_timing: true,
        }
    }
}

impl BOConfig {
    /// Recursive two-step lookahead with value function `vspec`.
    pub fn two_step(vspec: ValueFunctionSpec) -> Self {
        Self {
            acquisition: AcquisitionSpec::new(AcquisitionKind::TwoStepLookahead(vspec)),
            value_function: vspec,
            ..Self::default()
        }
    }

    pub fn myopic(kind: AcquisitionKind) -> Self {
        Self {
            acquisition: AcquisitionSpec::new(kind),
            ..Self::default()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn is_lookahead(&self) -> bool {
        !self.acquisition.kind.is_myopic()
    }

    pub fn validate(&self) -> Result<()> {
        self.acquisition.validate()?;
        self.value_function.validate()?;
        self.optimizer.validate()?;
        self.inner_optimizer.validate()?;
        self.fit.bounds.validate()?;
        self.initial_hyperparameters.validate()?;
        match &self.acquisition.kind {
            AcquisitionKind::TwoStepLookahead(v) if *v != self.value_function => Err(
                Error::InvalidArgument("two-step acquisition and value function disagree".into()),
            ),
            AcquisitionKind::KnowledgeGradient
                if self.value_function != ValueFunctionSpec::identity() =>
            {
                Err(Error::InvalidArgument(
                    "the knowledge gradient uses the posterior mean as value function".into(),
                ))
            }
            _ => Ok(()),
        }
    }
}
