use serde::{Deserialize, Serialize};

use crate::gp::Hyperparameters;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// 1-based position of the observation in the full dataset.
    pub index: usize,
    pub t: f64,
    /// Decision in normalized coordinates.
    pub x: Vec<f64>,
    pub observation: f64,
    pub acquisition_value: f64,
    /// Hyperparameters in force when the decision was made.
    pub hyperparameters: Hyperparameters,
    pub wall_ms: f64,
}

/// Record of one run over a schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub steps: Vec<StepRecord>,
    pub scheduled: usize,
    pub initial_observations: usize,
    /// Set when the run stopped early; the steps before it are kept.
    pub failure: Option<String>,
}

impl RunTrace {
    pub(crate) fn from_steps(
        steps: Vec<StepRecord>,
        scheduled: usize,
        initial_observations: usize,
    ) -> Self {
        Self {
            steps,
            scheduled,
            initial_observations,
            failure: None,
        }
    }

    pub fn is_complete(&self) -> bool {
        self.failure.is_none() && self.steps.len() == self.scheduled
    }

    /// `(x_T, y_T)` when the run reached the horizon.
    pub fn final_decision(&self) -> Option<(&[f64], f64)> {
        if self.is_complete() {
            self.steps.last().map(|s| (s.x.as_slice(), s.observation))
        } else {
            None
        }
    }
}
