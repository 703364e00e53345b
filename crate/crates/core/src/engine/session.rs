use std::path::Path;
use std::time::Instant;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::BOConfig;
use super::decide::decide;
use super::schedule::Schedule;
use super::trace::{RunTrace, StepRecord};
use crate::error::{Error, Result};
use crate::gp::{fit_hyperparameters, Dataset, FitConfig, FittedGP, Hyperparameters, Point};
use crate::seed;

pub const SESSION_FORMAT: &str = "lookahead-session";
pub const SESSION_VERSION: u32 = 1;

/// A decision handed out by [`Session::ask`] and awaiting its observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PendingDecision {
    pub x: Vec<f64>,
    pub t: f64,
    pub acquisition_value: f64,
    pub hyperparameters: Hyperparameters,
    pub wall_ms: f64,
}

/// Resumable state of one sequential run, driven by `ask`/`tell`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    format: String,
    version: u32,
    config: BOConfig,
    schedule: Schedule,
    /// Observations in the starting data; the rest come from `tell`.
    initial_len: usize,
    dataset: Dataset,
    hyperparameters: Hyperparameters,
    /// Index of the next schedule entry.
    position: usize,
    rng: ChaCha8Rng,
    pending: Option<PendingDecision>,
    steps: Vec<StepRecord>,
}

impl Session {
    pub fn new(config: BOConfig, data: Dataset, schedule: Schedule) -> Result<Self> {
        config.validate()?;
        if let Some(bounds) = &config.optimizer.bounds {
            if bounds.dim() != data.dim() {
                return Err(Error::InvalidArgument(
                    "optimizer bounds do not match the data dimension".into(),
                ));
            }
        }
        if let Some(last) = data.last_time() {
            if schedule.times()[0] <= last {
                return Err(Error::InvalidArgument(format!(
                    "schedule starts at {} but data extend to {last}",
                    schedule.times()[0]
                )));
            }
        }
        let mut rng = seed::rng(config.seed);
        let mut hyperparameters = config.initial_hyperparameters;
        if data.len() >= 2 {
            hyperparameters =
                fit_hyperparameters(&data, &config.fit, Some(&hyperparameters), &mut rng)?
                    .hyperparameters;
        }
        Ok(Self {
            format: SESSION_FORMAT.into(),
            version: SESSION_VERSION,
            config,
            schedule,
            initial_len: data.len(),
            dataset: data,
            hyperparameters,
            position: 0,
            rng,
            pending: None,
            steps: Vec::new(),
        })
    }

    pub fn config(&self) -> &BOConfig {
        &self.config
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn hyperparameters(&self) -> &Hyperparameters {
        &self.hyperparameters
    }

    pub fn position(&self) -> usize {
        self.position
    }

    pub fn pending(&self) -> Option<&PendingDecision> {
        self.pending.as_ref()
    }

    pub fn is_complete(&self) -> bool {
        self.position == self.schedule.len()
    }

    pub fn posterior(&self) -> Result<FittedGP> {
        FittedGP::new(self.dataset.clone(), self.hyperparameters)
    }

    /// Computes the decision for the next scheduled time.
    pub fn ask(&mut self) -> Result<(Vec<f64>, f64)> {
        if self.pending.is_some() {
            return Err(Error::Protocol(
                "ask called while a decision awaits its observation".into(),
            ));
        }
        if self.is_complete() {
            return Err(Error::Protocol("the schedule is exhausted".into()));
        }
        let t = self.schedule.times()[self.position];
        let is_final = self.position + 1 == self.schedule.len();
        let start = Instant::now();
        let gp = self.posterior()?;
        let d = decide(
            &self.config,
            &gp,
            t,
            self.schedule.horizon(),
            is_final,
            &mut self.rng,
        )?;
        let wall_ms = if self.config.record_timing {
            start.elapsed().as_secs_f64() * 1e3
        } else {
            0.0
        };
        self.pending = Some(PendingDecision {
            x: d.x.clone(),
            t,
            acquisition_value: d.acquisition_value,
            hyperparameters: self.hyperparameters,
            wall_ms,
        });
        Ok((d.x, t))
    }

    /// Records the observation for the pending decision and refits.
    pub fn tell(&mut self, observation: f64) -> Result<()> {
        if !observation.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "observation {observation} is not finite"
            )));
        }
        let p = self
            .pending
            .take()
            .ok_or_else(|| Error::Protocol("tell called without a pending ask".into()))?;
        if let Err(e) = self.dataset.push(Point::clamped(&p.x), p.t, observation) {
            self.pending = Some(p);
            return Err(e);
        }
        self.steps.push(StepRecord {
            index: self.dataset.len(),
            t: p.t,
            x: p.x,
            observation,
            acquisition_value: p.acquisition_value,
            hyperparameters: p.hyperparameters,
            wall_ms: p.wall_ms,
        });
        self.position += 1;
        if self.config.refit_each_step && self.dataset.len() >= 2 && !self.is_complete() {
            self.refit();
        }
        Ok(())
    }

    fn refit(&mut self) {
        let first_fit = self.dataset.len() - 1 < 2;
        let cfg = if first_fit {
            self.config.fit.clone()
        } else {
            FitConfig {
                n_starts: self.config.refit_starts,
                ..self.config.fit.clone()
            }
        };
        match fit_hyperparameters(
            &self.dataset,
            &cfg,
            Some(&self.hyperparameters),
            &mut self.rng,
        ) {
            Ok(r) => self.hyperparameters = r.hyperparameters,
            Err(e) => log::warn!("refit failed, keeping previous hyperparameters: {e}"),
        }
    }

    pub fn trace(&self) -> RunTrace {
        RunTrace::from_steps(self.steps.clone(), self.schedule.len(), self.initial_len)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let session: Self = serde_json::from_str(s)?;
        if session.format != SESSION_FORMAT {
            return Err(Error::Config(format!(
                "not a session file (format {:?})",
                session.format
            )));
        }
        if session.version != SESSION_VERSION {
            return Err(Error::Config(format!(
                "unsupported session version {}",
                session.version
            )));
        }
        Ok(session)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, self.to_json()?)?;
        std::fs::rename(tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
