//! Type-II maximum likelihood for the kernel hyperparameters.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::fitted::factorize;
use super::kernel::{covariance, sq_dist};
use super::types::{Dataset, Hyperparameters};
use crate::error::{Error, Result};
use crate::normal::LN_2PI;
use crate::optim::{maximize_from_starts, Bounds, LocalConfig};

/// Closed intervals for each hyperparameter. Equal endpoints fix a parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HyperparameterBounds {
    pub theta_x: (f64, f64),
    pub theta_t: (f64, f64),
    pub noise_variance: (f64, f64),
    pub output_scale: (f64, f64),
}

impl Default for HyperparameterBounds {
    fn default() -> Self {
        Self {
            theta_x: (1e-2, 10.0),
            theta_t: (1e-2, 10.0),
            noise_variance: (1e-8, 1.0),
            output_scale: (1e-2, 1e2),
        }
    }
}

impl HyperparameterBounds {
    pub fn with_fixed_noise(mut self, noise_variance: f64) -> Self {
        self.noise_variance = (noise_variance, noise_variance);
        self
    }

    pub fn with_fixed_output_scale(mut self, output_scale: f64) -> Self {
        self.output_scale = (output_scale, output_scale);
        self
    }

    fn intervals(&self) -> [(f64, f64); 4] {
        [
            self.theta_x,
            self.theta_t,
            self.noise_variance,
            self.output_scale,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        for (lo, hi) in self.intervals() {
            if !(lo > 0.0) || !hi.is_finite() || lo > hi {
                return Err(Error::InvalidArgument(format!(
                    "invalid hyperparameter interval [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }

    fn log_box(&self) -> Bounds {
        let iv = self.intervals();
        Bounds::new(
            iv.iter().map(|(l, _)| l.ln()).collect(),
            iv.iter().map(|(_, h)| h.ln()).collect(),
        )
        .expect("validated intervals")
    }

    pub fn contains(&self, h: &Hyperparameters) -> bool {
        let inside =
            |v: f64, (lo, hi): (f64, f64)| v >= lo * (1.0 - 1e-12) && v <= hi * (1.0 + 1e-12);
        inside(h.theta_x, self.theta_x)
            && inside(h.theta_t, self.theta_t)
            && inside(h.noise_variance, self.noise_variance)
            && inside(h.output_scale, self.output_scale)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub bounds: HyperparameterBounds,
    /// Random starts, log-uniform over the bounds.
    pub n_starts: usize,
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            bounds: HyperparameterBounds::default(),
            n_starts: 8,
            max_iterations: 100,
            gradient_tolerance: 1e-5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub hyperparameters: Hyperparameters,
    pub log_likelihood: f64,
    /// Best log likelihood among the starting points themselves.
    pub best_start_log_likelihood: f64,
    /// False when no start was improved by local ascent.
    pub improved: bool,
}

fn to_log(h: &Hyperparameters) -> Vec<f64> {
    vec![
        h.theta_x.ln(),
        h.theta_t.ln(),
        h.noise_variance.ln(),
        h.output_scale.ln(),
    ]
}

fn from_log(p: &[f64]) -> Hyperparameters {
    Hyperparameters {
        theta_x: p[0].exp(),
        theta_t: p[1].exp(),
        noise_variance: p[2].exp(),
        output_scale: p[3].exp(),
    }
}

/// Fits hyperparameters to the mean-centered observations by multistart
/// ascent of the log marginal likelihood in log-parameter space.
///
/// `warm_start`, when given, is used as an extra first start.
pub fn fit_hyperparameters<R: Rng + ?Sized>(
    data: &Dataset,
    config: &FitConfig,
    warm_start: Option<&Hyperparameters>,
    rng: &mut R,
) -> Result<FitResult> {
    if data.len() < 2 {
        return Err(Error::Precondition(format!(
            "fitting needs at least 2 observations, got {}",
            data.len()
        )));
    }
    config.bounds.validate()?;
    let log_box = config.bounds.log_box();
    let mut starts = Vec::with_capacity(config.n_starts + 1);
    if let Some(h) = warm_start {
        let mut p = to_log(h);
        log_box.project(&mut p);
        starts.push(p);
    }
    for _ in 0..config.n_starts {
        starts.push(log_box.sample_uniform(rng));
    }
    if starts.is_empty() {
        return Err(Error::InvalidArgument(
            "no starting points for hyperparameter fitting".into(),
        ));
    }

    let objective = MarginalLikelihood::new(data);
    let f = |p: &[f64], g: &mut [f64]| {
        objective
            .value_and_gradient(&from_log(p), g)
            .unwrap_or(f64::NEG_INFINITY)
    };
    let best_start = starts
        .iter()
        .map(|s| {
            objective
                .value_and_gradient(&from_log(s), &mut [0.0; 4])
                .unwrap_or(f64::NEG_INFINITY)
        })
        .fold(f64::NEG_INFINITY, f64::max);
    let local = LocalConfig {
        max_iterations: config.max_iterations,
        gradient_tolerance: config.gradient_tolerance,
        initial_step: 0.5,
        ..LocalConfig::default()
    };
    let best = maximize_from_starts(&f, &starts, &log_box, &local)
        .map_err(|_| Error::Optimization("marginal likelihood not finite at any start".into()))?;
    let improved = best.value > best_start;
    if !improved {
        log::warn!("hyperparameter fit did not improve on its starting points");
    }
    Ok(FitResult {
        hyperparameters: from_log(&best.point),
        log_likelihood: best.value,
        best_start_log_likelihood: best_start,
        improved,
    })
}

/// Log marginal likelihood of mean-centered observations, with its
/// gradient in log-parameter space.
pub(crate) struct MarginalLikelihood {
    dim: usize,
    inputs: Vec<f64>,
    times: Vec<f64>,
    targets: Vec<f64>,
}

impl MarginalLikelihood {
    pub fn new(data: &Dataset) -> Self {
        let mean = data.mean_observation();
        Self {
            dim: data.dim(),
            inputs: data
                .records()
                .iter()
                .flat_map(|r| r.point.coords().iter().copied())
                .collect(),
            times: data.records().iter().map(|r| r.time).collect(),
            targets: data.observations().map(|y| y - mean).collect(),
        }
    }

    /// Value, with the gradient with respect to
    /// `(ln theta_x, ln theta_t, ln noise, ln output_scale)` written to `grad`.
    pub fn value_and_gradient(&self, hyp: &Hyperparameters, grad: &mut [f64]) -> Result<f64> {
        let n = self.times.len();
        let d = self.dim;
        let (factor, _) = factorize(&self.inputs, &self.times, d, hyp)?;
        let mut alpha = self.targets.clone();
        factor.solve_in_place(&mut alpha);
        let fit: f64 = self.targets.iter().zip(&alpha).map(|(a, b)| a * b).sum();
        let value = -0.5 * fit - 0.5 * factor.log_det() - 0.5 * n as f64 * LN_2PI;

        let inv = factor.inverse();
        let x = |i: usize| &self.inputs[i * d..(i + 1) * d];
        let (mut gx, mut gt, mut gn, mut gs) = (0.0, 0.0, 0.0, 0.0);
        let (tx2, tt2) = (hyp.theta_x * hyp.theta_x, hyp.theta_t * hyp.theta_t);
        for i in 0..n {
            for j in 0..=i {
                let w = alpha[i] * alpha[j] - inv[j][i];
                let mult = if i == j { 1.0 } else { 2.0 };
                let k = covariance(x(i), self.times[i], x(j), self.times[j], hyp);
                let dt = self.times[i] - self.times[j];
                gx += mult * w * k * sq_dist(x(i), x(j)) / tx2;
                gt += mult * w * k * dt * dt / tt2;
                gs += mult * w * k;
                if i == j {
                    gn += w * hyp.noise_variance;
                }
            }
        }
        grad[0] = 0.5 * gx;
        grad[1] = 0.5 * gt;
        grad[2] = 0.5 * gn;
        grad[3] = 0.5 * gs;
        Ok(value)
    }
}
