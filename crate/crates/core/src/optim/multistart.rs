use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bounds::Bounds;
use super::local::{local_maximize, LocalConfig};
use crate::error::{Error, Result};

/// How local-ascent starting points are drawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub enum StartDistribution {
    /// Uniform over the domain.
    #[default]
    Uniform,
    /// Cycles through the given points, projected onto the domain.
    Points(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub n_starts: usize,
    /// Uniform candidates scored before local ascent; the best `n_starts`
    /// become the starts. Zero (or at most `n_starts`) disables the prepass.
    pub raw_samples: usize,
    pub start_distribution: StartDistribution,
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
    /// Search domain; the unit cube of the objective's dimension when absent.
    pub bounds: Option<Bounds>,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            n_starts: 16,
            raw_samples: 0,
            start_distribution: StartDistribution::Uniform,
            max_iterations: 100,
            gradient_tolerance: 1e-6,
            bounds: None,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_starts == 0 {
            return Err(Error::InvalidArgument("n_starts must be at least 1".into()));
        }
        if !(self.gradient_tolerance > 0.0) {
            return Err(Error::InvalidArgument(
                "gradient tolerance must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn bounds_for(&self, dim: usize) -> Result<Bounds> {
        match &self.bounds {
            Some(b) if b.dim() != dim => Err(Error::InvalidArgument(format!(
                "configured bounds have dimension {}, objective has {dim}",
                b.dim()
            ))),
            Some(b) => Ok(b.clone()),
            None => Ok(Bounds::unit(dim)),
        }
    }

    pub fn local(&self) -> LocalConfig {
        LocalConfig {
            max_iterations: self.max_iterations,
            gradient_tolerance: self.gradient_tolerance,
            ..LocalConfig::default()
        }
    }

    /// Draws the configured starting points.
    pub fn draw_starts<R: Rng + ?Sized>(&self, bounds: &Bounds, rng: &mut R) -> Vec<Vec<f64>> {
        (0..self.n_starts)
            .map(|i| match &self.start_distribution {
                StartDistribution::Uniform => bounds.sample_uniform(rng),
                StartDistribution::Points(pts) if !pts.is_empty() => {
                    let mut p = pts[i % pts.len()].clone();
                    p.resize(bounds.dim(), 0.0);
                    bounds.project(&mut p);
                    p
                }
                StartDistribution::Points(_) => bounds.sample_uniform(rng),
            })
            .collect()
    }

    /// Whether [`select_starts`](Self::select_starts) scores raw candidates.
    pub fn uses_raw_samples(&self) -> bool {
        self.raw_samples > self.n_starts && self.start_distribution == StartDistribution::Uniform
    }

    /// Starting points, chosen from `raw_samples` uniform candidates by
    /// `score` when the prepass is enabled.
    pub fn select_starts<R, S>(&self, bounds: &Bounds, score: S, rng: &mut R) -> Vec<Vec<f64>>
    where
        R: Rng + ?Sized,
        S: Fn(&[f64]) -> f64 + Sync,
    {
        let pool = self.draw_start_pool(bounds, rng);
        self.pick_starts(pool, score)
    }

    /// The raw candidates when the prepass is enabled, else the starts.
    pub fn draw_start_pool<R: Rng + ?Sized>(&self, bounds: &Bounds, rng: &mut R) -> Vec<Vec<f64>> {
        if self.uses_raw_samples() {
            (0..self.raw_samples)
                .map(|_| bounds.sample_uniform(rng))
                .collect()
        } else {
            self.draw_starts(bounds, rng)
        }
    }

    /// The best `n_starts` of `pool` by `score`, in draw order. Ties and
    /// non-finite scores favour earlier draws.
    pub fn pick_starts<S>(&self, pool: Vec<Vec<f64>>, score: S) -> Vec<Vec<f64>>
    where
        S: Fn(&[f64]) -> f64 + Sync,
    {
        if !self.uses_raw_samples() {
            return pool;
        }
        let scores: Vec<f64> = pool
            .par_iter()
            .map(|x| score(x))
            .map(|v| if v.is_finite() { v } else { f64::NEG_INFINITY })
            .collect();
        let mut order: Vec<usize> = (0..pool.len()).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
        order.truncate(self.n_starts);
        order.sort_unstable();
        order.into_iter().map(|i| pool[i].clone()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Optimum {
    pub point: Vec<f64>,
    pub value: f64,
    /// Index of the start that produced the optimum.
    pub start_index: usize,
}

/// Best local ascent over `n_starts` starting points, selected by
/// [`OptimizerConfig::select_starts`].
///
/// Starts whose value is not finite are discarded. Ties go to the lowest
/// start index, so a constant objective returns the first start.
pub fn multistart_maximize<F, R>(
    objective: &F,
    dim: usize,
    config: &OptimizerConfig,
    rng: &mut R,
) -> Result<Optimum>
where
    F: Fn(&[f64], &mut [f64]) -> f64 + Sync + ?Sized,
    R: Rng + ?Sized,
{
    config.validate()?;
    let bounds = config.bounds_for(dim)?;
    let starts = config.select_starts(
        &bounds,
        |x| {
            let mut g = vec![0.0; x.len()];
            objective(x, &mut g)
        },
        rng,
    );
    maximize_from_starts(objective, &starts, &bounds, &config.local())
}

/// Local ascent from each of `starts`; see [`multistart_maximize`].
pub fn maximize_from_starts<F>(
    objective: &F,
    starts: &[Vec<f64>],
    bounds: &Bounds,
    local: &LocalConfig,
) -> Result<Optimum>
where
    F: Fn(&[f64], &mut [f64]) -> f64 + Sync + ?Sized,
{
    let results: Vec<_> = starts
        .par_iter()
        .map(|s| local_maximize(objective, s, bounds, local))
        .collect();
    let mut best: Option<Optimum> = None;
    for (i, r) in results.into_iter().enumerate() {
        let Some(r) = r else { continue };
        if !r.value.is_finite() {
            continue;
        }
        if best.as_ref().is_none_or(|b| r.value > b.value) {
            best = Some(Optimum {
                point: r.point,
                value: r.value,
                start_index: i,
            });
        }
    }
    best.ok_or_else(|| Error::Optimization("objective was not finite at any start".into()))
}
