//! Joint ascent over the decision and one maximizer per fantasy.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::multistart::{maximize_from_starts, OptimizerConfig};
use crate::acquisition::{AcquisitionSpec, CommonRandomNumbers, TwoStepLookahead};
use crate::error::Result;
use crate::fantasy::FantasyModel;
use crate::gp::FittedGP;
use crate::value::{resolve_target, value_and_partials, TargetContext, ValueFunctionSpec};

/// Candidates scored per fantasy to seed its maximizer.
pub const PREPASS_CANDIDATES: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneShotState {
    pub outer_point: Vec<f64>,
    pub fantasy_points: Vec<Vec<f64>>,
    pub base_samples: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OneShotResult {
    pub x_next: Vec<f64>,
    pub state: OneShotState,
    /// Joint objective at the returned iterate.
    pub value: f64,
}

/// The deterministic one-shot objective for fixed base samples.
pub struct OneShotObjective<'a> {
    gp: &'a FittedGP,
    t_next: f64,
    horizon: f64,
    vspec: ValueFunctionSpec,
    ctx: TargetContext,
    gammas: Vec<f64>,
    observation_noise: bool,
    dim: usize,
}

impl<'a> OneShotObjective<'a> {
    pub fn new(acq: &TwoStepLookahead<'a>, gp: &'a FittedGP, t_next: f64, horizon: f64) -> Self {
        Self {
            gp,
            t_next,
            horizon,
            vspec: *acq.value_spec(),
            ctx: *acq.target(),
            gammas: acq.samples().gammas.clone(),
            observation_noise: acq.observation_noise(),
            dim: gp.dataset().dim(),
        }
    }

    pub fn joint_dim(&self) -> usize {
        self.dim * (self.gammas.len() + 1)
    }

    /// Objective value and gradient at the joint vector `z = (x, x'_1, ..., x'_N)`.
    pub fn evaluate(&self, z: &[f64], grad: &mut [f64]) -> f64 {
        let d = self.dim;
        let n = self.gammas.len() as f64;
        let (x, rest) = z.split_at(d);
        let model = FantasyModel::new(self.gp, x, self.t_next, self.observation_noise);
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut total = 0.0;
        for (j, &gamma) in self.gammas.iter().enumerate() {
            let q = &rest[j * d..(j + 1) * d];
            let e = model.evaluate(q, self.horizon, gamma, true);
            let (v, dm, ds) = value_and_partials(&self.vspec, &self.ctx, e.mean, e.std);
            total += v;
            for i in 0..d {
                grad[(j + 1) * d + i] = (dm * e.d_mean_query[i] + ds * e.d_std_query[i]) / n;
                grad[i] += (dm * e.d_mean_outer[i] + ds * e.d_std_outer[i]) / n;
            }
        }
        total / n
    }

    /// Best of `candidates` for each fantasy conditioned at `x`.
    fn initial_fantasy_points(
        &self,
        x: &[f64],
        candidates: &[Vec<f64>],
        base: &[(f64, f64)],
    ) -> Vec<Vec<f64>> {
        let model = FantasyModel::new(self.gp, x, self.t_next, self.observation_noise);
        let denom = self.gp.diagonal_noise() + self.gp.posterior(x, self.t_next).variance;
        let scale = model.draw_std() / denom;
        let cross: Vec<f64> = candidates
            .iter()
            .map(|c| model.cross_covariance(c, self.horizon))
            .collect();
        self.gammas
            .iter()
            .map(|&gamma| {
                let mut best = (f64::NEG_INFINITY, 0);
                for (k, (&(mean, var), &c)) in base.iter().zip(&cross).enumerate() {
                    let m = mean + gamma * scale * c;
                    let s = (var - c * c / denom).max(0.0).sqrt();
                    let v = value_and_partials(&self.vspec, &self.ctx, m, s).0;
                    if v > best.0 {
                        best = (v, k);
                    }
                }
                candidates[best.1].clone()
            })
            .collect()
    }
}

/// Maximizes the two-step acquisition at `t_next` by ascending jointly in
/// the decision and the fantasies' inner maximizers.
#[allow(clippy::too_many_arguments)]
pub fn one_shot_maximize<R: Rng + ?Sized>(
    gp: &FittedGP,
    t_next: f64,
    horizon: f64,
    vspec: &ValueFunctionSpec,
    spec: &AcquisitionSpec,
    config: &OptimizerConfig,
    rng: &mut R,
) -> Result<OneShotResult> {
    config.validate()?;
    let d = gp.dataset().dim();
    let crn = CommonRandomNumbers::from_spec(spec, rng)?;
    let ctx = resolve_target(vspec, gp, horizon, config, rng)?;
    let acq = TwoStepLookahead::with_samples(
        gp,
        t_next,
        horizon,
        vspec,
        ctx,
        crn,
        spec.fantasy_observation_noise,
        config,
    )?;
    let objective = OneShotObjective::new(&acq, gp, t_next, horizon);

    let bounds = config.bounds_for(d)?;
    let pool = config.draw_start_pool(&bounds, rng);
    let candidates: Vec<Vec<f64>> = (0..PREPASS_CANDIDATES)
        .map(|_| bounds.sample_uniform(rng))
        .collect();
    let base: Vec<(f64, f64)> = candidates
        .iter()
        .map(|c| {
            let m = gp.posterior(c, horizon);
            (m.mean, m.variance)
        })
        .collect();
    let joint_start = |x: &[f64]| {
        let mut z = x.to_vec();
        for p in objective.initial_fantasy_points(x, &candidates, &base) {
            z.extend(p);
        }
        z
    };
    let score = |x: &[f64]| {
        let z = joint_start(x);
        let mut g = vec![0.0; z.len()];
        objective.evaluate(&z, &mut g)
    };
    let starts: Vec<Vec<f64>> = config
        .pick_starts(pool, score)
        .iter()
        .map(|x| joint_start(x))
        .collect();

    let joint_bounds = bounds.repeat(acq.samples().len() + 1);
    let f = |z: &[f64], g: &mut [f64]| objective.evaluate(z, g);
    let best = maximize_from_starts(&f, &starts, &joint_bounds, &config.local())?;
    let outer_point = best.point[..d].to_vec();
    let fantasy_points = best.point[d..].chunks(d).map(|c| c.to_vec()).collect();
    Ok(OneShotResult {
        x_next: outer_point.clone(),
        state: OneShotState {
            outer_point,
            fantasy_points,
            base_samples: acq.samples().gammas.clone(),
        },
        value: best.value,
    })
}
