//! Myopic acquisitions and the Monte Carlo two-step lookahead.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fantasy::FantasyModel;
use crate::gp::{covariance, FittedGP};
use crate::optim::{inner_value_maximize, OptimizerConfig};
use crate::seed;
use crate::value::{
    max_posterior_mean, resolve_target, value_and_partials, value_with_gradient, TargetContext,
    TargetPolicy, ValueFunctionSpec, DEFAULT_BETA,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AcquisitionKind {
    #[serde(rename = "EI")]
    ExpectedImprovement,
    #[serde(rename = "PI")]
    ProbabilityOfImprovement,
    #[serde(rename = "UCB")]
    UpperConfidenceBound,
    #[serde(rename = "EImumax")]
    ExpectedImprovementMuMax,
    #[serde(rename = "PImumax")]
    ProbabilityOfImprovementMuMax,
    #[serde(rename = "mumax")]
    MuMax,
    Random,
    TwoStepLookahead(ValueFunctionSpec),
    KnowledgeGradient,
}

impl AcquisitionKind {
    pub fn is_myopic(&self) -> bool {
        !matches!(
            self,
            AcquisitionKind::TwoStepLookahead(_) | AcquisitionKind::KnowledgeGradient
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionSpec {
    pub kind: AcquisitionKind,
    /// Number of fantasy draws `N`.
    #[serde(default = "default_mc_samples")]
    pub mc_samples: usize,
    /// Fixed standard-normal draws (common random numbers), length `N`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_samples: Option<Vec<f64>>,
    /// Draw fantasies from the noisy predictive rather than the latent posterior.
    #[serde(default = "default_true")]
    pub fantasy_observation_noise: bool,
    /// Confidence parameter of the myopic UCB.
    #[serde(default = "default_beta")]
    pub beta: f64,
}

fn default_mc_samples() -> usize {
    32
}

fn default_true() -> bool {
    true
}

fn default_beta() -> f64 {
    DEFAULT_BETA
}

impl AcquisitionSpec {
    pub fn new(kind: AcquisitionKind) -> Self {
        Self {
            kind,
            mc_samples: 32,
            base_samples: None,
            fantasy_observation_noise: true,
            beta: DEFAULT_BETA,
        }
    }

    pub fn with_mc_samples(mut self, n: usize) -> Self {
        self.mc_samples = n;
        self
    }

    pub fn with_base_samples(mut self, samples: Vec<f64>) -> Self {
        self.mc_samples = samples.len();
        self.base_samples = Some(samples);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.mc_samples == 0 {
            return Err(Error::InvalidArgument(
                "mc_samples must be at least 1".into(),
            ));
        }
        if let Some(b) = &self.base_samples {
            if b.len() != self.mc_samples {
                return Err(Error::InvalidArgument(format!(
                    "base_samples has length {}, expected {}",
                    b.len(),
                    self.mc_samples
                )));
            }
            if b.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument("base_samples must be finite".into()));
            }
        }
        if !(self.beta >= 0.0) {
            return Err(Error::InvalidArgument("beta must be non-negative".into()));
        }
        if let AcquisitionKind::TwoStepLookahead(v) = &self.kind {
            v.validate()?;
        }
        Ok(())
    }

    /// Value function a myopic kind maximizes at the current time; `None` for `Random`.
    pub fn myopic_value_spec(&self) -> Result<Option<ValueFunctionSpec>> {
        use AcquisitionKind::*;
        Ok(Some(match self.kind {
            ExpectedImprovement => {
                ValueFunctionSpec::expected_improvement(TargetPolicy::BestObserved)
            }
            ProbabilityOfImprovement => {
                ValueFunctionSpec::probability_of_improvement(TargetPolicy::BestObserved)
            }
            ExpectedImprovementMuMax => {
                ValueFunctionSpec::expected_improvement(TargetPolicy::PosteriorMeanMax)
            }
            ProbabilityOfImprovementMuMax => {
                ValueFunctionSpec::probability_of_improvement(TargetPolicy::PosteriorMeanMax)
            }
            UpperConfidenceBound => ValueFunctionSpec::upper_confidence_bound(self.beta),
            MuMax => ValueFunctionSpec::identity(),
            Random => return Ok(None),
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "{:?} is not a myopic acquisition",
                    self.kind
                )))
            }
        }))
    }
}

/// A myopic acquisition with its target resolved for one posterior and time.
#[derive(Debug, Clone)]
pub struct MyopicAcquisition<'a> {
    gp: &'a FittedGP,
    t: f64,
    vspec: Option<ValueFunctionSpec>,
    ctx: TargetContext,
}

impl<'a> MyopicAcquisition<'a> {
    pub fn new<R: Rng + ?Sized>(
        gp: &'a FittedGP,
        t: f64,
        spec: &AcquisitionSpec,
        optimizer: &OptimizerConfig,
        rng: &mut R,
    ) -> Result<Self> {
        spec.validate()?;
        let vspec = spec.myopic_value_spec()?;
        let ctx = match &vspec {
            Some(v) => resolve_target(v, gp, t, optimizer, rng)?,
            None => TargetContext::fixed(0.0, t),
        };
        Ok(Self { gp, t, vspec, ctx })
    }

    pub fn target(&self) -> &TargetContext {
        &self.ctx
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.value_with_gradient(x).0
    }

    pub fn value_with_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        match &self.vspec {
            Some(v) => value_with_gradient(self.gp, x, self.t, v, &self.ctx),
            None => (0.0, vec![0.0; x.len()]),
        }
    }
}

/// Myopic acquisition value at `(x, t)`. `Random` evaluates to 0.
pub fn myopic_acquisition<R: Rng + ?Sized>(
    gp: &FittedGP,
    x: &[f64],
    t: f64,
    spec: &AcquisitionSpec,
    optimizer: &OptimizerConfig,
    rng: &mut R,
) -> Result<f64> {
    Ok(MyopicAcquisition::new(gp, t, spec, optimizer, rng)?.value(x))
}

/// Standard-normal base draws shared across every evaluation of one
/// acquisition, plus the seed for the inner maximizations' starts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommonRandomNumbers {
    pub gammas: Vec<f64>,
    pub inner_seed: u64,
}

impl CommonRandomNumbers {
    /// Uses the draws fixed in `gammas`; the inner seed is derived from them.
    pub fn new(gammas: Vec<f64>) -> Self {
        let parts: Vec<u64> = gammas.iter().map(|g| g.to_bits()).collect();
        let inner_seed = seed::derive(0x5eed, &parts);
        Self { gammas, inner_seed }
    }

    /// Fixed base samples from `spec`, or fresh draws from `rng`.
    pub fn from_spec<R: Rng + ?Sized>(spec: &AcquisitionSpec, rng: &mut R) -> Result<Self> {
        spec.validate()?;
        Ok(match &spec.base_samples {
            Some(b) => Self::new(b.clone()),
            None => Self::draw(spec.mc_samples, rng),
        })
    }

    pub fn draw<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        Self::new((0..n).map(|_| StandardNormal.sample(rng)).collect())
    }

    pub fn len(&self) -> usize {
        self.gammas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gammas.is_empty()
    }

    pub(crate) fn inner_rng(&self, j: usize, attempt: u64) -> rand_chacha::ChaCha8Rng {
        seed::rng(seed::derive(self.inner_seed, &[j as u64, attempt]))
    }
}

/// Per-draw results of one two-step evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct FantasyBatch {
    pub gammas: Vec<f64>,
    /// Fantasized observations `y^j` at the conditioning point.
    pub fantasy_observations: Vec<f64>,
    pub inner_maximizers: Vec<Vec<f64>>,
    pub inner_values: Vec<f64>,
}

impl FantasyBatch {
    pub fn len(&self) -> usize {
        self.inner_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inner_values.is_empty()
    }

    /// Sample mean of the inner maxima, summed in index order.
    pub fn mean(&self) -> f64 {
        self.inner_values.iter().sum::<f64>() / self.len() as f64
    }

    /// Standard error of [`FantasyBatch::mean`].
    pub fn std_error(&self) -> f64 {
        let n = self.len();
        if n < 2 {
            return 0.0;
        }
        let m = self.mean();
        let var = self
            .inner_values
            .iter()
            .map(|v| (v - m).powi(2))
            .sum::<f64>()
            / (n - 1) as f64;
        (var / n as f64).sqrt()
    }
}

/// Two-step lookahead `E_n[max_x~ v_{n,1}(x~, T)]` estimated with common random numbers.
#[derive(Debug, Clone)]
pub struct TwoStepLookahead<'a> {
    gp: &'a FittedGP,
    t_next: f64,
    horizon: f64,
    vspec: ValueFunctionSpec,
    ctx: TargetContext,
    crn: CommonRandomNumbers,
    observation_noise: bool,
    inner: OptimizerConfig,
}

impl<'a> TwoStepLookahead<'a> {
    /// Resolves the value-function target on `gp` at the horizon and fixes the draws.
    #[allow(clippy::too_many_arguments)]
    pub fn new<R: Rng + ?Sized>(
        gp: &'a FittedGP,
        t_next: f64,
        horizon: f64,
        vspec: &ValueFunctionSpec,
        spec: &AcquisitionSpec,
        inner: &OptimizerConfig,
        rng: &mut R,
    ) -> Result<Self> {
        let crn = CommonRandomNumbers::from_spec(spec, rng)?;
        let ctx = resolve_target(vspec, gp, horizon, inner, rng)?;
        Self::with_samples(
            gp,
            t_next,
            horizon,
            vspec,
            ctx,
            crn,
            spec.fantasy_observation_noise,
            inner,
        )
    }

    #[allow(clippy::too_many_arguments)]
    pub fn with_samples(
        gp: &'a FittedGP,
        t_next: f64,
        horizon: f64,
        vspec: &ValueFunctionSpec,
        ctx: TargetContext,
        crn: CommonRandomNumbers,
        observation_noise: bool,
        inner: &OptimizerConfig,
    ) -> Result<Self> {
        vspec.validate()?;
        inner.validate()?;
        if crn.is_empty() {
            return Err(Error::InvalidArgument(
                "at least one fantasy draw is required".into(),
            ));
        }
        if !(t_next <= horizon) {
            return Err(Error::Precondition(format!(
                "decision time {t_next} is after the horizon {horizon}"
            )));
        }
        if let Some(last) = gp.dataset().last_time() {
            if t_next <= last {
                return Err(Error::Precondition(format!(
                    "decision time {t_next} does not follow observed time {last}"
                )));
            }
        }
        Ok(Self {
            gp,
            t_next,
            horizon,
            vspec: *vspec,
            ctx,
            crn,
            observation_noise,
            inner: inner.clone(),
        })
    }

    pub fn samples(&self) -> &CommonRandomNumbers {
        &self.crn
    }

    pub fn target(&self) -> &TargetContext {
        &self.ctx
    }

    pub fn value_spec(&self) -> &ValueFunctionSpec {
        &self.vspec
    }

    pub fn observation_noise(&self) -> bool {
        self.observation_noise
    }

    pub fn fantasy_model(&self, x: &[f64]) -> FantasyModel<'a> {
        FantasyModel::new(self.gp, x, self.t_next, self.observation_noise)
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.gp.dataset().dim() || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("bad decision point {x:?}")));
        }
        Ok(())
    }

    /// Monte Carlo estimate at `x` with the per-draw inner maxima.
    pub fn value(&self, x: &[f64]) -> Result<(f64, FantasyBatch)> {
        self.check_point(x)?;
        let model = self.fantasy_model(x);
        let per_draw: Vec<Result<(Vec<f64>, f64)>> = self
            .crn
            .gammas
            .par_iter()
            .enumerate()
            .map(|(j, &gamma)| {
                let sample = model.sample(gamma);
                let mut rng = self.crn.inner_rng(j, 0);
                inner_value_maximize(
                    &sample,
                    self.horizon,
                    &self.vspec,
                    &self.ctx,
                    &self.inner,
                    &mut rng,
                )
                .or_else(|e| {
                    log::debug!("inner maximization failed for draw {j} ({e}); retrying");
                    let mut rng = self.crn.inner_rng(j, 1);
                    inner_value_maximize(
                        &sample,
                        self.horizon,
                        &self.vspec,
                        &self.ctx,
                        &self.inner,
                        &mut rng,
                    )
                })
            })
            .collect();
        let mut batch = FantasyBatch {
            gammas: self.crn.gammas.clone(),
            fantasy_observations: self
                .crn
                .gammas
                .iter()
                .map(|&g| model.fantasy_observation(g))
                .collect(),
            inner_maximizers: Vec::with_capacity(self.crn.len()),
            inner_values: Vec::with_capacity(self.crn.len()),
        };
        for r in per_draw {
            let (p, v) = r?;
            batch.inner_maximizers.push(p);
            batch.inner_values.push(v);
        }
        Ok((batch.mean(), batch))
    }

    /// Envelope gradient: differentiates each draw's value at its inner
    /// maximizer, held fixed, through the fantasy posterior.
    pub fn gradient_from_batch(&self, x: &[f64], batch: &FantasyBatch) -> Vec<f64> {
        let model = self.fantasy_model(x);
        let n = batch.len() as f64;
        let mut grad = vec![0.0; x.len()];
        for (q, &gamma) in batch.inner_maximizers.iter().zip(&batch.gammas) {
            let e = model.evaluate(q, self.horizon, gamma, true);
            let (_, dm, ds) = value_and_partials(&self.vspec, &self.ctx, e.mean, e.std);
            for (g, (a, b)) in grad
                .iter_mut()
                .zip(e.d_mean_outer.iter().zip(&e.d_std_outer))
            {
                *g += (dm * a + ds * b) / n;
            }
        }
        grad
    }

    pub fn value_and_gradient(&self, x: &[f64]) -> Result<(f64, Vec<f64>, FantasyBatch)> {
        let (v, batch) = self.value(x)?;
        let g = self.gradient_from_batch(x, &batch);
        Ok((v, g, batch))
    }

    /// The conditioned processes behind `batch`, one per draw.
    pub fn fantasy_models(&self, x: &[f64], batch: &FantasyBatch) -> Result<Vec<FittedGP>> {
        let model = self.fantasy_model(x);
        batch.gammas.iter().map(|&g| model.conditioned(g)).collect()
    }
}

/// `(1/N) sum_j max_x~ v_{n,1}(x~, T)` for fantasies conditioned at `(x, t_next)`.
#[allow(clippy::too_many_arguments)]
pub fn two_step_acquisition_mc<R: Rng + ?Sized>(
    gp: &FittedGP,
    x: &[f64],
    t_next: f64,
    horizon: f64,
    vspec: &ValueFunctionSpec,
    spec: &AcquisitionSpec,
    inner: &OptimizerConfig,
    rng: &mut R,
) -> Result<(f64, FantasyBatch)> {
    TwoStepLookahead::new(gp, t_next, horizon, vspec, spec, inner, rng)?.value(x)
}

/// Unbiased gradient estimate of the two-step acquisition at `x`.
#[allow(clippy::too_many_arguments)]
pub fn two_step_gradient_mc<R: Rng + ?Sized>(
    gp: &FittedGP,
    x: &[f64],
    t_next: f64,
    horizon: f64,
    vspec: &ValueFunctionSpec,
    spec: &AcquisitionSpec,
    inner: &OptimizerConfig,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let acq = TwoStepLookahead::new(gp, t_next, horizon, vspec, spec, inner, rng)?;
    Ok(acq.value_and_gradient(x)?.1)
}

/// Two-step lookahead with the posterior mean as value function.
pub fn two_step_ley<R: Rng + ?Sized>(
    gp: &FittedGP,
    x: &[f64],
    t_next: f64,
    horizon: f64,
    spec: &AcquisitionSpec,
    inner: &OptimizerConfig,
    rng: &mut R,
) -> Result<f64> {
    Ok(two_step_acquisition_mc(
        gp,
        x,
        t_next,
        horizon,
        &ValueFunctionSpec::identity(),
        spec,
        inner,
        rng,
    )?
    .0)
}

/// Gradient of the two-step expected-mean estimate by explicit
/// differentiation of `k_{n+1}^T K_{n+1}^{-1} y_{n+1}` in the conditioning
/// location, using `d(K^{-1}) = -K^{-1} dK K^{-1}`. Each draw's inner
/// maximizer is taken from `batch` and held fixed; the fantasized
/// observation moves with `x` through the reparameterization.
pub fn two_step_ley_gradient_closed_form(
    gp: &FittedGP,
    x: &[f64],
    t_next: f64,
    horizon: f64,
    batch: &FantasyBatch,
    observation_noise: bool,
) -> Vec<f64> {
    let hyp = gp.hyperparameters();
    let records = gp.dataset().records();
    let n = records.len();
    let d = x.len();
    let m = n + 1;
    let noise = gp.diagonal_noise();
    let theta2 = hyp.theta_x * hyp.theta_x;

    let point = |i: usize| -> (&[f64], f64) {
        if i < n {
            (records[i].point.coords(), records[i].time)
        } else {
            (x, t_next)
        }
    };
    let kmat = DMatrix::from_fn(m, m, |i, j| {
        let (a, ta) = point(i);
        let (b, tb) = point(j);
        covariance(a, ta, b, tb, hyp) + if i == j { noise } else { 0.0 }
    });
    let kinv = kmat
        .cholesky()
        .expect("augmented covariance is positive definite")
        .inverse();

    let pg = gp.posterior_with_gradient(x, t_next);
    let var_x = pg.moments.variance;
    let (draw_std, d_draw_std): (f64, Vec<f64>) = if observation_noise {
        let s = (var_x + noise).sqrt();
        (
            s,
            pg.d_std.iter().map(|v| pg.moments.std() * v / s).collect(),
        )
    } else {
        (pg.moments.std(), pg.d_std.clone())
    };

    let mut grad = vec![0.0; d];
    for (q, &gamma) in batch.inner_maximizers.iter().zip(&batch.gammas) {
        let y_new = pg.moments.mean + draw_std * gamma;
        let mut y = DVector::from_fn(m, |i, _| if i < n { records[i].observation } else { y_new });
        y.add_scalar_mut(-gp.mean_offset());
        let kq = DVector::from_fn(m, |i, _| {
            let (a, ta) = point(i);
            covariance(q, horizon, a, ta, hyp)
        });
        let kinv_y = &kinv * &y;
        let kinv_kq = &kinv * &kq;
        for c in 0..d {
            // d k_q / dx_c: only the last entry depends on x.
            let dkq_last = kq[n] * (q[c] - x[c]) / theta2;
            let mut g = dkq_last * kinv_y[n];
            // dK/dx_c: last row and column.
            let mut dk = DMatrix::zeros(m, m);
            for i in 0..n {
                let (a, ta) = point(i);
                let v = covariance(a, ta, x, t_next, hyp) * (a[c] - x[c]) / theta2;
                dk[(i, n)] = v;
                dk[(n, i)] = v;
            }
            g -= (kinv_kq.transpose() * &dk * &kinv_y)[(0, 0)];
            let dy = pg.d_mean[c] + gamma * d_draw_std[c];
            g += kinv_kq[n] * dy;
            grad[c] += g / batch.len() as f64;
        }
    }
    grad
}

/// Knowledge gradient: the two-step expected mean minus `max_x~ mu_n(x~, T)`.
#[derive(Debug, Clone)]
pub struct KnowledgeGradient<'a> {
    ley: TwoStepLookahead<'a>,
    current_max: f64,
}

impl<'a> KnowledgeGradient<'a> {
    pub fn new<R: Rng + ?Sized>(
        gp: &'a FittedGP,
        t_next: f64,
        horizon: f64,
        spec: &AcquisitionSpec,
        inner: &OptimizerConfig,
        rng: &mut R,
    ) -> Result<Self> {
        let ley = TwoStepLookahead::new(
            gp,
            t_next,
            horizon,
            &ValueFunctionSpec::identity(),
            spec,
            inner,
            rng,
        )?;
        let current_max = if gp.is_empty() {
            gp.mean_offset()
        } else {
            max_posterior_mean(gp, horizon, inner, rng)?.1
        };
        Ok(Self { ley, current_max })
    }

    pub fn from_lookahead(ley: TwoStepLookahead<'a>, current_max: f64) -> Self {
        Self { ley, current_max }
    }

    /// `max_x~ mu_n(x~, T)`, computed once per posterior.
    pub fn current_max(&self) -> f64 {
        self.current_max
    }

    pub fn lookahead(&self) -> &TwoStepLookahead<'a> {
        &self.ley
    }

    pub fn value(&self, x: &[f64]) -> Result<(f64, FantasyBatch)> {
        let (v, batch) = self.ley.value(x)?;
        Ok((v - self.current_max, batch))
    }
}

pub fn knowledge_gradient<R: Rng + ?Sized>(
    gp: &FittedGP,
    x: &[f64],
    t_next: f64,
    horizon: f64,
    spec: &AcquisitionSpec,
    inner: &OptimizerConfig,
    rng: &mut R,
) -> Result<f64> {
    Ok(
        KnowledgeGradient::new(gp, t_next, horizon, spec, inner, rng)?
            .value(x)?
            .0,
    )
}
