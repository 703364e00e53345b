//! Value functions evaluated on a posterior at a fixed time: identity
//! (posterior mean), probability of improvement, expected improvement and
//! the upper confidence bound.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::{FittedGP, Surrogate};
use crate::normal;
use crate::optim::{multistart_maximize, OptimizerConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ValueKind {
    Identity,
    #[serde(rename = "PI")]
    ProbabilityOfImprovement,
    #[serde(rename = "EI")]
    ExpectedImprovement,
    #[serde(rename = "UCB")]
    UpperConfidenceBound,
}

/// How the improvement target of PI/EI is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TargetPolicy {
    Fixed(f64),
    /// Largest observation so far.
    BestObserved,
    /// Maximum over the domain of the posterior mean at the resolution time.
    PosteriorMeanMax,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValueFunctionSpec {
    pub kind: ValueKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_policy: Option<TargetPolicy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
}

pub const DEFAULT_BETA: f64 = 2.0;
/// Starts used when maximizing the posterior mean to resolve a target.
pub const TARGET_RESOLUTION_STARTS: usize = 32;

impl ValueFunctionSpec {
    pub fn identity() -> Self {
        Self {
            kind: ValueKind::Identity,
            target_policy: None,
            beta: None,
        }
    }

    pub fn probability_of_improvement(policy: TargetPolicy) -> Self {
        Self {
            kind: ValueKind::ProbabilityOfImprovement,
            target_policy: Some(policy),
            beta: None,
        }
    }

    pub fn expected_improvement(policy: TargetPolicy) -> Self {
        Self {
            kind: ValueKind::ExpectedImprovement,
            target_policy: Some(policy),
            beta: None,
        }
    }

    pub fn upper_confidence_bound(beta: f64) -> Self {
        Self {
            kind: ValueKind::UpperConfidenceBound,
            target_policy: None,
            beta: Some(beta),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let needs_target = matches!(
            self.kind,
            ValueKind::ProbabilityOfImprovement | ValueKind::ExpectedImprovement
        );
        if needs_target != self.target_policy.is_some() {
            return Err(Error::InvalidArgument(format!(
                "{:?} target policy mismatch",
                self.kind
            )));
        }
        let needs_beta = self.kind == ValueKind::UpperConfidenceBound;
        match self.beta {
            Some(b) if needs_beta && !(b >= 0.0 && b.is_finite()) => Err(Error::InvalidArgument(
                format!("beta must be non-negative, got {b}"),
            )),
            Some(_) if !needs_beta => {
                Err(Error::InvalidArgument("beta only applies to UCB".into()))
            }
            None if needs_beta => Err(Error::InvalidArgument("UCB requires beta".into())),
            _ => Ok(()),
        }
    }
}

/// A resolved improvement target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetContext {
    pub resolved_target: f64,
    pub resolution_time: f64,
}

impl TargetContext {
    pub fn fixed(target: f64, t: f64) -> Self {
        Self {
            resolved_target: target,
            resolution_time: t,
        }
    }
}

/// Maximum over the domain of the posterior mean at time `t`.
pub fn max_posterior_mean<R: Rng + ?Sized>(
    gp: &impl Surrogate,
    t: f64,
    optimizer: &OptimizerConfig,
    rng: &mut R,
) -> Result<(Vec<f64>, f64)> {
    let f = |x: &[f64], g: &mut [f64]| {
        let p = gp.moments_with_gradient(x, t);
        g.copy_from_slice(&p.d_mean);
        p.moments.mean
    };
    let cfg = OptimizerConfig {
        n_starts: TARGET_RESOLUTION_STARTS,
        ..optimizer.clone()
    };
    let best = multistart_maximize(&f, gp.dim(), &cfg, rng)?;
    Ok((best.point, best.value))
}

/// Resolves the improvement target of `spec` at time `t`. Kinds without a
/// target resolve to 0.
pub fn resolve_target<R: Rng + ?Sized>(
    spec: &ValueFunctionSpec,
    gp: &FittedGP,
    t: f64,
    optimizer: &OptimizerConfig,
    rng: &mut R,
) -> Result<TargetContext> {
    spec.validate()?;
    let target = match spec.target_policy {
        None => 0.0,
        Some(TargetPolicy::Fixed(xi)) => xi,
        Some(TargetPolicy::BestObserved) => gp.dataset().best_observation().ok_or_else(|| {
            Error::Precondition("best-observed target needs at least one observation".into())
        })?,
        Some(TargetPolicy::PosteriorMeanMax) => {
            if gp.is_empty() {
                gp.mean_offset()
            } else {
                max_posterior_mean(gp, t, optimizer, rng)?.1
            }
        }
    };
    if !target.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "resolved target {target} is not finite"
        )));
    }
    Ok(TargetContext::fixed(target, t))
}

/// Value and partial derivatives with respect to the posterior mean and
/// standard deviation.
pub fn value_and_partials(
    spec: &ValueFunctionSpec,
    ctx: &TargetContext,
    mean: f64,
    std: f64,
) -> (f64, f64, f64) {
    let xi = ctx.resolved_target;
    match spec.kind {
        ValueKind::Identity => (mean, 1.0, 0.0),
        ValueKind::UpperConfidenceBound => {
            let rb = spec.beta.unwrap_or(DEFAULT_BETA).sqrt();
            (mean + rb * std, 1.0, rb)
        }
        ValueKind::ProbabilityOfImprovement => {
            if std > 0.0 {
                let z = (mean - xi) / std;
                let phi = normal::pdf(z);
                (normal::cdf(z), phi / std, -phi * z / std)
            } else if mean > xi {
                (1.0, 0.0, 0.0)
            } else if mean == xi {
                (0.5, 0.0, 0.0)
            } else {
                (0.0, 0.0, 0.0)
            }
        }
        ValueKind::ExpectedImprovement => {
            if std > 0.0 {
                let z = (mean - xi) / std;
                let (cdf, pdf) = (normal::cdf(z), normal::pdf(z));
                let v = ((mean - xi) * cdf + std * pdf).max(0.0);
                (v, cdf, pdf)
            } else if mean >= xi {
                (mean - xi, 1.0, 0.0)
            } else {
                (0.0, 0.0, 0.0)
            }
        }
    }
}

pub fn evaluate_value(
    gp: &impl Surrogate,
    x: &[f64],
    t: f64,
    spec: &ValueFunctionSpec,
    ctx: &TargetContext,
) -> f64 {
    let m = gp.moments(x, t);
    value_and_partials(spec, ctx, m.mean, m.std()).0
}

/// Value and its gradient with respect to `x`.
pub fn value_with_gradient(
    gp: &impl Surrogate,
    x: &[f64],
    t: f64,
    spec: &ValueFunctionSpec,
    ctx: &TargetContext,
) -> (f64, Vec<f64>) {
    let p = gp.moments_with_gradient(x, t);
    let (v, dm, ds) = value_and_partials(spec, ctx, p.moments.mean, p.moments.std());
    let grad = p
        .d_mean
        .iter()
        .zip(&p.d_std)
        .map(|(a, b)| dm * a + ds * b)
        .collect();
    (v, grad)
}

pub fn value_gradient(
    gp: &impl Surrogate,
    x: &[f64],
    t: f64,
    spec: &ValueFunctionSpec,
    ctx: &TargetContext,
) -> Vec<f64> {
    value_with_gradient(gp, x, t, spec, ctx).1
}
