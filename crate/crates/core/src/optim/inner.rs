use rand::Rng;

use super::multistart::{multistart_maximize, OptimizerConfig};
use crate::error::Result;
use crate::gp::Surrogate;
use crate::value::{value_with_gradient, TargetContext, ValueFunctionSpec};

/// Maximizes the value function of `fantasy` over the domain at `horizon`.
/// Returns the maximizer and the maximum.
pub fn inner_value_maximize<S, R>(
    fantasy: &S,
    horizon: f64,
    vspec: &ValueFunctionSpec,
    ctx: &TargetContext,
    config: &OptimizerConfig,
    rng: &mut R,
) -> Result<(Vec<f64>, f64)>
where
    S: Surrogate,
    R: Rng + ?Sized,
{
    let f = |x: &[f64], g: &mut [f64]| {
        let (v, grad) = value_with_gradient(fantasy, x, horizon, vspec, ctx);
        g.copy_from_slice(&grad);
        v
    };
    let best = multistart_maximize(&f, fantasy.dim(), config, rng)?;
    Ok((best.point, best.value))
}
