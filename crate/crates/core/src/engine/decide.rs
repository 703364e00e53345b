use rand::Rng;

use super::config::{BOConfig, TwoStepMethod};
use crate::acquisition::{AcquisitionKind, MyopicAcquisition, TwoStepLookahead};
use crate::error::Result;
use crate::gp::FittedGP;
use crate::optim::{multistart_maximize, one_shot_maximize, OptimizerConfig};
use crate::value::{resolve_target, value_with_gradient, ValueFunctionSpec};

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Decision {
    pub x: Vec<f64>,
    pub acquisition_value: f64,
}

/// Next decision at `t`. `is_final` marks the horizon step, where lookahead
/// strategies maximize their value function instead of the acquisition.
pub(crate) fn decide<R: Rng + ?Sized>(
    config: &BOConfig,
    gp: &FittedGP,
    t: f64,
    horizon: f64,
    is_final: bool,
    rng: &mut R,
) -> Result<Decision> {
    let dim = gp.dataset().dim();
    let kind = &config.acquisition.kind;
    if *kind == AcquisitionKind::Random {
        let x = config.optimizer.bounds_for(dim)?.sample_uniform(rng);
        return Ok(Decision {
            x,
            acquisition_value: 0.0,
        });
    }
    if kind.is_myopic() {
        let acq = MyopicAcquisition::new(gp, t, &config.acquisition, &config.optimizer, rng)?;
        let f = |x: &[f64], g: &mut [f64]| {
            let (v, grad) = acq.value_with_gradient(x);
            g.copy_from_slice(&grad);
            v
        };
        let best = multistart_maximize(&f, dim, &config.optimizer, rng)?;
        return Ok(Decision {
            x: best.point,
            acquisition_value: best.value,
        });
    }
    let vspec = lookahead_value_spec(config);
    if is_final {
        return maximize_value(gp, horizon, &vspec, config, rng);
    }
    match config.method {
        TwoStepMethod::OneShot => {
            let r = one_shot_maximize(
                gp,
                t,
                horizon,
                &vspec,
                &config.acquisition,
                &config.optimizer,
                rng,
            )?;
            Ok(Decision {
                x: r.x_next,
                acquisition_value: r.value,
            })
        }
        TwoStepMethod::MonteCarlo => {
            let acq = TwoStepLookahead::new(
                gp,
                t,
                horizon,
                &vspec,
                &config.acquisition,
                &config.inner_optimizer,
                rng,
            )?;
            let f = |x: &[f64], g: &mut [f64]| match acq.value_and_gradient(x) {
                Ok((v, grad, _)) => {
                    g.copy_from_slice(&grad);
                    v
                }
                Err(e) => {
                    log::warn!("two-step evaluation failed at {x:?}: {e}");
                    f64::NEG_INFINITY
                }
            };
            // Each evaluation solves inner problems, so no raw-sample prepass.
            let outer = OptimizerConfig {
                raw_samples: 0,
                ..config.optimizer.clone()
            };
            let best = multistart_maximize(&f, dim, &outer, rng)?;
            Ok(Decision {
                x: best.point,
                acquisition_value: best.value,
            })
        }
    }
}

fn lookahead_value_spec(config: &BOConfig) -> ValueFunctionSpec {
    match &config.acquisition.kind {
        AcquisitionKind::TwoStepLookahead(v) => *v,
        _ => ValueFunctionSpec::identity(),
    }
}

fn maximize_value<R: Rng + ?Sized>(
    gp: &FittedGP,
    horizon: f64,
    vspec: &ValueFunctionSpec,
    config: &BOConfig,
    rng: &mut R,
) -> Result<Decision> {
    let ctx = resolve_target(vspec, gp, horizon, &config.optimizer, rng)?;
    let f = |x: &[f64], g: &mut [f64]| {
        let (v, grad) = value_with_gradient(gp, x, horizon, vspec, &ctx);
        g.copy_from_slice(&grad);
        v
    };
    let best = multistart_maximize(&f, gp.dataset().dim(), &config.optimizer, rng)?;
    Ok(Decision {
        x: best.point,
        acquisition_value: best.value,
    })
}
