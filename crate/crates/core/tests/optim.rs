mod common;

use common::*;
use lookahead_core::acquisition::{
    two_step_acquisition_mc, AcquisitionKind, AcquisitionSpec, CommonRandomNumbers,
    TwoStepLookahead,
};
use lookahead_core::gp::{Dataset, FittedGP, Hyperparameters, Point, Surrogate};
use lookahead_core::optim::{
    inner_value_maximize, multistart_maximize, one_shot_maximize, subgradient_probe, Bounds,
    OneShotObjective, OptimizerConfig, StartDistribution,
};
use lookahead_core::value::{TargetContext, ValueFunctionSpec};
use proptest::prelude::*;
use rand::Rng;

#[test]
fn quadratic_argmax() {
    let f = |x: &[f64], g: &mut [f64]| {
        g[0] = -2.0 * (x[0] - 0.3);
        -(x[0] - 0.3).powi(2)
    };
    let best = multistart_maximize(&f, 1, &OptimizerConfig::default(), &mut rng(1)).unwrap();
    assert!((best.point[0] - 0.3).abs() < 1e-6);
}

#[test]
fn multimodal_matches_dense_grid() {
    let val = |x: f64| (5.0 * std::f64::consts::PI * x).sin() * x;
    let f = |x: &[f64], g: &mut [f64]| {
        let p = 5.0 * std::f64::consts::PI;
        g[0] = (p * x[0]).sin() + p * x[0] * (p * x[0]).cos();
        val(x[0])
    };
    let best = multistart_maximize(&f, 1, &OptimizerConfig::default(), &mut rng(2)).unwrap();
    let gx = grid(10_000)
        .into_iter()
        .max_by(|a, b| val(*a).total_cmp(&val(*b)))
        .unwrap();
    assert!(
        (best.point[0] - gx).abs() < 1e-3,
        "{} vs {gx}",
        best.point[0]
    );
}

#[test]
fn constant_objective_returns_first_start() {
    let f = |_: &[f64], g: &mut [f64]| {
        g.iter_mut().for_each(|v| *v = 0.0);
        1.0
    };
    let cfg = OptimizerConfig::default();
    let mut a = rng(3);
    let starts = cfg.draw_starts(&Bounds::unit(2), &mut a);
    let best = multistart_maximize(&f, 2, &cfg, &mut rng(3)).unwrap();
    assert_eq!(best.point, starts[0]);
    assert_eq!(best.start_index, 0);
}

#[test]
fn constant_objective_samples_are_uniform() {
    let f = |_: &[f64], g: &mut [f64]| {
        g[0] = 0.0;
        0.0
    };
    let mut r = rng(4);
    let picks: Vec<f64> = (0..2000)
        .map(|_| {
            multistart_maximize(&f, 1, &OptimizerConfig::default(), &mut r)
                .unwrap()
                .point[0]
        })
        .collect();
    let mean = picks.iter().sum::<f64>() / picks.len() as f64;
    let below = picks.iter().filter(|&&p| p < 0.25).count() as f64 / picks.len() as f64;
    assert!((mean - 0.5).abs() < 4.0 * (1.0 / 12.0f64).sqrt() / (2000f64).sqrt());
    assert!((below - 0.25).abs() < 0.04);
}

#[test]
fn non_finite_starts_are_discarded() {
    let f = |x: &[f64], g: &mut [f64]| {
        g[0] = 0.0;
        if x[0] < 0.5 {
            f64::NAN
        } else {
            x[0]
        }
    };
    let cfg = OptimizerConfig {
        start_distribution: StartDistribution::Points(vec![vec![0.1], vec![0.7]]),
        n_starts: 2,
        ..OptimizerConfig::default()
    };
    let best = multistart_maximize(&f, 1, &cfg, &mut rng(5)).unwrap();
    assert_eq!(best.start_index, 1);
    let all_bad = |_: &[f64], _: &mut [f64]| f64::NAN;
    assert!(multistart_maximize(&all_bad, 1, &cfg, &mut rng(5)).is_err());
}

#[test]
fn determinism_under_fixed_seed() {
    let mut r = rng(6);
    let gp = random_gp(&mut r, 2, 10);
    let t = gp.dataset().last_time().unwrap() + 0.1;
    let f = |x: &[f64], g: &mut [f64]| {
        let p = gp.moments_with_gradient(x, t);
        g.copy_from_slice(&p.d_mean);
        p.moments.mean
    };
    let a = multistart_maximize(&f, 2, &OptimizerConfig::default(), &mut rng(7)).unwrap();
    let b = multistart_maximize(&f, 2, &OptimizerConfig::default(), &mut rng(7)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn inner_maximize_matches_grid_and_ucb_zero_degenerates() {
    let mut r = rng(8);
    let gp = random_gp(&mut r, 1, 8);
    let t = gp.dataset().last_time().unwrap() + 0.3;
    let id = ValueFunctionSpec::identity();
    let ctx = TargetContext::fixed(0.0, t);
    let (x, v) =
        inner_value_maximize(&gp, t, &id, &ctx, &OptimizerConfig::default(), &mut rng(9)).unwrap();
    let gx = grid(10_001)
        .into_iter()
        .max_by(|a, b| {
            gp.posterior(&[*a], t)
                .mean
                .total_cmp(&gp.posterior(&[*b], t).mean)
        })
        .unwrap();
    assert!((x[0] - gx).abs() < 1e-3);
    assert!((v - gp.posterior(&x, t).mean).abs() < 1e-15);
    let ucb0 = ValueFunctionSpec::upper_confidence_bound(0.0);
    let (x0, _) = inner_value_maximize(
        &gp,
        t,
        &ucb0,
        &ctx,
        &OptimizerConfig::default(),
        &mut rng(9),
    )
    .unwrap();
    assert_eq!(x, x0);
}

#[test]
fn inner_maximize_on_a_far_fantasy_is_flat() {
    let gp = FittedGP::new(Dataset::new(1), Hyperparameters::default()).unwrap();
    let ctx = TargetContext::fixed(0.0, 50.0);
    let cfg = OptimizerConfig::default();
    let model = lookahead_core::fantasy::FantasyModel::new(&gp, &[0.4], 0.0, true);
    let sample = model.sample(1.3);
    let (x, v) = inner_value_maximize(
        &sample,
        50.0,
        &ValueFunctionSpec::identity(),
        &ctx,
        &cfg,
        &mut rng(10),
    )
    .unwrap();
    let first = cfg.draw_starts(&Bounds::unit(1), &mut rng(10))[0].clone();
    assert!(v.abs() < 1e-12);
    assert_eq!(x, first);
}

fn spec_with(n: usize, r: &mut impl Rng) -> AcquisitionSpec {
    AcquisitionSpec::new(AcquisitionKind::TwoStepLookahead(
        ValueFunctionSpec::identity(),
    ))
    .with_base_samples(CommonRandomNumbers::draw(n, r).gammas)
}

#[test]
fn one_shot_single_point_domain_reduces_to_mean() {
    let mut r = rng(11);
    let gp = random_gp(&mut r, 1, 6);
    let t = gp.dataset().last_time().unwrap() + 0.2;
    let x0 = [0.42];
    let cfg = OptimizerConfig {
        bounds: Some(Bounds::point(&x0)),
        n_starts: 2,
        ..OptimizerConfig::default()
    };
    let spec = spec_with(1, &mut r);
    let res = one_shot_maximize(
        &gp,
        t,
        t + 0.3,
        &ValueFunctionSpec::identity(),
        &spec,
        &cfg,
        &mut r,
    )
    .unwrap();
    assert_eq!(res.x_next, x0.to_vec());
    let fantasy = lookahead_core::fantasy::FantasyModel::new(&gp, &x0, t, true);
    let expect = fantasy
        .moments(&x0, t + 0.3, spec.base_samples.as_ref().unwrap()[0])
        .mean;
    assert!((res.value - expect).abs() < 1e-12);
}

#[test]
fn one_shot_objective_gradient_matches_fd() {
    let mut r = rng(12);
    let gp = random_gp(&mut r, 2, 8);
    let t = gp.dataset().last_time().unwrap() + 0.2;
    for v in [
        ValueFunctionSpec::identity(),
        ValueFunctionSpec::upper_confidence_bound(2.0),
    ] {
        let crn = CommonRandomNumbers::draw(4, &mut r);
        let acq = TwoStepLookahead::with_samples(
            &gp,
            t,
            t + 0.5,
            &v,
            TargetContext::fixed(0.0, t + 0.5),
            crn,
            true,
            &OptimizerConfig::default(),
        )
        .unwrap();
        let obj = OneShotObjective::new(&acq, &gp, t, t + 0.5);
        let z: Vec<f64> = (0..obj.joint_dim())
            .map(|_| 0.1 + 0.8 * r.random::<f64>())
            .collect();
        let mut g = vec![0.0; z.len()];
        obj.evaluate(&z, &mut g);
        let fd = fd_gradient(|p| obj.evaluate(p, &mut vec![0.0; p.len()]), &z, 1e-6);
        assert!(rel_err(&g, &fd) < 1e-5, "{g:?} {fd:?}");
    }
}

#[test]
fn one_shot_matches_grid_of_mc_estimate() {
    let mut r = rng(13);
    let mut data = Dataset::new(1);
    for (i, x) in [0.1, 0.5, 0.9, 0.3, 0.7].iter().enumerate() {
        let t = 0.2 * i as f64;
        data.push(Point::new(vec![*x]).unwrap(), t, (6.0 * x).sin() + 0.3 * t)
            .unwrap();
    }
    let gp = FittedGP::new(data, Hyperparameters::new(0.15, 1.0, 1e-3).unwrap()).unwrap();
    let t = 1.0;
    let horizon = 1.3;
    let spec = spec_with(8, &mut r);
    let cfg = OptimizerConfig {
        n_starts: 16,
        gradient_tolerance: 1e-9,
        max_iterations: 300,
        ..OptimizerConfig::default()
    };
    let res = one_shot_maximize(
        &gp,
        t,
        horizon,
        &ValueFunctionSpec::identity(),
        &spec,
        &cfg,
        &mut rng(14),
    )
    .unwrap();
    let inner = OptimizerConfig {
        n_starts: 8,
        gradient_tolerance: 1e-9,
        ..OptimizerConfig::default()
    };
    let acq = TwoStepLookahead::new(
        &gp,
        t,
        horizon,
        &ValueFunctionSpec::identity(),
        &spec,
        &inner,
        &mut r,
    )
    .unwrap();
    let g = grid(201);
    let vals: Vec<f64> = g.iter().map(|&x| acq.value(&[x]).unwrap().0).collect();
    let (imax, vmax) = vals
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    assert!(
        (res.x_next[0] - g[imax]).abs() < 0.05,
        "{} vs {}",
        res.x_next[0],
        g[imax]
    );
    // The joint optimum is at least the grid optimum of the nested estimate, up to inner-solve error.
    assert!(res.value >= vmax - 1e-6, "{} vs {}", res.value, vmax);
    let fresh_spec = AcquisitionSpec::new(AcquisitionKind::TwoStepLookahead(
        ValueFunctionSpec::identity(),
    ))
    .with_mc_samples(256);
    let (fresh, batch) = two_step_acquisition_mc(
        &gp,
        &res.x_next,
        t,
        horizon,
        &ValueFunctionSpec::identity(),
        &fresh_spec,
        &inner,
        &mut r,
    )
    .unwrap();
    // Both estimates are noisy: combine the fresh standard error with the
    // one-shot estimate's (same spread, 8 draws).
    let sd = batch.std_error() * 256f64.sqrt();
    let se = (batch.std_error().powi(2) + sd * sd / 8.0).sqrt();
    assert!(
        (res.value - fresh).abs() <= 3.0 * se,
        "{} vs {} (se {se})",
        res.value,
        fresh
    );
}

#[test]
fn one_shot_far_horizon_returns_first_start() {
    let mut r = rng(15);
    let gp = random_gp(&mut r, 1, 6);
    let t = gp.dataset().last_time().unwrap() + 0.2;
    let horizon = t + 40.0 * gp.hyperparameters().theta_t;
    let cfg = OptimizerConfig::default();
    let spec = spec_with(8, &mut r);
    let mut a = rng(16);
    let res = one_shot_maximize(
        &gp,
        t,
        horizon,
        &ValueFunctionSpec::identity(),
        &spec,
        &cfg,
        &mut a,
    )
    .unwrap();
    // Replay the draws the solver makes before sampling outer starts.
    let mut b = rng(16);
    let _ = CommonRandomNumbers::from_spec(&spec, &mut b).unwrap();
    let _ = lookahead_core::value::resolve_target(
        &ValueFunctionSpec::identity(),
        &gp,
        horizon,
        &cfg,
        &mut b,
    )
    .unwrap();
    let starts = cfg.draw_starts(&Bounds::unit(1), &mut b);
    assert_eq!(res.x_next, starts[0]);
}

#[test]
fn subgradient_conventions() {
    use lookahead_core::optim::Dual;
    assert_eq!(
        subgradient_probe(|x: &[Dual]| x[0].abs().sin(), &[0.0]),
        vec![1.0]
    );
    assert_eq!(
        subgradient_probe(|x: &[Dual]| x[0].max(x[0].powi(2)), &[1.0]),
        vec![1.0]
    );
    assert_eq!(
        subgradient_probe(|x: &[Dual]| x[0].max(x[0].powi(2)), &[2.0]),
        vec![4.0]
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn returned_points_stay_in_bounds(c in -1.0f64..2.0, seed in 0u64..1000) {
        let f = |x: &[f64], g: &mut [f64]| {
            g[0] = -2.0 * (x[0] - c);
            g[1] = 1.0;
            -(x[0] - c).powi(2) + x[1]
        };
        let best = multistart_maximize(&f, 2, &OptimizerConfig::default(), &mut rng(seed)).unwrap();
        prop_assert!(best.point.iter().all(|v| (0.0..=1.0).contains(v)));
        prop_assert_eq!(best.point[1], 1.0);
        prop_assert!((best.point[0] - c.clamp(0.0, 1.0)).abs() < 1e-6);
    }
}
