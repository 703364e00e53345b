mod common;

use lookahead_core::engine::Oracle;
use lookahead_core::testbed::{
    evaluate_oracle, functions, true_maximizer, true_value, ExternalCommand, ExternalProcess,
    OracleInstance, OracleKind, OracleSpec,
};
use rand::Rng;

fn spec(kind: OracleKind) -> OracleSpec {
    OracleSpec::new(kind).with_noise(0.0)
}

#[test]
fn analytic_examples() {
    let mut r = common::rng(1);
    assert_eq!(
        evaluate_oracle(&spec(OracleKind::QuadraticA), &[0.5], 0.0, &mut r).unwrap(),
        1.0
    );
    for x in [0.0, 0.2, 0.9] {
        let v = true_value(&spec(OracleKind::QuadraticC), &[x], 2.5).unwrap();
        assert!((v - (-4.0 * (x - 0.5f64).powi(2) + 1.0)).abs() < 1e-15);
        assert_eq!(
            true_value(&spec(OracleKind::QuadraticD), &[x], 0.0).unwrap(),
            -4.0 * (x - 0.5f64).powi(2)
        );
    }
    let h = true_value(
        &spec(OracleKind::Hartmann3Time),
        &[0.1, 0.55592003, 0.85218259],
        0.0,
    )
    .unwrap();
    assert!((h - 3.8626347486217725).abs() < 1e-14);
}

#[test]
fn griewank_at_time_zero_is_direct_composition() {
    let s = spec(OracleKind::ModifiedGriewank);
    let mut r = common::rng(2);
    for _ in 0..50 {
        let x: [f64; 2] = [r.random_range(-5.0..5.0), r.random_range(-5.0..5.0)];
        let f_ref =
            (x[0] * x[0] + x[1] * x[1]) / 4000.0 - x[0].cos() * (x[1] / 2f64.sqrt()).cos() + 1.0;
        let w = (-((x[0] - 3.0).powi(2) + x[1] * x[1]) / 160.0).exp();
        assert!((true_value(&s, &x, 0.0).unwrap() - f_ref * w).abs() < 1e-14);
    }
}

#[test]
fn griewank_rotation_is_periodic() {
    let s = spec(OracleKind::ModifiedGriewank);
    let mut r = common::rng(3);
    for _ in 0..50 {
        let x: [f64; 2] = [r.random_range(-5.0..5.0), r.random_range(-5.0..5.0)];
        let t: f64 = r.random_range(0.0..4.0);
        let (a, b) = (
            true_value(&s, &x, t).unwrap(),
            true_value(&s, &x, t + 8.0).unwrap(),
        );
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn griewank_maximizer_moves_with_time() {
    let s = spec(OracleKind::ModifiedGriewank);
    let g4 = true_maximizer(&s, 4.0, 1000).unwrap();
    // At T = 4 the rotation is -I, so the peak near z = (-pi, 0) sits near x = (pi, 0).
    assert!(
        (g4.native[0] - std::f64::consts::PI).abs() < 0.05 && g4.native[1].abs() < 0.05,
        "{:?}",
        g4.native
    );
    let g3 = true_maximizer(&s, 3.0, 1000).unwrap();
    assert!(s.domain().native_distance(&g3.point, &g4.point) > 1.0);
}

#[test]
fn quadratic_c_is_continuous_at_three() {
    let s = spec(OracleKind::QuadraticC);
    for x in common::grid(11) {
        let below = true_value(&s, &[x], 3.0 - 1e-9).unwrap();
        let above = true_value(&s, &[x], 3.0 + 1e-9).unwrap();
        assert!((below - above).abs() < 1e-8);
    }
}

#[test]
fn quadratic_d_ground_truth() {
    let s = spec(OracleKind::QuadraticD);
    let g0 = true_maximizer(&s, 0.0, 1000).unwrap();
    assert!((g0.point[0] - 0.5).abs() < 1e-6);
    assert!(g0.value.abs() < 1e-12);
    let g4 = true_maximizer(&s, 4.0, 1000).unwrap();
    let x_star = 0.5 + 4f64.sin() / 4.0;
    assert!((g4.point[0] - x_star).abs() < 1e-5);
    let sn = 4f64.sin();
    assert!((g4.value - (sn - 0.75 * sn * sn)).abs() < 1e-10);
    assert!((g4.value + 1.1864).abs() < 1e-4);
}

#[test]
fn hartmann3_ground_truth() {
    let g = true_maximizer(&spec(OracleKind::Hartmann3Time), 0.0, 1000).unwrap();
    assert!((g.value - 3.86278).abs() < 1e-4, "{}", g.value);
}

#[test]
fn ground_truth_bounds_random_probes() {
    let mut r = common::rng(4);
    for kind in [
        OracleKind::QuadraticA,
        OracleKind::QuadraticB,
        OracleKind::ModifiedGriewank,
        OracleKind::Hartmann3Time,
        OracleKind::Hartmann6Time,
    ] {
        let s = spec(kind);
        let g = true_maximizer(&s, 4.0, 1000).unwrap();
        let domain = s.domain();
        for _ in 0..100_000 {
            let u: Vec<f64> = (0..s.dim()).map(|_| r.random()).collect();
            let v = true_value(&s, &domain.to_native(&u), 4.0).unwrap();
            assert!(v <= g.value + 1e-9, "{:?}: {v} > {}", s.kind, g.value);
        }
    }
}

#[test]
fn noise_statistics() {
    let s = OracleSpec::new(OracleKind::QuadraticA);
    let mut r = common::rng(5);
    let f = true_value(&s, &[0.3], 1.2).unwrap();
    let ys: Vec<f64> = (0..10_000)
        .map(|_| evaluate_oracle(&s, &[0.3], 1.2, &mut r).unwrap())
        .collect();
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let var = ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / (ys.len() - 1) as f64;
    assert!((mean - f).abs() < 4.0 * 1e-3f64.sqrt() / 100.0);
    assert!((var - 1e-3).abs() < 1e-4);
}

#[test]
fn out_of_domain_is_rejected() {
    let mut r = common::rng(6);
    assert!(evaluate_oracle(&spec(OracleKind::QuadraticA), &[1.5], 0.0, &mut r).is_err());
    assert!(true_value(&spec(OracleKind::ModifiedGriewank), &[6.0, 0.0], 0.0).is_err());
    assert!(true_value(&spec(OracleKind::Hartmann3Time), &[0.5, 0.5], 0.0).is_err());
    assert!(true_value(&spec(OracleKind::QuadraticA), &[0.5], -1.0).is_err());
}

#[test]
fn names_parse() {
    for (n, k) in [
        ("quadratic-a", OracleKind::QuadraticA),
        ("hartmann-3d", OracleKind::Hartmann3Time),
        ("griewank", OracleKind::ModifiedGriewank),
    ] {
        assert_eq!(n.parse::<OracleKind>().unwrap(), k);
    }
    assert!("nope".parse::<OracleKind>().is_err());
}

fn python(script: &str) -> ExternalCommand {
    ExternalCommand::new(
        "python3",
        vec!["-u".into(), "-c".into(), script.into()],
        vec![0.0],
        vec![1.0],
    )
}

#[test]
fn external_echo_stub() {
    let cmd = ExternalCommand::new(
        "sh",
        vec!["-c".into(), "while read l; do echo 0.0; done".into()],
        vec![0.0],
        vec![1.0],
    );
    let mut p = ExternalProcess::spawn(&cmd).unwrap();
    assert_eq!(p.query(&[0.3], 1.0).unwrap(), 0.0);
    assert_eq!(p.query(&[0.4], 2.0).unwrap(), 0.0);
}

#[test]
fn external_stub_matches_internal_quadratic() {
    let script = "import sys, math\nfor line in sys.stdin:\n    t, x = map(float, line.split())\n    print(repr(-4*(x-0.5)**2 + math.sin(math.pi*(x+t)) + math.cos(math.pi*(x+t))))\n";
    let spec_ext = OracleSpec::new(OracleKind::ExternalProcess(python(script)));
    let mut oracle = OracleInstance::new(&spec_ext, 0).unwrap();
    let mut r = common::rng(7);
    for _ in 0..20 {
        let x: f64 = r.random();
        let t: f64 = r.random_range(0.0..4.0);
        let a = oracle.evaluate(&[x], t).unwrap();
        let b = true_value(&spec(OracleKind::QuadraticA), &[x], t).unwrap();
        assert!((a - b).abs() < 1e-12, "{a} {b}");
    }
}

#[test]
fn external_failures_are_errors() {
    let mut nan =
        ExternalProcess::spawn(&python("import sys\nfor l in sys.stdin: print('nan')\n")).unwrap();
    assert!(nan.query(&[0.5], 0.0).is_err());
    let mut junk = ExternalProcess::spawn(&python(
        "import sys\nfor l in sys.stdin: print('hello world')\n",
    ))
    .unwrap();
    assert!(junk.query(&[0.5], 0.0).is_err());
    let mut dies = ExternalProcess::spawn(&python("import sys\nsys.exit(3)\n")).unwrap();
    assert!(dies.query(&[0.5], 0.0).is_err());
    let mut slow = python("import sys, time\nfor l in sys.stdin: time.sleep(5)\n");
    slow.timeout_ms = 200;
    let mut p = ExternalProcess::spawn(&slow).unwrap();
    assert!(p.query(&[0.5], 0.0).is_err());
    let missing = ExternalCommand::new("/nonexistent/oracle", vec![], vec![0.0], vec![1.0]);
    assert!(ExternalProcess::spawn(&missing).is_err());
}

#[test]
fn hartmann_drift_is_added() {
    let x = [0.2, 0.4, 0.6];
    let t: f64 = 1.3;
    let v = true_value(&spec(OracleKind::Hartmann3Time), &x, t).unwrap();
    let s = t.sin();
    let drift: f64 = x.iter().map(|xi| 2.0 * s * xi - s * s).sum();
    assert!((v - (functions::hartmann3(&x) + drift)).abs() < 1e-14);
}
