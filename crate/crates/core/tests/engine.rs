mod common;

use lookahead_core::acquisition::AcquisitionKind;
use lookahead_core::engine::{
    run, run_myopic, run_recursive_two_step, BOConfig, Oracle, RunTrace, Schedule, Session,
};
use lookahead_core::gp::{Dataset, Point};
use lookahead_core::harness::{starting_samples, ExperimentConfig};
use lookahead_core::optim::Bounds;
use lookahead_core::testbed::{OracleInstance, OracleKind, OracleSpec};
use lookahead_core::value::ValueFunctionSpec;
use lookahead_core::Error;

/// Replays recorded observations and counts calls.
struct Replay {
    dim: usize,
    values: Vec<f64>,
    calls: Vec<(Vec<f64>, f64)>,
}

impl Oracle for Replay {
    fn dim(&self) -> usize {
        self.dim
    }

    fn evaluate(&mut self, x: &[f64], t: f64) -> lookahead_core::Result<f64> {
        self.calls.push((x.to_vec(), t));
        self.values
            .get(self.calls.len() - 1)
            .copied()
            .ok_or_else(|| Error::Oracle("out of data".into()))
    }
}

fn quadratic_start(n: usize, seed: u64) -> Dataset {
    let mut c = ExperimentConfig::new(OracleKind::QuadraticA, &["EI"], n + 5, n, 1.0, 4.0);
    c.seed = seed;
    starting_samples(&c.oracle_spec(), &c, 0).unwrap()
}

fn small(mut c: BOConfig) -> BOConfig {
    c.acquisition.mc_samples = 8;
    c.optimizer.n_starts = 4;
    c
}

#[test]
fn single_step_mumax_without_data_is_a_uniform_draw() {
    let schedule = Schedule::new(vec![2.0]).unwrap();
    let config = BOConfig::myopic(AcquisitionKind::MuMax).with_seed(3);
    let mut oracle = OracleInstance::new(&OracleSpec::new(OracleKind::QuadraticA), 1).unwrap();
    let trace = run_myopic(&mut oracle, Dataset::new(1), schedule, config.clone()).unwrap();
    assert_eq!(trace.steps.len(), 1);
    // Flat prior mean: the optimizer returns its first start.
    let mut rng = lookahead_core::seed::rng(3);
    let first = config.optimizer.draw_starts(&Bounds::unit(1), &mut rng)[0].clone();
    assert_eq!(trace.steps[0].x, first);
}

#[test]
fn fixed_seed_runs_are_identical() {
    let data = quadratic_start(8, 1);
    let schedule = Schedule::uniform(1.0, 4.0, 5).unwrap();
    let config = small(BOConfig::two_step(ValueFunctionSpec::identity())).with_seed(5);
    let mut config = config;
    config.record_timing = false;
    let spec = OracleSpec::new(OracleKind::QuadraticA);
    let a = run(
        &mut OracleInstance::new(&spec, 2).unwrap(),
        data.clone(),
        schedule.clone(),
        config.clone(),
    )
    .unwrap();
    let b = run(
        &mut OracleInstance::new(&spec, 2).unwrap(),
        data,
        schedule,
        config,
    )
    .unwrap();
    assert_eq!(a, b);
}

#[test]
fn schedule_discipline_and_budget() {
    let data = quadratic_start(6, 2);
    let schedule = Schedule::uniform(1.0, 4.0, 4).unwrap();
    let mut oracle = Replay {
        dim: 1,
        values: vec![0.1, 0.2, 0.3, 0.4],
        calls: Vec::new(),
    };
    let trace = run_myopic(
        &mut oracle,
        data,
        schedule.clone(),
        BOConfig::myopic(AcquisitionKind::UpperConfidenceBound),
    )
    .unwrap();
    assert_eq!(oracle.calls.len(), 4);
    let times: Vec<f64> = oracle.calls.iter().map(|c| c.1).collect();
    assert_eq!(times, schedule.times());
    assert!(trace.is_complete());
    assert_eq!(trace.final_decision().unwrap().1, 0.4);
    assert_eq!(
        trace.steps.iter().map(|s| s.index).collect::<Vec<_>>(),
        vec![7, 8, 9, 10]
    );
}

#[test]
fn lookahead_only_final_step_maximizes_the_value_function() {
    let data = quadratic_start(6, 3);
    let schedule = Schedule::new(vec![4.0]).unwrap();
    let config = small(BOConfig::two_step(ValueFunctionSpec::identity())).with_seed(1);
    let mut session = Session::new(config.clone(), data.clone(), schedule).unwrap();
    let (x, t) = session.ask().unwrap();
    assert_eq!(t, 4.0);
    // The final decision equals the posterior-mean maximizer at T.
    let gp = session.posterior().unwrap();
    let v = session.pending().unwrap().acquisition_value;
    assert!((gp.posterior(&x, 4.0).mean - v).abs() < 1e-12);
    for g in common::grid(1001) {
        assert!(gp.posterior(&[g], 4.0).mean <= v + 1e-9);
    }
}

#[test]
fn oracle_failure_truncates_with_marker() {
    let data = quadratic_start(6, 4);
    let schedule = Schedule::uniform(1.0, 4.0, 3).unwrap();
    let mut oracle = Replay {
        dim: 1,
        values: vec![0.5],
        calls: Vec::new(),
    };
    let trace: RunTrace = run(
        &mut oracle,
        data,
        schedule,
        BOConfig::myopic(AcquisitionKind::ExpectedImprovement),
    )
    .unwrap();
    assert_eq!(trace.steps.len(), 1);
    assert!(trace.failure.as_deref().unwrap().contains("out of data"));
    assert!(trace.final_decision().is_none());
}

#[test]
fn run_kind_checks() {
    let schedule = Schedule::new(vec![1.0]).unwrap();
    let mut o = Replay {
        dim: 1,
        values: vec![0.0],
        calls: Vec::new(),
    };
    assert!(run_myopic(
        &mut o,
        Dataset::new(1),
        schedule.clone(),
        BOConfig::default()
    )
    .is_err());
    assert!(run_recursive_two_step(
        &mut o,
        Dataset::new(1),
        schedule,
        BOConfig::myopic(AcquisitionKind::MuMax)
    )
    .is_err());
}

#[test]
fn protocol_errors() {
    let data = quadratic_start(4, 5);
    let schedule = Schedule::uniform(1.0, 2.0, 2).unwrap();
    let mut s = Session::new(
        BOConfig::myopic(AcquisitionKind::MuMax),
        data.clone(),
        schedule,
    )
    .unwrap();
    assert!(matches!(s.tell(0.3), Err(Error::Protocol(_))));
    s.ask().unwrap();
    assert!(matches!(s.ask(), Err(Error::Protocol(_))));
    assert!(s.tell(f64::NAN).is_err());
    assert!(s.pending().is_some());
    s.tell(0.3).unwrap();
    s.ask().unwrap();
    s.tell(0.1).unwrap();
    assert!(s.is_complete());
    assert!(matches!(s.ask(), Err(Error::Protocol(_))));
    // Schedules must start after the data.
    assert!(Session::new(BOConfig::default(), data, Schedule::new(vec![0.5]).unwrap()).is_err());
}

#[test]
fn ask_tell_replay_equals_run() {
    let data = quadratic_start(8, 6);
    let schedule = Schedule::uniform(1.0, 4.0, 4).unwrap();
    let mut config = small(BOConfig::two_step(ValueFunctionSpec::identity())).with_seed(9);
    config.record_timing = false;
    let spec = OracleSpec::new(OracleKind::QuadraticA);
    let trace = run_recursive_two_step(
        &mut OracleInstance::new(&spec, 4).unwrap(),
        data.clone(),
        schedule.clone(),
        config.clone(),
    )
    .unwrap();
    let mut s = Session::new(config, data, schedule).unwrap();
    for step in &trace.steps {
        let (x, t) = s.ask().unwrap();
        assert_eq!(x, step.x);
        assert_eq!(t, step.t);
        s.tell(step.observation).unwrap();
    }
    assert_eq!(s.trace(), trace);
}

#[test]
fn session_round_trip_preserves_decisions() {
    let data = quadratic_start(8, 7);
    let schedule = Schedule::uniform(1.0, 4.0, 3).unwrap();
    let mut config = small(BOConfig::two_step(ValueFunctionSpec::identity())).with_seed(2);
    config.record_timing = false;
    let mut a = Session::new(config, data, schedule).unwrap();
    a.ask().unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("session.json");
    a.save(&path).unwrap();
    let mut b = Session::load(&path).unwrap();
    assert_eq!(a, b);
    for y in [0.2, -0.1] {
        a.tell(y).unwrap();
        b.tell(y).unwrap();
        assert_eq!(a.ask().unwrap(), b.ask().unwrap());
        let text = b.to_json().unwrap();
        b = Session::from_json(&text).unwrap();
    }
    assert!(Session::from_json("{\"format\": \"other\"}").is_err());
}

#[test]
fn quadratic_d_ucb_tracks_the_moving_maximizer() {
    let mut c = ExperimentConfig::new(OracleKind::QuadraticD, &["UCB"], 45, 15, 1.0, 4.0);
    c.seed = 3;
    let spec = c.oracle_spec();
    let data = starting_samples(&spec, &c, 0).unwrap();
    let schedule = Schedule::uniform(1.0, 4.0, 30).unwrap();
    let mut oracle = OracleInstance::new(&spec, 8).unwrap();
    let trace = run_myopic(
        &mut oracle,
        data,
        schedule,
        BOConfig::myopic(AcquisitionKind::UpperConfidenceBound),
    )
    .unwrap();
    let late = &trace.steps[15..];
    let close = late
        .iter()
        .filter(|s| (s.x[0] - (0.5 + s.t.sin() / 4.0)).abs() < 0.1)
        .count();
    assert!(
        close as f64 >= 0.7 * late.len() as f64,
        "{close} of {}",
        late.len()
    );
}

#[test]
fn starting_samples_share_times_and_points() {
    let c = ExperimentConfig::new(OracleKind::QuadraticA, &["EI"], 20, 5, 2.0, 4.0);
    let a = starting_samples(&c.oracle_spec(), &c, 1).unwrap();
    let b = starting_samples(&c.oracle_spec(), &c, 1).unwrap();
    assert_eq!(a, b);
    let times: Vec<f64> = a.records().iter().map(|r| r.time).collect();
    assert_eq!(times, vec![0.0, 0.5, 1.0, 1.5, 2.0]);
    let _ = Point::new(vec![0.0]).unwrap();
}
