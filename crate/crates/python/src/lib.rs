//! Python module `lookahead_bo`: GP surrogate, lookahead acquisitions,
//! the ask/tell session and the synthetic oracles.

use lookahead_core::acquisition::{self, AcquisitionKind, AcquisitionSpec};
use lookahead_core::engine::{Schedule, Session as CoreSession};
use lookahead_core::gp::{
    fit_hyperparameters, Dataset, FitConfig, FittedGP, Hyperparameters, Point,
};
use lookahead_core::harness::{self, EngineOptions, ExperimentConfig};
use lookahead_core::optim::{one_shot_maximize, OptimizerConfig};
use lookahead_core::testbed::{OracleKind, OracleSpec};
use lookahead_core::value::{TargetPolicy, ValueFunctionSpec};
use lookahead_core::{seed, testbed};
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(lookahead_bo, LookaheadError, PyException);

fn err(e: lookahead_core::Error) -> PyErr {
    LookaheadError::new_err(e.to_string())
}

fn value_spec(name: &str, beta: f64) -> PyResult<ValueFunctionSpec> {
    Ok(match name {
        "identity" | "EY" => ValueFunctionSpec::identity(),
        "EI" => ValueFunctionSpec::expected_improvement(TargetPolicy::PosteriorMeanMax),
        "PI" => ValueFunctionSpec::probability_of_improvement(TargetPolicy::PosteriorMeanMax),
        "UCB" => ValueFunctionSpec::upper_confidence_bound(beta),
        other => {
            return Err(LookaheadError::new_err(format!(
                "unknown value function {other:?}"
            )))
        }
    })
}

fn oracle_kind(name: &str) -> PyResult<OracleKind> {
    name.parse().map_err(err)
}

fn dataset(times: Vec<f64>, xs: Vec<Vec<f64>>, ys: Vec<f64>) -> PyResult<Dataset> {
    if times.len() != xs.len() || xs.len() != ys.len() {
        return Err(LookaheadError::new_err(
            "times, xs and ys must have equal length",
        ));
    }
    let dim = xs.first().map_or(0, Vec::len);
    if dim == 0 {
        return Err(LookaheadError::new_err(
            "at least one observation with a non-empty point is required",
        ));
    }
    let mut data = Dataset::new(dim);
    for ((t, x), y) in times.into_iter().zip(xs).zip(ys) {
        data.push(Point::new(x).map_err(err)?, t, y).map_err(err)?;
    }
    Ok(data)
}

/// Gaussian process over (x, t) with the product squared-exponential kernel.
#[pyclass(name = "GaussianProcess", module = "lookahead_bo")]
struct GaussianProcess {
    inner: FittedGP,
}

#[pymethods]
impl GaussianProcess {
    #[new]
    #[pyo3(signature = (times, xs, ys, theta_x = 0.2, theta_t = 1.0, noise_variance = 1e-3, output_scale = 1.0))]
    fn new(
        times: Vec<f64>,
        xs: Vec<Vec<f64>>,
        ys: Vec<f64>,
        theta_x: f64,
        theta_t: f64,
        noise_variance: f64,
        output_scale: f64,
    ) -> PyResult<Self> {
        let hyp = Hyperparameters::new(theta_x, theta_t, noise_variance)
            .and_then(|h| h.with_output_scale(output_scale))
            .map_err(err)?;
        let inner = FittedGP::new(dataset(times, xs, ys)?, hyp).map_err(err)?;
        Ok(Self { inner })
    }

    /// Fits hyperparameters by maximum marginal likelihood.
    #[staticmethod]
    #[pyo3(signature = (times, xs, ys, seed = 0))]
    fn fit(times: Vec<f64>, xs: Vec<Vec<f64>>, ys: Vec<f64>, seed: u64) -> PyResult<Self> {
        let data = dataset(times, xs, ys)?;
        let fit = fit_hyperparameters(&data, &FitConfig::default(), None, &mut seed::rng(seed))
            .map_err(err)?;
        let inner = FittedGP::new(data, fit.hyperparameters).map_err(err)?;
        Ok(Self { inner })
    }

    /// Posterior mean and variance of f(x, t).
    fn posterior(&self, x: Vec<f64>, t: f64) -> PyResult<(f64, f64)> {
        self.check_dim(&x)?;
        let p = self.inner.posterior(&x, t);
        Ok((p.mean, p.variance))
    }

    /// The model with one more observation, hyperparameters unchanged.
    fn condition(&self, x: Vec<f64>, t: f64, y: f64) -> PyResult<Self> {
        let inner = self
            .inner
            .condition(&Point::new(x).map_err(err)?, t, y)
            .map_err(err)?;
        Ok(Self { inner })
    }

    fn hyperparameters<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let h = self.inner.hyperparameters();
        let d = PyDict::new(py);
        d.set_item("theta_x", h.theta_x)?;
        d.set_item("theta_t", h.theta_t)?;
        d.set_item("noise_variance", h.noise_variance)?;
        d.set_item("output_scale", h.output_scale)?;
        Ok(d)
    }

    fn log_marginal_likelihood(&self) -> f64 {
        self.inner.log_marginal_likelihood()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dataset().dim()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        let h = self.inner.hyperparameters();
        format!(
            "GaussianProcess(n={}, theta_x={:.4}, theta_t={:.4}, noise_variance={:.3e}, output_scale={:.4})",
            self.inner.len(),
            h.theta_x,
            h.theta_t,
            h.noise_variance,
            h.output_scale
        )
    }
}

impl GaussianProcess {
    fn check_dim(&self, x: &[f64]) -> PyResult<()> {
        if x.len() != self.dim() {
            return Err(LookaheadError::new_err(format!(
                "expected {} coordinates, got {}",
                self.dim(),
                x.len()
            )));
        }
        Ok(())
    }
}

/// Monte Carlo two-step lookahead value at `x`; returns (estimate, standard error).
#[pyfunction]
#[pyo3(signature = (gp, x, t_next, horizon, value = "identity", mc_samples = 32, beta = 2.0, seed = 0))]
#[allow(clippy::too_many_arguments)]
fn two_step_acquisition(
    gp: &GaussianProcess,
    x: Vec<f64>,
    t_next: f64,
    horizon: f64,
    value: &str,
    mc_samples: usize,
    beta: f64,
    seed: u64,
) -> PyResult<(f64, f64)> {
    gp.check_dim(&x)?;
    let vspec = value_spec(value, beta)?;
    let spec =
        AcquisitionSpec::new(AcquisitionKind::TwoStepLookahead(vspec)).with_mc_samples(mc_samples);
    let mut rng = seed::rng(seed);
    let (v, batch) = acquisition::two_step_acquisition_mc(
        &gp.inner,
        &x,
        t_next,
        horizon,
        &vspec,
        &spec,
        &inner(),
        &mut rng,
    )
    .map_err(err)?;
    Ok((v, batch.std_error()))
}

/// Knowledge gradient at `x` (lookahead identity value minus the current maximum).
#[pyfunction]
#[pyo3(signature = (gp, x, t_next, horizon, mc_samples = 32, seed = 0))]
fn knowledge_gradient(
    gp: &GaussianProcess,
    x: Vec<f64>,
    t_next: f64,
    horizon: f64,
    mc_samples: usize,
    seed: u64,
) -> PyResult<f64> {
    gp.check_dim(&x)?;
    let spec = AcquisitionSpec::new(AcquisitionKind::KnowledgeGradient).with_mc_samples(mc_samples);
    acquisition::knowledge_gradient(
        &gp.inner,
        &x,
        t_next,
        horizon,
        &spec,
        &inner(),
        &mut seed::rng(seed),
    )
    .map_err(err)
}

/// Maximizes the two-step lookahead by one-shot optimization; returns (x_next, objective).
#[pyfunction]
#[pyo3(signature = (gp, t_next, horizon, value = "identity", mc_samples = 32, beta = 2.0, seed = 0))]
fn maximize_two_step(
    gp: &GaussianProcess,
    t_next: f64,
    horizon: f64,
    value: &str,
    mc_samples: usize,
    beta: f64,
    seed: u64,
) -> PyResult<(Vec<f64>, f64)> {
    let vspec = value_spec(value, beta)?;
    let spec =
        AcquisitionSpec::new(AcquisitionKind::TwoStepLookahead(vspec)).with_mc_samples(mc_samples);
    let r = one_shot_maximize(
        &gp.inner,
        t_next,
        horizon,
        &vspec,
        &spec,
        &OptimizerConfig::default(),
        &mut seed::rng(seed),
    )
    .map_err(err)?;
    Ok((r.x_next, r.value))
}

fn inner() -> OptimizerConfig {
    OptimizerConfig {
        n_starts: 4,
        ..OptimizerConfig::default()
    }
}

/// Ask/tell optimization session over `[0, 1]^dim`.
#[pyclass(name = "Session", module = "lookahead_bo")]
struct Session {
    inner: CoreSession,
}

#[pymethods]
impl Session {
    #[new]
    #[pyo3(signature = (strategy, horizon, decisions, dim = None, start = None, times = None, xs = None, ys = None, mc_samples = None, seed = 0))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        strategy: &str,
        horizon: f64,
        decisions: usize,
        dim: Option<usize>,
        start: Option<f64>,
        times: Option<Vec<f64>>,
        xs: Option<Vec<Vec<f64>>>,
        ys: Option<Vec<f64>>,
        mc_samples: Option<usize>,
        seed: u64,
    ) -> PyResult<Self> {
        let data = match (times, xs, ys, dim) {
            (Some(t), Some(x), Some(y), _) => dataset(t, x, y)?,
            (None, None, None, Some(d)) if d > 0 => Dataset::new(d),
            _ => {
                return Err(LookaheadError::new_err(
                    "pass either times/xs/ys or a positive dim",
                ))
            }
        };
        let start = start.or(data.last_time()).unwrap_or(0.0);
        let schedule = Schedule::uniform(start, horizon, decisions).map_err(err)?;
        let mut engine = EngineOptions::default();
        if let Some(n) = mc_samples {
            engine.mc_samples = n;
        }
        let mut config = engine.strategy_config(strategy, false).map_err(err)?;
        config.seed = seed;
        Ok(Self {
            inner: CoreSession::new(config, data, schedule).map_err(err)?,
        })
    }

    /// Next decision as (x, t).
    fn ask(&mut self, py: Python<'_>) -> PyResult<(Vec<f64>, f64)> {
        let inner = &mut self.inner;
        py.detach(|| inner.ask()).map_err(err)
    }

    fn tell(&mut self, py: Python<'_>, y: f64) -> PyResult<()> {
        let inner = &mut self.inner;
        py.detach(|| inner.tell(y)).map_err(err)
    }

    fn is_complete(&self) -> bool {
        self.inner.is_complete()
    }

    #[getter]
    fn position(&self) -> usize {
        self.inner.position()
    }

    /// Final decision and its observation once the schedule is exhausted.
    fn final_decision(&self) -> Option<(Vec<f64>, f64)> {
        self.inner
            .trace()
            .final_decision()
            .map(|(x, y)| (x.to_vec(), y))
    }

    fn trace_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner.trace())
            .map_err(|e| LookaheadError::new_err(e.to_string()))
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: CoreSession::from_json(text).map_err(err)?,
        })
    }
}

/// Noise-free oracle value at native coordinates.
#[pyfunction]
fn true_value(oracle: &str, x: Vec<f64>, t: f64) -> PyResult<f64> {
    testbed::true_value(&OracleSpec::new(oracle_kind(oracle)?), &x, t).map_err(err)
}

/// Noisy oracle evaluation at native coordinates.
#[pyfunction]
#[pyo3(signature = (oracle, x, t, seed = 0))]
fn evaluate_oracle(oracle: &str, x: Vec<f64>, t: f64, seed: u64) -> PyResult<f64> {
    testbed::evaluate_oracle(
        &OracleSpec::new(oracle_kind(oracle)?),
        &x,
        t,
        &mut seed::rng(seed),
    )
    .map_err(err)
}

/// Runs an experiment from a TOML config and returns the summary as JSON.
/// Files are written when `output_dir` is given.
#[pyfunction]
#[pyo3(signature = (config_toml, output_dir = None))]
fn run_experiment(
    py: Python<'_>,
    config_toml: &str,
    output_dir: Option<std::path::PathBuf>,
) -> PyResult<String> {
    let config = ExperimentConfig::from_toml_str(config_toml).map_err(err)?;
    let result = py
        .detach(|| match &output_dir {
            Some(dir) => harness::run_and_emit(&config, dir),
            None => harness::run_experiment(&config),
        })
        .map_err(err)?;
    serde_json::to_string(&harness::summarize(&result))
        .map_err(|e| LookaheadError::new_err(e.to_string()))
}

#[pymodule]
fn lookahead_bo(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("LookaheadError", m.py().get_type::<LookaheadError>())?;
    m.add("STRATEGIES", harness::STRATEGIES.to_vec())?;
    m.add_class::<GaussianProcess>()?;
    m.add_class::<Session>()?;
    m.add_function(wrap_pyfunction!(two_step_acquisition, m)?)?;
    m.add_function(wrap_pyfunction!(knowledge_gradient, m)?)?;
    m.add_function(wrap_pyfunction!(maximize_two_step, m)?)?;
    m.add_function(wrap_pyfunction!(true_value, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_oracle, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
