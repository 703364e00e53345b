//! Time-dependent synthetic oracles, ground truth, and the external-process
//! oracle adapter.
//!
//! Oracles are defined on native coordinates; the optimizer works on
//! `[0, 1]^d` through the affine map in [`Domain`].

mod external;
pub mod functions;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

pub use external::{ExternalCommand, ExternalProcess};

use crate::engine::Oracle;
use crate::error::{Error, Result};
use crate::optim::{local_maximize, Bounds, LocalConfig};
use crate::seed;

pub const DEFAULT_NOISE_VARIANCE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleKind {
    QuadraticA,
    QuadraticB,
    QuadraticC,
    QuadraticD,
    ModifiedGriewank,
    Hartmann3Time,
    Hartmann6Time,
    ExternalProcess(ExternalCommand),
}

impl OracleKind {
    pub fn name(&self) -> &'static str {
        match self {
            OracleKind::QuadraticA => "quadratic-a",
            OracleKind::QuadraticB => "quadratic-b",
            OracleKind::QuadraticC => "quadratic-c",
            OracleKind::QuadraticD => "quadratic-d",
            OracleKind::ModifiedGriewank => "modified-griewank",
            OracleKind::Hartmann3Time => "hartmann3-time",
            OracleKind::Hartmann6Time => "hartmann6-time",
            OracleKind::ExternalProcess(_) => "external-process",
        }
    }
}

impl FromStr for OracleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "quadratic-a" => OracleKind::QuadraticA,
            "quadratic-b" => OracleKind::QuadraticB,
            "quadratic-c" => OracleKind::QuadraticC,
            "quadratic-d" => OracleKind::QuadraticD,
            "modified-griewank" | "griewank" => OracleKind::ModifiedGriewank,
            "hartmann3-time" | "hartmann-3d" | "hartmann3" => OracleKind::Hartmann3Time,
            "hartmann6-time" | "hartmann-6d" | "hartmann6" => OracleKind::Hartmann6Time,
            other => return Err(Error::InvalidArgument(format!("unknown oracle {other:?}"))),
        })
    }
}

impl fmt::Display for OracleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Native box and its affine map to the unit cube.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Domain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty()
            || lower.len() != upper.len()
            || lower.iter().zip(&upper).any(|(l, u)| !(u > l))
        {
            return Err(Error::InvalidArgument(format!(
                "invalid domain {lower:?} .. {upper:?}"
            )));
        }
        Ok(Self { lower, upper })
    }

    pub fn unit(dim: usize) -> Self {
        Self {
            lower: vec![0.0; dim],
            upper: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn to_native(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(v, (l, h))| (l + (h - l) * v).clamp(*l, *h))
            .collect()
    }

    pub fn to_normalized(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(v, (l, h))| (v - l) / (h - l))
            .collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, h))| v >= l && v <= h)
    }

    /// Euclidean distance in native units between two normalized points.
    pub fn native_distance(&self, a: &[f64], b: &[f64]) -> f64 {
        let (a, b) = (self.to_native(a), self.to_native(b));
        a.iter()
            .zip(&b)
            .map(|(p, q)| (p - q).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSpec {
    pub kind: OracleKind,
    #[serde(default = "default_noise")]
    pub noise_variance: f64,
}

fn default_noise() -> f64 {
    DEFAULT_NOISE_VARIANCE
}

impl OracleSpec {
    pub fn new(kind: OracleKind) -> Self {
        Self {
            kind,
            noise_variance: DEFAULT_NOISE_VARIANCE,
        }
    }

    pub fn with_noise(mut self, noise_variance: f64) -> Self {
        self.noise_variance = noise_variance;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.noise_variance >= 0.0 && self.noise_variance.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "noise variance {} is invalid",
                self.noise_variance
            )));
        }
        if let OracleKind::ExternalProcess(c) = &self.kind {
            Domain::new(c.lower.clone(), c.upper.clone())?;
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            OracleKind::QuadraticA
            | OracleKind::QuadraticB
            | OracleKind::QuadraticC
            | OracleKind::QuadraticD => 1,
            OracleKind::ModifiedGriewank => 2,
            OracleKind::Hartmann3Time => 3,
            OracleKind::Hartmann6Time => 6,
            OracleKind::ExternalProcess(c) => c.lower.len(),
        }
    }

    pub fn domain(&self) -> Domain {
        match &self.kind {
            OracleKind::ModifiedGriewank => Domain {
                lower: vec![-5.0; 2],
                upper: vec![5.0; 2],
            },
            OracleKind::ExternalProcess(c) => Domain {
                lower: c.lower.clone(),
                upper: c.upper.clone(),
            },
            _ => Domain::unit(self.dim()),
        }
    }

    fn check(&self, x: &[f64], t: f64) -> Result<()> {
        if !self.domain().contains(x) {
            return Err(Error::InvalidArgument(format!(
                "{x:?} is outside the {} domain",
                self.kind
            )));
        }
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "time {t} must be finite and non-negative"
            )));
        }
        Ok(())
    }
}

/// Noise-free objective at native `x`.
pub fn true_value(spec: &OracleSpec, x: &[f64], t: f64) -> Result<f64> {
    spec.check(x, t)?;
    Ok(match &spec.kind {
        OracleKind::QuadraticA => functions::quadratic_a(x[0], t),
        OracleKind::QuadraticB => functions::quadratic_b(x[0], t),
        OracleKind::QuadraticC => functions::quadratic_c(x[0], t),
        OracleKind::QuadraticD => functions::quadratic_d(x[0], t),
        OracleKind::ModifiedGriewank => functions::modified_griewank(x, t),
        OracleKind::Hartmann3Time => functions::hartmann3(x) + functions::linear_drift(x, t),
        OracleKind::Hartmann6Time => functions::hartmann6(x) + functions::linear_drift(x, t),
        OracleKind::ExternalProcess(_) => {
            return Err(Error::Oracle(
                "external oracles have no noise-free form".into(),
            ));
        }
    })
}

/// Noisy observation at native `x`. For external oracles use [`ExternalProcess`].
pub fn evaluate_oracle<R: Rng + ?Sized>(
    spec: &OracleSpec,
    x: &[f64],
    t: f64,
    rng: &mut R,
) -> Result<f64> {
    spec.validate()?;
    let f = true_value(spec, x, t)?;
    if spec.noise_variance == 0.0 {
        return Ok(f);
    }
    let noise = Normal::new(0.0, spec.noise_variance.sqrt()).expect("validated variance");
    Ok(f + noise.sample(rng))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// Maximizer in normalized coordinates.
    pub point: Vec<f64>,
    pub native: Vec<f64>,
    pub value: f64,
    pub method: String,
}

/// Grid points per dimension for `d <= 2` ground truth.
pub const GRID_RESOLUTION: usize = 1000;
/// Random starts for `d >= 3` ground truth.
pub const GROUND_TRUTH_STARTS: usize = 256;

/// Maximizer of the noise-free objective at time `t`: a dense grid (with
/// `resolution` points per axis) refined by local ascent for `d <= 2`,
/// multistart local ascent otherwise.
pub fn true_maximizer(spec: &OracleSpec, t: f64, resolution: usize) -> Result<GroundTruth> {
    let domain = spec.domain();
    let d = spec.dim();
    let f = |u: &[f64]| true_value(spec, &domain.to_native(u), t).unwrap_or(f64::NEG_INFINITY);
    let (mut best, mut best_value, method) = if d <= 2 {
        if resolution < 2 {
            return Err(Error::InvalidArgument(
                "grid resolution must be at least 2".into(),
            ));
        }
        let axis: Vec<f64> = (0..resolution)
            .map(|i| i as f64 / (resolution - 1) as f64)
            .collect();
        let mut best = (vec![0.0; d], f64::NEG_INFINITY);
        let mut u = vec![0.0; d];
        let total = resolution.pow(d as u32);
        for k in 0..total {
            let mut r = k;
            for c in u.iter_mut() {
                *c = axis[r % resolution];
                r /= resolution;
            }
            let v = f(&u);
            if v > best.1 {
                best = (u.clone(), v);
            }
        }
        (best.0, best.1, format!("grid{resolution}+local"))
    } else {
        let mut rng = seed::rng(seed::derive(0x7e57, &[d as u64, t.to_bits()]));
        let bounds = Bounds::unit(d);
        let mut best = (vec![0.0; d], f64::NEG_INFINITY);
        for _ in 0..GROUND_TRUTH_STARTS {
            let u = bounds.sample_uniform(&mut rng);
            if let Some(r) = local_maximize(&fd_objective(&f), &u, &bounds, &refine_config()) {
                if r.value > best.1 {
                    best = (r.point, r.value);
                }
            }
        }
        (best.0, best.1, format!("multistart{GROUND_TRUTH_STARTS}"))
    };
    if let Some(r) = local_maximize(&fd_objective(&f), &best, &Bounds::unit(d), &refine_config()) {
        if r.value > best_value {
            best = r.point;
            best_value = r.value;
        }
    }
    if !best_value.is_finite() {
        return Err(Error::Oracle(format!(
            "{} has no finite values at t = {t}",
            spec.kind
        )));
    }
    Ok(GroundTruth {
        native: domain.to_native(&best),
        point: best,
        value: best_value,
        method,
    })
}

fn refine_config() -> LocalConfig {
    LocalConfig {
        max_iterations: 200,
        gradient_tolerance: 1e-9,
        ..LocalConfig::default()
    }
}

/// Wraps `f` with a central-difference gradient (one-sided at the boundary).
fn fd_objective<'a, F>(f: &'a F) -> impl Fn(&[f64], &mut [f64]) -> f64 + Sync + 'a
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    move |x: &[f64], g: &mut [f64]| {
        let h = 1e-7;
        let mut p = x.to_vec();
        for i in 0..x.len() {
            let lo = (x[i] - h).max(0.0);
            let hi = (x[i] + h).min(1.0);
            p[i] = hi;
            let fh = f(&p);
            p[i] = lo;
            let fl = f(&p);
            p[i] = x[i];
            g[i] = (fh - fl) / (hi - lo);
        }
        f(x)
    }
}

/// An oracle bound to a noise stream, usable by the engine.
pub enum OracleInstance {
    Synthetic {
        spec: OracleSpec,
        rng: ChaCha8Rng,
    },
    External {
        spec: OracleSpec,
        process: ExternalProcess,
    },
}

impl OracleInstance {
    pub fn new(spec: &OracleSpec, noise_seed: u64) -> Result<Self> {
        spec.validate()?;
        Ok(match &spec.kind {
            OracleKind::ExternalProcess(c) => OracleInstance::External {
                spec: spec.clone(),
                process: ExternalProcess::spawn(c)?,
            },
            _ => OracleInstance::Synthetic {
                spec: spec.clone(),
                rng: seed::rng(noise_seed),
            },
        })
    }

    pub fn spec(&self) -> &OracleSpec {
        match self {
            OracleInstance::Synthetic { spec, .. } | OracleInstance::External { spec, .. } => spec,
        }
    }

    /// Observation at native `x`.
    pub fn evaluate_native(&mut self, x: &[f64], t: f64) -> Result<f64> {
        match self {
            OracleInstance::Synthetic { spec, rng } => evaluate_oracle(spec, x, t, rng),
            OracleInstance::External { spec, process } => {
                spec.check(x, t)?;
                process.query(x, t)
            }
        }
    }
}

impl Oracle for OracleInstance {
    fn dim(&self) -> usize {
        self.spec().dim()
    }

    fn evaluate(&mut self, x: &[f64], t: f64) -> Result<f64> {
        let native = self.spec().domain().to_native(x);
        self.evaluate_native(&native, t)
    }
}
