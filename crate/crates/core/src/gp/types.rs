use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A location in the normalized action space `[0, 1]^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidArgument(
                "point must have at least one coordinate".into(),
            ));
        }
        for (i, &c) in coords.iter().enumerate() {
            if !c.is_finite() || !(0.0..=1.0).contains(&c) {
                return Err(Error::InvalidArgument(format!(
                    "coordinate {i} = {c} is outside [0, 1]"
                )));
            }
        }
        Ok(Self(coords))
    }

    /// Builds a point by clamping each coordinate into `[0, 1]`.
    pub fn clamped(coords: &[f64]) -> Self {
        Self(coords.iter().map(|c| c.clamp(0.0, 1.0)).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl TryFrom<Vec<f64>> for Point {
    type Error = Error;

    fn try_from(value: Vec<f64>) -> Result<Self> {
        Point::new(value)
    }
}

impl From<Point> for Vec<f64> {
    fn from(p: Point) -> Self {
        p.0
    }
}

impl AsRef<[f64]> for Point {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Covariance hyperparameters of the product squared-exponential kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub theta_x: f64,
    pub theta_t: f64,
    pub noise_variance: f64,
    pub output_scale: f64,
}

impl Hyperparameters {
    pub fn new(theta_x: f64, theta_t: f64, noise_variance: f64) -> Result<Self> {
        let h = Self {
            theta_x,
            theta_t,
            noise_variance,
            output_scale: 1.0,
        };
        h.validate()?;
        Ok(h)
    }

    pub fn with_output_scale(mut self, output_scale: f64) -> Result<Self> {
        self.output_scale = output_scale;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.theta_x.is_finite()
            && self.theta_x > 0.0
            && self.theta_t.is_finite()
            && self.theta_t > 0.0
            && self.noise_variance.is_finite()
            && self.noise_variance >= 0.0
            && self.output_scale.is_finite()
            && self.output_scale > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "invalid hyperparameters {self:?}"
            )))
        }
    }
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Self {
            theta_x: 0.2,
            theta_t: 1.0,
            noise_variance: 1e-3,
            output_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub point: Point,
    pub time: f64,
    pub observation: f64,
}

/// Observations ordered by strictly increasing time, one per time stamp.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    dim: usize,
    records: Vec<Record>,
}

impl Dataset {
    pub fn new(dim: usize) -> Self {
        assert!(dim >= 1, "dataset dimension must be positive");
        Self {
            dim,
            records: Vec::new(),
        }
    }

    pub fn from_records(dim: usize, records: Vec<Record>) -> Result<Self> {
        let mut data = Self::new(dim);
        for r in records {
            data.push(r.point, r.time, r.observation)?;
        }
        Ok(data)
    }

    pub fn push(&mut self, point: Point, time: f64, observation: f64) -> Result<()> {
        if point.dim() != self.dim {
            return Err(Error::InvalidArgument(format!(
                "point has dimension {}, dataset expects {}",
                point.dim(),
                self.dim
            )));
        }
        if !time.is_finite() || !observation.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "non-finite record (t = {time}, y = {observation})"
            )));
        }
        if let Some(last) = self.records.last() {
            if time <= last.time {
                return Err(Error::InvalidArgument(format!(
                    "time {time} does not follow last observed time {}",
                    last.time
                )));
            }
        }
        self.records.push(Record {
            point,
            time,
            observation,
        });
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn last_time(&self) -> Option<f64> {
        self.records.last().map(|r| r.time)
    }

    pub fn observations(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.observation)
    }

    pub fn best_observation(&self) -> Option<f64> {
        self.observations().reduce(f64::max)
    }

    pub fn mean_observation(&self) -> f64 {
        if self.records.is_empty() {
            0.0
        } else {
            self.observations().sum::<f64>() / self.records.len() as f64
        }
    }
}

/// Posterior mean and variance at one query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PosteriorMoments {
    pub mean: f64,
    pub variance: f64,
}

impl PosteriorMoments {
    pub fn std(&self) -> f64 {
        self.variance.sqrt()
    }
}
