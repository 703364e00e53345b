use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Remaining observation times; the last one is the horizon `T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Schedule(Vec<f64>);

impl Schedule {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::InvalidArgument(
                "schedule must contain at least one time".into(),
            ));
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidArgument(
                "schedule times must be finite".into(),
            ));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument(
                "schedule times must be strictly increasing".into(),
            ));
        }
        Ok(Self(times))
    }

    /// `count` evenly spaced times in `(start, horizon]`.
    pub fn uniform(start: f64, horizon: f64, count: usize) -> Result<Self> {
        if count == 0 || !(horizon > start) {
            return Err(Error::InvalidArgument(format!(
                "cannot place {count} times in ({start}, {horizon}]"
            )));
        }
        let step = (horizon - start) / count as f64;
        let mut times: Vec<f64> = (1..=count).map(|k| start + step * k as f64).collect();
        times[count - 1] = horizon;
        Self::new(times)
    }

    pub fn times(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        *self.0.last().expect("schedule is non-empty")
    }
}

impl TryFrom<Vec<f64>> for Schedule {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Schedule> for Vec<f64> {
    fn from(s: Schedule) -> Self {
        s.0
    }
}

/// `n` times evenly spaced over `[first, last]` (just `last` when `n == 1`).
pub fn starting_times(first: f64, last: f64, n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Ok(Vec::new());
    }
    if n == 1 {
        return Ok(vec![last]);
    }
    if !(last > first) {
        return Err(Error::InvalidArgument(format!(
            "starting window [{first}, {last}] is empty"
        )));
    }
    let step = (last - first) / (n - 1) as f64;
    let mut times: Vec<f64> = (0..n).map(|k| first + step * k as f64).collect();
    times[n - 1] = last;
    Ok(times)
}
