use super::kernel::{add_grad_wrt_first, covariance};
use super::linalg::PackedCholesky;
use super::types::{Dataset, Hyperparameters, Point, PosteriorMoments};
use super::{PosteriorGradient, Surrogate};
use crate::error::{Error, Result};
use crate::normal::LN_2PI;

const JITTER_START: f64 = 1e-10;
const JITTER_MAX: f64 = 1e-4;
/// Variances below this fraction of the output scale are treated as zero
/// when differentiating the standard deviation.
const STD_FLOOR: f64 = 1e-15;

/// A Gaussian process conditioned on a dataset. Immutable after construction.
///
/// Observations are centered by a constant `mean_offset` (the sample mean
/// by default), so the zero-mean prior applies to the residuals.
#[derive(Debug, Clone)]
pub struct FittedGP {
    dataset: Dataset,
    hyp: Hyperparameters,
    mean_offset: f64,
    jitter: f64,
    inputs: Vec<f64>,
    times: Vec<f64>,
    factor: PackedCholesky,
    alpha: Vec<f64>,
}

impl FittedGP {
    /// Conditions on `dataset`, centering observations at their sample mean.
    pub fn new(dataset: Dataset, hyp: Hyperparameters) -> Result<Self> {
        let offset = dataset.mean_observation();
        Self::with_mean_offset(dataset, hyp, offset)
    }

    /// Conditions on `dataset` with an explicit constant prior mean.
    pub fn with_mean_offset(
        dataset: Dataset,
        hyp: Hyperparameters,
        mean_offset: f64,
    ) -> Result<Self> {
        hyp.validate()?;
        if !mean_offset.is_finite() {
            return Err(Error::InvalidArgument("non-finite mean offset".into()));
        }
        let dim = dataset.dim();
        let inputs: Vec<f64> = dataset
            .records()
            .iter()
            .flat_map(|r| r.point.coords().iter().copied())
            .collect();
        let times: Vec<f64> = dataset.records().iter().map(|r| r.time).collect();
        let (factor, jitter) = factorize(&inputs, &times, dim, &hyp)?;
        let mut gp = Self {
            dataset,
            hyp,
            mean_offset,
            jitter,
            inputs,
            times,
            factor,
            alpha: Vec::new(),
        };
        gp.alpha = gp.solve_targets();
        Ok(gp)
    }

    /// The prior process (no observations) in `dim` dimensions.
    pub fn prior(dim: usize, hyp: Hyperparameters) -> Result<Self> {
        Self::with_mean_offset(Dataset::new(dim), hyp, 0.0)
    }

    fn solve_targets(&self) -> Vec<f64> {
        let mut r: Vec<f64> = self
            .dataset
            .observations()
            .map(|y| y - self.mean_offset)
            .collect();
        self.factor.solve_in_place(&mut r);
        r
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn hyperparameters(&self) -> &Hyperparameters {
        &self.hyp
    }

    pub fn mean_offset(&self) -> f64 {
        self.mean_offset
    }

    /// Diagonal jitter that was needed for a stable factorization.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Variance added to the diagonal of every observation.
    pub fn diagonal_noise(&self) -> f64 {
        self.hyp.noise_variance + self.jitter
    }

    /// `(K + noise I)^{-1} (y - offset)`.
    pub fn solved_targets(&self) -> &[f64] {
        &self.alpha
    }

    /// Dense copy of the lower Cholesky factor of `K + noise I`.
    pub fn factor_matrix(&self) -> Vec<Vec<f64>> {
        let n = self.len();
        (0..n)
            .map(|i| (0..n).map(|j| self.factor.get(i, j)).collect())
            .collect()
    }

    #[inline]
    pub(crate) fn input(&self, i: usize) -> &[f64] {
        let d = self.dataset.dim();
        &self.inputs[i * d..(i + 1) * d]
    }

    /// Covariances between `(x, t)` and every observed input.
    pub fn cross_covariances(&self, x: &[f64], t: f64) -> Vec<f64> {
        (0..self.len())
            .map(|i| covariance(x, t, self.input(i), self.times[i], &self.hyp))
            .collect()
    }

    pub(crate) fn solve_lower_in_place(&self, b: &mut [f64]) {
        self.factor.solve_lower_in_place(b);
    }

    pub(crate) fn solve_upper_in_place(&self, b: &mut [f64]) {
        self.factor.solve_upper_in_place(b);
    }

    /// Accumulates `sum_i weights[i] * d k((x, t), input_i) / dx` into `out`.
    pub(crate) fn add_weighted_cross_gradient(
        &self,
        out: &mut [f64],
        x: &[f64],
        k: &[f64],
        weights: &[f64],
    ) {
        for i in 0..self.len() {
            add_grad_wrt_first(out, weights[i], k[i], x, self.input(i), &self.hyp);
        }
    }

    pub fn prior_variance(&self) -> f64 {
        self.hyp.output_scale
    }

    pub fn posterior(&self, x: &[f64], t: f64) -> PosteriorMoments {
        if self.is_empty() {
            return PosteriorMoments {
                mean: self.mean_offset,
                variance: self.hyp.output_scale,
            };
        }
        let mut v = self.cross_covariances(x, t);
        let mean = self.mean_offset + v.iter().zip(&self.alpha).map(|(k, a)| k * a).sum::<f64>();
        self.factor.solve_lower_in_place(&mut v);
        let variance = (self.hyp.output_scale - v.iter().map(|a| a * a).sum::<f64>()).max(0.0);
        PosteriorMoments { mean, variance }
    }

    /// Gradients of the posterior mean and standard deviation with respect to `x` at fixed `t`.
    pub fn posterior_input_gradient(&self, x: &[f64], t: f64) -> (Vec<f64>, Vec<f64>) {
        let g = self.posterior_with_gradient(x, t);
        (g.d_mean, g.d_std)
    }

    pub fn posterior_with_gradient(&self, x: &[f64], t: f64) -> PosteriorGradient {
        let d = x.len();
        if self.is_empty() {
            return PosteriorGradient {
                moments: self.posterior(x, t),
                d_mean: vec![0.0; d],
                d_std: vec![0.0; d],
            };
        }
        let k = self.cross_covariances(x, t);
        let mean = self.mean_offset + k.iter().zip(&self.alpha).map(|(a, b)| a * b).sum::<f64>();
        let mut u = k.clone();
        self.factor.solve_lower_in_place(&mut u);
        let variance = (self.hyp.output_scale - u.iter().map(|a| a * a).sum::<f64>()).max(0.0);
        self.factor.solve_upper_in_place(&mut u);

        let mut d_mean = vec![0.0; d];
        self.add_weighted_cross_gradient(&mut d_mean, x, &k, &self.alpha);
        let mut d_std = vec![0.0; d];
        if variance > STD_FLOOR * self.hyp.output_scale {
            // d sigma = -(dk^T K^{-1} k) / sigma
            let std = variance.sqrt();
            let w: Vec<f64> = u.iter().map(|v| -v / std).collect();
            self.add_weighted_cross_gradient(&mut d_std, x, &k, &w);
        }
        PosteriorGradient {
            moments: PosteriorMoments { mean, variance },
            d_mean,
            d_std,
        }
    }

    /// Reparameterized draw `mu + sigma * gamma`.
    pub fn sample_posterior(&self, x: &[f64], t: f64, gamma: f64) -> f64 {
        let m = self.posterior(x, t);
        m.mean + m.std() * gamma
    }

    /// Adds one observation by extending the factor with a single row.
    /// The mean offset is kept, so the result equals a full refit with the
    /// same offset. The receiver is unchanged.
    pub fn condition(&self, point: &Point, t: f64, y: f64) -> Result<Self> {
        let mut dataset = self.dataset.clone();
        dataset.push(point.clone(), t, y)?;
        let cross = self.cross_covariances(point.coords(), t);
        let diag = self.hyp.output_scale + self.diagonal_noise();
        match self.factor.extended(&cross, diag) {
            Some(factor) => {
                let mut inputs = self.inputs.clone();
                inputs.extend_from_slice(point.coords());
                let mut times = self.times.clone();
                times.push(t);
                let mut gp = Self {
                    dataset,
                    hyp: self.hyp,
                    mean_offset: self.mean_offset,
                    jitter: self.jitter,
                    inputs,
                    times,
                    factor,
                    alpha: Vec::new(),
                };
                gp.alpha = gp.solve_targets();
                Ok(gp)
            }
            None => {
                log::debug!("rank-one update lost positive definiteness; refactorizing");
                Self::with_mean_offset(dataset, self.hyp, self.mean_offset)
            }
        }
    }

    /// Log marginal likelihood of the centered observations under this model.
    pub fn log_marginal_likelihood(&self) -> f64 {
        let r: f64 = self
            .dataset
            .observations()
            .zip(&self.alpha)
            .map(|(y, a)| (y - self.mean_offset) * a)
            .sum();
        -0.5 * r - 0.5 * self.factor.log_det() - 0.5 * self.len() as f64 * LN_2PI
    }
}

impl Surrogate for FittedGP {
    fn dim(&self) -> usize {
        self.dataset.dim()
    }

    fn moments(&self, x: &[f64], t: f64) -> PosteriorMoments {
        self.posterior(x, t)
    }

    fn moments_with_gradient(&self, x: &[f64], t: f64) -> PosteriorGradient {
        self.posterior_with_gradient(x, t)
    }
}

pub(crate) fn factorize(
    inputs: &[f64],
    times: &[f64],
    dim: usize,
    hyp: &Hyperparameters,
) -> Result<(PackedCholesky, f64)> {
    let n = times.len();
    if n == 0 {
        return Ok((PackedCholesky::empty(), 0.0));
    }
    let x = |i: usize| &inputs[i * dim..(i + 1) * dim];
    let build = |jitter: f64| {
        PackedCholesky::factorize(n, |i, j| {
            let k = covariance(x(i), times[i], x(j), times[j], hyp);
            if i == j {
                k + hyp.noise_variance + jitter
            } else {
                k
            }
        })
    };
    if let Ok(f) = build(0.0) {
        return Ok((f, 0.0));
    }
    let mut jitter = JITTER_START * hyp.output_scale;
    while jitter <= JITTER_MAX * hyp.output_scale {
        if let Ok(f) = build(jitter) {
            log::debug!("factorization needed jitter {jitter:e} (n = {n})");
            return Ok((f, jitter));
        }
        jitter *= 2.0;
    }
    let diag = hyp.output_scale + hyp.noise_variance;
    Err(Error::Factorization {
        size: n,
        jitter: jitter / 2.0,
        min_diagonal: diag,
        max_diagonal: diag,
    })
}

/// Log marginal likelihood `-1/2 y^T (K + s I)^{-1} y - 1/2 log det(K + s I) - n/2 log 2 pi`
/// of the raw observations under a zero-mean prior.
pub fn log_marginal_likelihood(data: &Dataset, hyp: &Hyperparameters) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Precondition(
            "log marginal likelihood needs at least one observation".into(),
        ));
    }
    Ok(FittedGP::with_mean_offset(data.clone(), *hyp, 0.0)?.log_marginal_likelihood())
}
