//! Gaussian-process regression over the joint action-time space.

mod fit;
mod fitted;
mod kernel;
mod linalg;
mod types;

pub use fit::{fit_hyperparameters, FitConfig, FitResult, HyperparameterBounds};
pub use fitted::{log_marginal_likelihood, FittedGP};
pub use kernel::kernel_eval;
pub(crate) use kernel::{add_grad_wrt_first, covariance};
pub use types::{Dataset, Hyperparameters, Point, PosteriorMoments, Record};

/// Posterior moments together with their input gradients at fixed time.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorGradient {
    pub moments: PosteriorMoments,
    pub d_mean: Vec<f64>,
    pub d_std: Vec<f64>,
}

/// Anything that provides posterior moments (and their gradients) over `X x time`.
pub trait Surrogate: Sync {
    fn dim(&self) -> usize;
    fn moments(&self, x: &[f64], t: f64) -> PosteriorMoments;
    fn moments_with_gradient(&self, x: &[f64], t: f64) -> PosteriorGradient;
}
