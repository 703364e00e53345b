//! Product squared-exponential covariance over (action, time).

use super::types::Hyperparameters;
use crate::error::{Error, Result};

/// `s * exp(-|x - x'|^2 / (2 theta_x^2)) * exp(-(t - t')^2 / (2 theta_t^2))`.
pub fn kernel_eval(a: (&[f64], f64), b: (&[f64], f64), hyp: &Hyperparameters) -> Result<f64> {
    hyp.validate()?;
    if a.0.len() != b.0.len() {
        return Err(Error::InvalidArgument(format!(
            "dimension mismatch: {} vs {}",
            a.0.len(),
            b.0.len()
        )));
    }
    let finite = a.0.iter().chain(b.0).all(|v| v.is_finite()) && a.1.is_finite() && b.1.is_finite();
    if !finite {
        return Err(Error::InvalidArgument("non-finite kernel input".into()));
    }
    Ok(covariance(a.0, a.1, b.0, b.1, hyp))
}

#[inline]
pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum()
}

#[inline]
pub(crate) fn covariance(xa: &[f64], ta: f64, xb: &[f64], tb: f64, hyp: &Hyperparameters) -> f64 {
    let dt = ta - tb;
    hyp.output_scale
        * (-0.5 * sq_dist(xa, xb) / (hyp.theta_x * hyp.theta_x)).exp()
        * (-0.5 * dt * dt / (hyp.theta_t * hyp.theta_t)).exp()
}

/// Adds `d k(a, b) / d xa` into `out`, given the already computed value `k`.
#[inline]
pub(crate) fn add_grad_wrt_first(
    out: &mut [f64],
    scale: f64,
    k: f64,
    xa: &[f64],
    xb: &[f64],
    hyp: &Hyperparameters,
) {
    let c = -scale * k / (hyp.theta_x * hyp.theta_x);
    for ((o, p), q) in out.iter_mut().zip(xa).zip(xb) {
        *o += c * (p - q);
    }
}
