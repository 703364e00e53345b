//! Independent reference computations for the integration tests.
#![allow(dead_code)]

use lookahead_core::gp::{Dataset, FittedGP, Hyperparameters, Point};
use lookahead_core::seed;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn rng(s: u64) -> ChaCha8Rng {
    seed::rng(s)
}

/// Kernel written out directly from its definition.
pub fn k(a: &[f64], ta: f64, b: &[f64], tb: f64, h: &Hyperparameters) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum();
    h.output_scale
        * (-d2 / (2.0 * h.theta_x * h.theta_x)).exp()
        * (-(ta - tb).powi(2) / (2.0 * h.theta_t * h.theta_t)).exp()
}

/// Posterior moments by a dense LU solve (no Cholesky, no caching).
pub fn dense_posterior(
    data: &Dataset,
    h: &Hyperparameters,
    offset: f64,
    x: &[f64],
    t: f64,
) -> (f64, f64) {
    let r = data.records();
    let n = r.len();
    if n == 0 {
        return (offset, h.output_scale);
    }
    let kmat = DMatrix::from_fn(n, n, |i, j| {
        k(
            r[i].point.coords(),
            r[i].time,
            r[j].point.coords(),
            r[j].time,
            h,
        ) + if i == j { h.noise_variance } else { 0.0 }
    });
    let y = DVector::from_fn(n, |i, _| r[i].observation - offset);
    let kx = DVector::from_fn(n, |i, _| k(x, t, r[i].point.coords(), r[i].time, h));
    let lu = kmat.lu();
    let alpha = lu.solve(&y).unwrap();
    let v = lu.solve(&kx).unwrap();
    (offset + kx.dot(&alpha), h.output_scale - kx.dot(&v))
}

/// Log marginal likelihood of raw targets by dense determinant and solve.
pub fn dense_lml(data: &Dataset, h: &Hyperparameters) -> f64 {
    let r = data.records();
    let n = r.len();
    let kmat = DMatrix::from_fn(n, n, |i, j| {
        k(
            r[i].point.coords(),
            r[i].time,
            r[j].point.coords(),
            r[j].time,
            h,
        ) + if i == j { h.noise_variance } else { 0.0 }
    });
    let y = DVector::from_fn(n, |i, _| r[i].observation);
    let det = kmat.clone().determinant();
    let alpha = kmat.lu().solve(&y).unwrap();
    -0.5 * y.dot(&alpha) - 0.5 * det.ln() - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln()
}

/// Random instance: `n` records in `[0,1]^d` at strictly increasing times.
pub fn random_dataset<R: Rng>(rng: &mut R, d: usize, n: usize) -> Dataset {
    let mut data = Dataset::new(d);
    let mut t = 0.0;
    for _ in 0..n {
        t += 0.05 + 0.3 * rng.random::<f64>();
        let x: Vec<f64> = (0..d).map(|_| rng.random()).collect();
        let y = (3.0 * x[0]).sin() + 0.5 * t.cos() + 0.1 * rng.random::<f64>();
        data.push(Point::new(x).unwrap(), t, y).unwrap();
    }
    data
}

pub fn random_hyperparameters<R: Rng>(rng: &mut R) -> Hyperparameters {
    Hyperparameters::new(
        0.1 + 0.5 * rng.random::<f64>(),
        0.3 + 1.5 * rng.random::<f64>(),
        1e-4 + 1e-2 * rng.random::<f64>(),
    )
    .unwrap()
    .with_output_scale(0.5 + rng.random::<f64>())
    .unwrap()
}

pub fn random_gp<R: Rng>(rng: &mut R, d: usize, n: usize) -> FittedGP {
    FittedGP::new(random_dataset(rng, d, n), random_hyperparameters(rng)).unwrap()
}

pub fn random_point<R: Rng>(rng: &mut R, d: usize) -> Vec<f64> {
    (0..d).map(|_| 0.05 + 0.9 * rng.random::<f64>()).collect()
}

/// Central finite-difference gradient.
pub fn fd_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let mut p = x.to_vec();
            p[i] = x[i] + h;
            let fp = f(&p);
            p[i] = x[i] - h;
            let fm = f(&p);
            (fp - fm) / (2.0 * h)
        })
        .collect()
}

pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a
        .iter()
        .zip(b)
        .map(|(p, q)| (p - q).powi(2))
        .sum::<f64>()
        .sqrt();
    let den: f64 = b.iter().map(|q| q * q).sum::<f64>().sqrt();
    num / den.max(1e-8)
}

/// Gauss-Hermite rule for the standard normal (probabilists' weights sum
/// to 1), nodes from the Golub-Welsch eigenproblem.
pub fn gauss_hermite(m: usize) -> (Vec<f64>, Vec<f64>) {
    let jac = DMatrix::from_fn(m, m, |i, j| {
        if i + 1 == j || j + 1 == i {
            (i.max(j) as f64).sqrt()
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..m)
        .map(|i| (eig.eigenvalues[i], eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Dense grid of `m` points on `[0, 1]`.
pub fn grid(m: usize) -> Vec<f64> {
    (0..m).map(|i| i as f64 / (m - 1) as f64).collect()
}
