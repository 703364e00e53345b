//! Noise-free synthetic objectives in native coordinates.

use std::f64::consts::PI;

const H3_A: [[f64; 4]; 3] = [
    [3.0, 0.1, 3.0, 0.1],
    [10.0, 10.0, 10.0, 10.0],
    [30.0, 35.0, 30.0, 35.0],
];
const H3_P: [[f64; 4]; 3] = [
    [0.36890, 0.46990, 0.10910, 0.03815],
    [0.11700, 0.43870, 0.87320, 0.57430],
    [0.26730, 0.74700, 0.55470, 0.88280],
];
const H6_A: [[f64; 4]; 6] = [
    [10.0, 0.05, 3.0, 17.0],
    [3.0, 10.0, 3.5, 8.0],
    [17.0, 17.0, 1.7, 0.05],
    [3.5, 0.1, 10.0, 10.0],
    [1.7, 8.0, 17.0, 0.1],
    [8.0, 14.0, 8.0, 14.0],
];
const H6_P: [[f64; 4]; 6] = [
    [0.1312, 0.2329, 0.2348, 0.4047],
    [0.1696, 0.4135, 0.1451, 0.8828],
    [0.5569, 0.8307, 0.3522, 0.8732],
    [0.0124, 0.3736, 0.2883, 0.5743],
    [0.8283, 0.1004, 0.3047, 0.1091],
    [0.5886, 0.9991, 0.6650, 0.0381],
];
const H_C: [f64; 4] = [1.0, 1.2, 3.0, 3.2];

pub const GRIEWANK_CENTER: [f64; 2] = [3.0, 0.0];
pub const GRIEWANK_WEIGHT_SCALE: f64 = 160.0;

/// `-4 (x - 0.5)^2`.
pub fn quadratic_base(x: f64) -> f64 {
    -4.0 * (x - 0.5) * (x - 0.5)
}

pub fn sin_plus_cos(u: f64) -> f64 {
    (PI * u).sin() + (PI * u).cos()
}

pub fn quadratic_a(x: f64, t: f64) -> f64 {
    quadratic_base(x) + sin_plus_cos(x + t)
}

pub fn quadratic_b(x: f64, t: f64) -> f64 {
    quadratic_base(x) + sin_plus_cos(x * t)
}

pub fn quadratic_c(x: f64, t: f64) -> f64 {
    quadratic_base(x) + sin_plus_cos(x * (t - 3.0).max(0.0))
}

pub fn quadratic_d(x: f64, t: f64) -> f64 {
    let s = t.sin();
    quadratic_base(x) + 2.0 * x * s - s * s
}

/// Standard Griewank, `sum z_i^2 / 4000 - prod cos(z_i / sqrt(i)) + 1`. Maximized
/// as is: its peaks come in sign-symmetric pairs (e.g. `z = (+-pi, 0)`), which
/// the Gaussian weight of [`modified_griewank`] turns into a unique maximum.
pub fn griewank_reference(z: &[f64]) -> f64 {
    let sum: f64 = z.iter().map(|v| v * v).sum::<f64>() / 4000.0;
    let prod: f64 = z
        .iter()
        .enumerate()
        .map(|(i, v)| (v / ((i + 1) as f64).sqrt()).cos())
        .product();
    sum - prod + 1.0
}

/// Griewank on the rotated input, times a Gaussian weight centered at
/// [`GRIEWANK_CENTER`] on the unrotated input.
pub fn modified_griewank(x: &[f64], t: f64) -> f64 {
    let zeta = PI * t / 4.0;
    let (s, c) = zeta.sin_cos();
    let z = [c * x[0] - s * x[1], s * x[0] + c * x[1]];
    let d2 = (x[0] - GRIEWANK_CENTER[0]).powi(2) + (x[1] - GRIEWANK_CENTER[1]).powi(2);
    griewank_reference(&z) * (-d2 / GRIEWANK_WEIGHT_SCALE).exp()
}

fn hartmann<const D: usize>(x: &[f64], a: &[[f64; 4]; D], p: &[[f64; 4]; D]) -> f64 {
    (0..4)
        .map(|i| {
            let d: f64 = (0..D).map(|j| a[j][i] * (x[j] - p[j][i]).powi(2)).sum();
            H_C[i] * (-d).exp()
        })
        .sum()
}

/// Negated Hartmann-3d (maximum about 3.86278).
pub fn hartmann3(x: &[f64]) -> f64 {
    hartmann(x, &H3_A, &H3_P)
}

/// Negated Hartmann-6d (maximum about 3.32237).
pub fn hartmann6(x: &[f64]) -> f64 {
    hartmann(x, &H6_A, &H6_P)
}

/// `sum_i (2 sin(t) x_i - sin(t)^2)`.
pub fn linear_drift(x: &[f64], t: f64) -> f64 {
    let s = t.sin();
    x.iter().map(|v| 2.0 * s * v - s * s).sum()
}
