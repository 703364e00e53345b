//! Projected limited-memory BFGS ascent on a box.

use std::collections::VecDeque;

use super::bounds::Bounds;

#[derive(Debug, Clone, Copy)]
pub struct LocalConfig {
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
    pub memory: usize,
    /// Length of the first (steepest-ascent) trial step.
    pub initial_step: f64,
}

impl Default for LocalConfig {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            gradient_tolerance: 1e-6,
            memory: 10,
            initial_step: 0.1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LocalResult {
    pub point: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 50;

/// Ascends `f` (value and gradient through the out-parameter) from `start`.
///
/// Accepted iterates never decrease the objective. Returns `None` when the
/// starting value is not finite.
pub fn local_maximize<F>(
    f: &F,
    start: &[f64],
    bounds: &Bounds,
    cfg: &LocalConfig,
) -> Option<LocalResult>
where
    F: Fn(&[f64], &mut [f64]) -> f64 + ?Sized,
{
    let n = start.len();
    let mut x = start.to_vec();
    bounds.project(&mut x);
    let mut g = vec![0.0; n];
    let mut fx = f(&x, &mut g);
    let mut evaluations = 1;
    if !fx.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return None;
    }

    let lo = bounds.lower();
    let hi = bounds.upper();
    let mut memory: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(cfg.memory);
    let mut converged = false;
    let mut iterations = 0;
    let mut g_new = vec![0.0; n];
    let mut x_new = vec![0.0; n];

    while iterations < cfg.max_iterations {
        let free: Vec<bool> = (0..n)
            .map(|i| {
                !(lo[i] == hi[i] || (x[i] <= lo[i] && g[i] < 0.0) || (x[i] >= hi[i] && g[i] > 0.0))
            })
            .collect();
        let pg_norm = (0..n)
            .filter(|&i| free[i])
            .map(|i| g[i].abs())
            .fold(0.0, f64::max);
        if pg_norm <= cfg.gradient_tolerance {
            converged = true;
            break;
        }
        iterations += 1;

        let mut accepted = false;
        for attempt in 0..2 {
            let use_memory = attempt == 0 && !memory.is_empty();
            if attempt == 1 && memory.is_empty() {
                break;
            }
            let mut d: Vec<f64> = (0..n).map(|i| if free[i] { g[i] } else { 0.0 }).collect();
            if use_memory {
                two_loop(&mut d, &memory);
                for i in 0..n {
                    if !free[i] {
                        d[i] = 0.0;
                    }
                }
                let slope: f64 = d.iter().zip(&g).map(|(a, b)| a * b).sum();
                if !(slope > 0.0) {
                    memory.clear();
                    continue;
                }
            } else {
                let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
                let scale = cfg.initial_step / norm;
                d.iter_mut().for_each(|v| *v *= scale);
            }

            let mut step = 1.0;
            for _ in 0..MAX_BACKTRACKS {
                for i in 0..n {
                    x_new[i] = x[i] + step * d[i];
                }
                bounds.project(&mut x_new);
                if x_new == x {
                    break;
                }
                let predicted: f64 = (0..n).map(|i| g[i] * (x_new[i] - x[i])).sum();
                let f_new = f(&x_new, &mut g_new);
                evaluations += 1;
                let ok = f_new.is_finite()
                    && g_new.iter().all(|v| v.is_finite())
                    && if predicted > 0.0 {
                        f_new >= fx + ARMIJO * predicted
                    } else {
                        f_new > fx
                    };
                if ok {
                    let s: Vec<f64> = (0..n).map(|i| x_new[i] - x[i]).collect();
                    let y: Vec<f64> = (0..n).map(|i| g[i] - g_new[i]).collect();
                    let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
                    if sy
                        > 1e-12
                            * s.iter().map(|v| v * v).sum::<f64>().sqrt()
                            * y.iter().map(|v| v * v).sum::<f64>().sqrt()
                    {
                        if memory.len() == cfg.memory {
                            memory.pop_front();
                        }
                        memory.push_back((s, y, 1.0 / sy));
                    }
                    let gain = f_new - fx;
                    std::mem::swap(&mut x, &mut x_new);
                    std::mem::swap(&mut g, &mut g_new);
                    fx = f_new;
                    accepted = true;
                    if gain <= 1e-15 * fx.abs().max(1.0) && memory.len() > 1 {
                        // stalled: treat as converged at machine precision
                        converged = true;
                    }
                    break;
                }
                step *= 0.5;
            }
            if accepted {
                break;
            }
            memory.clear();
        }
        if !accepted || converged {
            break;
        }
    }

    Some(LocalResult {
        point: x,
        value: fx,
        iterations,
        evaluations,
        converged,
    })
}

/// Two-loop recursion: replaces `q` by `H q` where `H` approximates the
/// inverse of the negated Hessian.
fn two_loop(q: &mut [f64], memory: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) {
    let mut alphas = Vec::with_capacity(memory.len());
    for (s, y, rho) in memory.iter().rev() {
        let a = rho * s.iter().zip(q.iter()).map(|(a, b)| a * b).sum::<f64>();
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = memory.back() {
        let sy: f64 = s.iter().zip(y).map(|(a, b)| a * b).sum();
        let yy: f64 = y.iter().map(|v| v * v).sum();
        let gamma = sy / yy;
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for ((s, y, rho), a) in memory.iter().zip(alphas.into_iter().rev()) {
        let b = rho * y.iter().zip(q.iter()).map(|(a, b)| a * b).sum::<f64>();
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn concave_quadratic_converges() {
        let f = |x: &[f64], g: &mut [f64]| {
            g[0] = -2.0 * (x[0] - 0.3);
            g[1] = -20.0 * (x[1] - 0.6);
            -(x[0] - 0.3).powi(2) - 10.0 * (x[1] - 0.6).powi(2)
        };
        let r = local_maximize(&f, &[0.9, 0.1], &Bounds::unit(2), &LocalConfig::default()).unwrap();
        assert!(r.converged);
        assert!((r.point[0] - 0.3).abs() < 1e-6 && (r.point[1] - 0.6).abs() < 1e-6);
    }

    #[test]
    fn stops_on_active_bound() {
        let f = |x: &[f64], g: &mut [f64]| {
            g[0] = 1.0;
            x[0]
        };
        let r = local_maximize(&f, &[0.2], &Bounds::unit(1), &LocalConfig::default()).unwrap();
        assert_eq!(r.point, vec![1.0]);
        assert!(r.converged);
    }

    #[test]
    fn rosenbrock_like_is_monotone() {
        let values = std::cell::RefCell::new(Vec::new());
        let f = |x: &[f64], g: &mut [f64]| {
            let (a, b) = (x[0] * 2.0 - 1.0, x[1] * 2.0 - 1.0);
            let v = -((1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2));
            g[0] = -(-2.0 * (1.0 - a) - 400.0 * a * (b - a * a)) * 2.0;
            g[1] = -(200.0 * (b - a * a)) * 2.0;
            v
        };
        let wrapped = |x: &[f64], g: &mut [f64]| {
            let v = f(x, g);
            values.borrow_mut().push(v);
            v
        };
        let cfg = LocalConfig {
            max_iterations: 500,
            ..Default::default()
        };
        let r = local_maximize(&wrapped, &[0.1, 0.9], &Bounds::unit(2), &cfg).unwrap();
        assert!(r.value > -1e-8, "{r:?}");
    }

    #[test]
    fn non_finite_start_is_rejected() {
        let f = |_: &[f64], _: &mut [f64]| f64::NAN;
        assert!(local_maximize(&f, &[0.5], &Bounds::unit(1), &LocalConfig::default()).is_none());
    }
}
