//! Posterior after conditioning on one fantasized observation.
//!
//! Conditioning `gp` on `y = mu_n(x, t) + s * gamma` at `(x, t)` gives, at
//! any query `q`,
//!
//! ```text
//! mu_{n,1}(q)      = mu_n(q) + gamma * (s / D) * c(q, x)
//! sigma_{n,1}^2(q) = sigma_n^2(q) - c(q, x)^2 / D
//! ```
//!
//! with `c` the posterior cross-covariance and `D = sigma_n^2(x, t) + noise`.
//! `s` is `sqrt(D)` when fantasies include observation noise and
//! `sigma_n(x, t)` otherwise. Both moments are differentiable in the query
//! and in the conditioning location `x`, which is what the lookahead
//! gradient and the one-shot solver need.

use crate::error::Result;
use crate::gp::{
    add_grad_wrt_first, covariance, FittedGP, Point, PosteriorGradient, PosteriorMoments, Surrogate,
};

const DEGENERATE_DENOMINATOR: f64 = 1e-300;

/// Fantasy conditioning at a fixed outer location, shared by all draws.
#[derive(Debug, Clone)]
pub struct FantasyModel<'a> {
    gp: &'a FittedGP,
    x: Vec<f64>,
    t: f64,
    /// `K^{-1} k_n(x, t)`.
    a: Vec<f64>,
    k_x: Vec<f64>,
    mean_x: f64,
    var_x: f64,
    denom: f64,
    draw_std: f64,
    scale: f64,
    observation_noise: bool,
}

/// Fantasy moments at one query, optionally with gradients.
#[derive(Debug, Clone, Default)]
pub struct FantasyEval {
    pub mean: f64,
    pub std: f64,
    /// Gradients with respect to the query location.
    pub d_mean_query: Vec<f64>,
    pub d_std_query: Vec<f64>,
    /// Gradients with respect to the conditioning location `x`.
    pub d_mean_outer: Vec<f64>,
    pub d_std_outer: Vec<f64>,
}

impl<'a> FantasyModel<'a> {
    pub fn new(gp: &'a FittedGP, x: &[f64], t: f64, observation_noise: bool) -> Self {
        let k_x = gp.cross_covariances(x, t);
        let mean_x = gp.mean_offset()
            + k_x
                .iter()
                .zip(gp.solved_targets())
                .map(|(a, b)| a * b)
                .sum::<f64>();
        let mut a = k_x.clone();
        gp.solve_lower_in_place(&mut a);
        let var_x = (gp.prior_variance() - a.iter().map(|v| v * v).sum::<f64>()).max(0.0);
        gp.solve_upper_in_place(&mut a);
        let denom = var_x + gp.diagonal_noise();
        let draw_std = if observation_noise {
            denom.sqrt()
        } else {
            var_x.sqrt()
        };
        let scale = if denom > DEGENERATE_DENOMINATOR {
            draw_std / denom
        } else {
            0.0
        };
        Self {
            gp,
            x: x.to_vec(),
            t,
            a,
            k_x,
            mean_x,
            var_x,
            denom,
            draw_std,
            scale,
            observation_noise,
        }
    }

    pub fn base(&self) -> &FittedGP {
        self.gp
    }

    pub fn location(&self) -> (&[f64], f64) {
        (&self.x, self.t)
    }

    /// Standard deviation of the fantasized observation.
    pub fn draw_std(&self) -> f64 {
        self.draw_std
    }

    /// The fantasized observation for a standard-normal draw.
    pub fn fantasy_observation(&self, gamma: f64) -> f64 {
        self.mean_x + self.draw_std * gamma
    }

    /// Materializes the conditioned process as a [`FittedGP`].
    pub fn conditioned(&self, gamma: f64) -> Result<FittedGP> {
        self.gp.condition(
            &Point::clamped(&self.x),
            self.t,
            self.fantasy_observation(gamma),
        )
    }

    pub fn sample(&'a self, gamma: f64) -> FantasySample<'a> {
        FantasySample { model: self, gamma }
    }

    fn degenerate(&self) -> bool {
        self.denom <= DEGENERATE_DENOMINATOR
    }

    /// Moments of the fantasy posterior at `(q, tq)` for draw `gamma`.
    pub fn moments(&self, q: &[f64], tq: f64, gamma: f64) -> PosteriorMoments {
        let base = self.gp.posterior(q, tq);
        if self.degenerate() {
            return base;
        }
        let c = self.cross_covariance(q, tq);
        PosteriorMoments {
            mean: base.mean + gamma * self.scale * c,
            variance: (base.variance - c * c / self.denom).max(0.0),
        }
    }

    /// `Cov_n((q, tq), (x, t))`.
    pub fn cross_covariance(&self, q: &[f64], tq: f64) -> f64 {
        let hyp = self.gp.hyperparameters();
        let kc = covariance(q, tq, &self.x, self.t, hyp);
        let k_q = self.gp.cross_covariances(q, tq);
        kc - k_q.iter().zip(&self.a).map(|(p, r)| p * r).sum::<f64>()
    }

    /// Moments with gradients in the query and, if `outer`, in `x`.
    pub fn evaluate(&self, q: &[f64], tq: f64, gamma: f64, outer: bool) -> FantasyEval {
        let d = q.len();
        let gp = self.gp;
        let hyp = gp.hyperparameters();
        let n = gp.len();

        let k_q = gp.cross_covariances(q, tq);
        let base_mean = gp.mean_offset()
            + k_q
                .iter()
                .zip(gp.solved_targets())
                .map(|(a, b)| a * b)
                .sum::<f64>();
        let mut b = k_q.clone();
        gp.solve_lower_in_place(&mut b);
        let base_var = (gp.prior_variance() - b.iter().map(|v| v * v).sum::<f64>()).max(0.0);
        gp.solve_upper_in_place(&mut b);

        let kc = covariance(q, tq, &self.x, self.t, hyp);
        let c = kc - k_q.iter().zip(&self.a).map(|(p, r)| p * r).sum::<f64>();
        let live = !self.degenerate();
        let (mean, variance) = if live {
            (
                base_mean + gamma * self.scale * c,
                (base_var - c * c / self.denom).max(0.0),
            )
        } else {
            (base_mean, base_var)
        };
        let std = variance.sqrt();
        let var_floor = 1e-15 * gp.prior_variance();

        // Query gradients: every term is a weighted sum of d k(q, x_i)/dq
        // plus a multiple of d k(q, x)/dq.
        let g_scale = if live { gamma * self.scale } else { 0.0 };
        let c_over_d = if live { c / self.denom } else { 0.0 };
        let alpha = gp.solved_targets();
        let w_mean: Vec<f64> = (0..n).map(|i| alpha[i] - g_scale * self.a[i]).collect();
        let mut d_mean_query = vec![0.0; d];
        gp.add_weighted_cross_gradient(&mut d_mean_query, q, &k_q, &w_mean);
        add_grad_wrt_first(&mut d_mean_query, g_scale, kc, q, &self.x, hyp);

        let mut d_std_query = vec![0.0; d];
        if variance > var_floor {
            // d var = -2 b.dk + 2 (c/D) a.dk - 2 (c/D) dkc
            let inv2s = 1.0 / (2.0 * std);
            let w_var: Vec<f64> = (0..n)
                .map(|i| (-2.0 * b[i] + 2.0 * c_over_d * self.a[i]) * inv2s)
                .collect();
            gp.add_weighted_cross_gradient(&mut d_std_query, q, &k_q, &w_var);
            add_grad_wrt_first(
                &mut d_std_query,
                -2.0 * c_over_d * inv2s,
                kc,
                q,
                &self.x,
                hyp,
            );
        }

        let (d_mean_outer, d_std_outer) = if outer && live {
            self.outer_gradients(q, kc, c, &b, gamma, variance, std)
        } else {
            (vec![0.0; d], vec![0.0; d])
        };

        FantasyEval {
            mean,
            std,
            d_mean_query,
            d_std_query,
            d_mean_outer,
            d_std_outer,
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn outer_gradients(
        &self,
        q: &[f64],
        kc: f64,
        c: f64,
        b: &[f64],
        gamma: f64,
        variance: f64,
        std: f64,
    ) -> (Vec<f64>, Vec<f64>) {
        let d = q.len();
        let gp = self.gp;
        let hyp = gp.hyperparameters();

        // dc/dx = dk(x, q)/dx - sum_i b_i dk(x, x_i)/dx
        let mut dc = vec![0.0; d];
        add_grad_wrt_first(&mut dc, 1.0, kc, &self.x, q, hyp);
        let neg_b: Vec<f64> = b.iter().map(|v| -v).collect();
        gp.add_weighted_cross_gradient(&mut dc, &self.x, &self.k_x, &neg_b);

        // dD/dx = d var_x/dx = -2 sum_i a_i dk(x, x_i)/dx
        let mut d_denom = vec![0.0; d];
        if self.var_x > 0.0 {
            let w: Vec<f64> = self.a.iter().map(|v| -2.0 * v).collect();
            gp.add_weighted_cross_gradient(&mut d_denom, &self.x, &self.k_x, &w);
        }

        let dm = self.denom;
        let d_scale: Vec<f64> = if self.observation_noise {
            d_denom
                .iter()
                .map(|v| -0.5 * v / (dm * dm.sqrt()))
                .collect()
        } else if self.var_x > 0.0 {
            let sx = self.var_x.sqrt();
            d_denom
                .iter()
                .map(|v| v / (2.0 * sx) / dm - sx * v / (dm * dm))
                .collect()
        } else {
            vec![0.0; d]
        };

        let d_mean: Vec<f64> = (0..d)
            .map(|i| gamma * (self.scale * dc[i] + c * d_scale[i]))
            .collect();
        let d_std: Vec<f64> = if variance > 1e-15 * gp.prior_variance() {
            (0..d)
                .map(|i| (-2.0 * c * dc[i] / dm + c * c * d_denom[i] / (dm * dm)) / (2.0 * std))
                .collect()
        } else {
            vec![0.0; d]
        };
        (d_mean, d_std)
    }
}

/// One fantasy draw viewed as a surrogate over queries.
#[derive(Debug, Clone, Copy)]
pub struct FantasySample<'a> {
    model: &'a FantasyModel<'a>,
    gamma: f64,
}

impl FantasySample<'_> {
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

impl Surrogate for FantasySample<'_> {
    fn dim(&self) -> usize {
        self.model.gp.dim()
    }

    fn moments(&self, x: &[f64], t: f64) -> PosteriorMoments {
        self.model.moments(x, t, self.gamma)
    }

    fn moments_with_gradient(&self, x: &[f64], t: f64) -> PosteriorGradient {
        let e = self.model.evaluate(x, t, self.gamma, false);
        PosteriorGradient {
            moments: PosteriorMoments {
                mean: e.mean,
                variance: e.std * e.std,
            },
            d_mean: e.d_mean_query,
            d_std: e.d_std_query,
        }
    }
}
