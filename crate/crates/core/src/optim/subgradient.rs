//! Forward-mode (sub)gradients of piecewise-smooth functions.
//!
//! At `|x|` with `x = 0` the right branch (`+1`) is used; at ties of
//! [`Dual::max`] the first argument wins.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual {
    pub value: f64,
    pub deriv: f64,
}

impl Dual {
    pub fn constant(value: f64) -> Self {
        Self { value, deriv: 0.0 }
    }

    pub fn variable(value: f64) -> Self {
        Self { value, deriv: 1.0 }
    }

    pub fn abs(self) -> Self {
        if self.value >= 0.0 {
            self
        } else {
            -self
        }
    }

    /// `max(self, other)`; `self` wins ties.
    pub fn max(self, other: Self) -> Self {
        if self.value >= other.value {
            self
        } else {
            other
        }
    }

    pub fn min(self, other: Self) -> Self {
        if self.value <= other.value {
            self
        } else {
            other
        }
    }

    pub fn sin(self) -> Self {
        Self {
            value: self.value.sin(),
            deriv: self.deriv * self.value.cos(),
        }
    }

    pub fn cos(self) -> Self {
        Self {
            value: self.value.cos(),
            deriv: -self.deriv * self.value.sin(),
        }
    }

    pub fn exp(self) -> Self {
        let e = self.value.exp();
        Self {
            value: e,
            deriv: self.deriv * e,
        }
    }

    pub fn powi(self, n: i32) -> Self {
        Self {
            value: self.value.powi(n),
            deriv: self.deriv * n as f64 * self.value.powi(n - 1),
        }
    }

    pub fn sqrt(self) -> Self {
        let s = self.value.sqrt();
        Self {
            value: s,
            deriv: self.deriv / (2.0 * s),
        }
    }
}

impl From<f64> for Dual {
    fn from(v: f64) -> Self {
        Dual::constant(v)
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, o: Dual) -> Dual {
        Dual {
            value: self.value + o.value,
            deriv: self.deriv + o.deriv,
        }
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, o: Dual) -> Dual {
        Dual {
            value: self.value - o.value,
            deriv: self.deriv - o.deriv,
        }
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        Dual {
            value: self.value * o.value,
            deriv: self.deriv * o.value + self.value * o.deriv,
        }
    }
}

impl Div for Dual {
    type Output = Dual;
    fn div(self, o: Dual) -> Dual {
        Dual {
            value: self.value / o.value,
            deriv: (self.deriv * o.value - self.value * o.deriv) / (o.value * o.value),
        }
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Dual {
            value: -self.value,
            deriv: -self.deriv,
        }
    }
}

/// A member of the subdifferential of `f` at `x`, one forward pass per coordinate.
pub fn subgradient_probe<F>(f: F, x: &[f64]) -> Vec<f64>
where
    F: Fn(&[Dual]) -> Dual,
{
    (0..x.len())
        .map(|i| {
            let args: Vec<Dual> = x
                .iter()
                .enumerate()
                .map(|(j, &v)| {
                    if i == j {
                        Dual::variable(v)
                    } else {
                        Dual::constant(v)
                    }
                })
                .collect();
            f(&args).deriv
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sin_abs_at_kink_takes_right_branch() {
        let g = subgradient_probe(|x| x[0].abs().sin(), &[0.0]);
        assert_eq!(g, vec![1.0]);
        let g = subgradient_probe(|x| x[0].abs().sin(), &[-0.5]);
        assert!((g[0] + 0.5f64.cos()).abs() < 1e-15);
    }

    #[test]
    fn max_tie_takes_first_argument() {
        let f = |x: &[Dual]| x[0].max(x[0] * x[0]);
        assert_eq!(subgradient_probe(f, &[1.0]), vec![1.0]);
        assert_eq!(subgradient_probe(f, &[2.0]), vec![4.0]);
        assert_eq!(subgradient_probe(f, &[0.0]), vec![1.0]);
        assert_eq!(subgradient_probe(f, &[0.5]), vec![1.0]);
    }

    #[test]
    fn multivariate_chain_rule() {
        let g = subgradient_probe(|x| x[0] * x[1].exp() + x[1].powi(3), &[2.0, 0.0]);
        assert_eq!(g, vec![1.0, 2.0]);
    }
}
