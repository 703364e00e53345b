//! Packed lower-triangular Cholesky factor, row-major.
//!
//! Row `i` occupies `data[i(i+1)/2 .. i(i+1)/2 + i + 1]`, so appending a
//! row (rank-one extension) is a plain push.

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct PackedCholesky {
    n: usize,
    data: Vec<f64>,
}

#[inline]
fn row_start(i: usize) -> usize {
    i * (i + 1) / 2
}

impl PackedCholesky {
    pub fn empty() -> Self {
        Self {
            n: 0,
            data: Vec::new(),
        }
    }

    /// Factorizes a symmetric matrix given by `entry(i, j)` for `j <= i`.
    /// Returns the failing pivot index on a non-positive pivot.
    pub fn factorize(n: usize, entry: impl Fn(usize, usize) -> f64) -> Result<Self, usize> {
        let mut data = vec![0.0; row_start(n)];
        for i in 0..n {
            let ri = row_start(i);
            for j in 0..=i {
                let rj = row_start(j);
                let mut s = entry(i, j);
                for k in 0..j {
                    s -= data[ri + k] * data[rj + k];
                }
                if i == j {
                    if !(s > 0.0) || !s.is_finite() {
                        return Err(i);
                    }
                    data[ri + i] = s.sqrt();
                } else {
                    data[ri + j] = s / data[rj + j];
                }
            }
        }
        Ok(Self { n, data })
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        let r = row_start(i);
        &self.data[r..r + i + 1]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j > i {
            0.0
        } else {
            self.data[row_start(i) + j]
        }
    }

    /// Solves `L v = b` in place.
    pub fn solve_lower_in_place(&self, b: &mut [f64]) {
        debug_assert_eq!(b.len(), self.n);
        for i in 0..self.n {
            let row = self.row(i);
            let mut s = b[i];
            for (l, v) in row[..i].iter().zip(&b[..i]) {
                s -= l * v;
            }
            b[i] = s / row[i];
        }
    }

    /// Solves `L^T u = b` in place.
    pub fn solve_upper_in_place(&self, b: &mut [f64]) {
        debug_assert_eq!(b.len(), self.n);
        for i in (0..self.n).rev() {
            let row = self.row(i);
            let ui = b[i] / row[i];
            b[i] = ui;
            for (v, l) in b[..i].iter_mut().zip(&row[..i]) {
                *v -= l * ui;
            }
        }
    }

    /// Solves `(L L^T) u = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        self.solve_lower_in_place(b);
        self.solve_upper_in_place(b);
    }

    /// Appends the row for a new symmetric entry with cross terms `cross`
    /// (length n) and diagonal `diag`. Returns `None` on a non-positive pivot.
    pub fn extended(&self, cross: &[f64], diag: f64) -> Option<Self> {
        let mut l = cross.to_vec();
        self.solve_lower_in_place(&mut l);
        let pivot = diag - l.iter().map(|v| v * v).sum::<f64>();
        if !(pivot > 0.0) || !pivot.is_finite() {
            return None;
        }
        let mut data = Vec::with_capacity(self.data.len() + self.n + 1);
        data.extend_from_slice(&self.data);
        data.extend_from_slice(&l);
        data.push(pivot.sqrt());
        Some(Self {
            n: self.n + 1,
            data,
        })
    }

    pub fn log_det(&self) -> f64 {
        (0..self.n).map(|i| 2.0 * self.row(i)[i].ln()).sum()
    }

    /// Dense inverse of `L L^T` (column by column).
    pub fn inverse(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|j| {
                let mut e = vec![0.0; self.n];
                e[j] = 1.0;
                self.solve_in_place(&mut e);
                e
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spd(n: usize) -> Vec<Vec<f64>> {
        let mut a = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                a[i][j] =
                    1.0 / (1.0 + (i as f64 - j as f64).abs()) + if i == j { n as f64 } else { 0.0 };
            }
        }
        a
    }

    #[test]
    fn factor_reproduces_matrix() {
        let a = spd(6);
        let l = PackedCholesky::factorize(6, |i, j| a[i][j]).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let s: f64 = (0..6).map(|k| l.get(i, k) * l.get(j, k)).sum();
                assert!((s - a[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn extension_matches_full_factorization() {
        let a = spd(5);
        let l4 = PackedCholesky::factorize(4, |i, j| a[i][j]).unwrap();
        let ext = l4.extended(&a[4][..4], a[4][4]).unwrap();
        let full = PackedCholesky::factorize(5, |i, j| a[i][j]).unwrap();
        for (p, q) in ext.data.iter().zip(&full.data) {
            assert!((p - q).abs() < 1e-13);
        }
    }

    #[test]
    fn solve_roundtrip() {
        let a = spd(4);
        let l = PackedCholesky::factorize(4, |i, j| a[i][j]).unwrap();
        let b = vec![1.0, -2.0, 0.5, 3.0];
        let mut x = b.clone();
        l.solve_in_place(&mut x);
        for i in 0..4 {
            let s: f64 = (0..4).map(|j| a[i][j] * x[j]).sum();
            assert!((s - b[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn non_positive_pivot_is_reported() {
        let a = [[1.0, 2.0], [2.0, 1.0]];
        assert_eq!(PackedCholesky::factorize(2, |i, j| a[i][j]).unwrap_err(), 1);
    }
}
