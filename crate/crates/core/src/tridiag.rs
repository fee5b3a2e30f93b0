//! Thomas elimination for the constant-coefficient zero-flux operator
//! `(1 + d) x_i - k (x_{i-1} - 2 x_i + x_{i+1})` with mirrored end rows.

use crate::error::{Error, Result};

/// Factorization of `I·(1 + decay) - coupling·Δ₁` on `n` cells, reused for
/// every line solved with the same step.
#[derive(Debug, Clone)]
pub struct NeumannLine {
    off: f64,
    /// Modified super-diagonal `c'_i` of the forward sweep.
    c_prime: Vec<f64>,
    /// Reciprocal pivots `1 / (b_i - a_i c'_{i-1})`.
    inv_pivot: Vec<f64>,
}

impl NeumannLine {
    /// `decay` is `dt·b`, `coupling` is `dt·a / h²`.
    pub fn new(n: usize, decay: f64, coupling: f64) -> Result<NeumannLine> {
        if n == 0 {
            return Err(Error::SolverFailure("empty line".into()));
        }
        if !(decay >= 0.0 && coupling >= 0.0 && decay.is_finite() && coupling.is_finite()) {
            return Err(Error::SolverFailure(format!(
                "operator coefficients must be finite and non-negative (decay {decay}, coupling {coupling})"
            )));
        }
        let off = -coupling;
        let diag = |i: usize| {
            let neighbours = if n == 1 {
                0.0
            } else if i == 0 || i + 1 == n {
                1.0
            } else {
                2.0
            };
            1.0 + decay + neighbours * coupling
        };
        let mut c_prime = vec![0.0; n];
        let mut inv_pivot = vec![0.0; n];
        let mut prev_c = 0.0;
        for i in 0..n {
            let lower = if i == 0 { 0.0 } else { off };
            let pivot = diag(i) - lower * prev_c;
            if !(pivot.is_finite() && pivot > 0.0) {
                return Err(Error::SolverFailure(format!("pivot {pivot} at row {i}")));
            }
            inv_pivot[i] = 1.0 / pivot;
            let upper = if i + 1 == n { 0.0 } else { off };
            c_prime[i] = upper * inv_pivot[i];
            prev_c = c_prime[i];
        }
        Ok(NeumannLine {
            off,
            c_prime,
            inv_pivot,
        })
    }

    pub fn len(&self) -> usize {
        self.c_prime.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c_prime.is_empty()
    }

    /// Solves in place; `x` holds the right-hand side on entry.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.len();
        debug_assert_eq!(x.len(), n);
        x[0] *= self.inv_pivot[0];
        for i in 1..n {
            x[i] = (x[i] - self.off * x[i - 1]) * self.inv_pivot[i];
        }
        for i in (0..n - 1).rev() {
            x[i] -= self.c_prime[i] * x[i + 1];
        }
    }

    /// Solves along a strided line of `buf` (e.g. a column of a row-major
    /// 2D array), using `scratch` of length `len()`.
    pub fn solve_strided(&self, buf: &mut [f64], start: usize, stride: usize, scratch: &mut [f64]) {
        let n = self.len();
        for (k, s) in scratch.iter_mut().enumerate().take(n) {
            *s = buf[start + k * stride];
        }
        self.solve_in_place(&mut scratch[..n]);
        for (k, s) in scratch.iter().enumerate().take(n) {
            buf[start + k * stride] = *s;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn apply(n: usize, decay: f64, k: f64, x: &[f64]) -> Vec<f64> {
        (0..n)
            .map(|i| {
                let l = if i == 0 { x[0] } else { x[i - 1] };
                let r = if i + 1 == n { x[n - 1] } else { x[i + 1] };
                (1.0 + decay) * x[i] - k * (l - 2.0 * x[i] + r)
            })
            .collect()
    }

    #[test]
    fn solves_the_operator_it_factors() {
        let n = 9;
        let x: Vec<f64> = (0..n).map(|i| 1.0 + (i as f64 * 0.7).sin()).collect();
        let rhs = apply(n, 0.3, 2.5, &x);
        let line = NeumannLine::new(n, 0.3, 2.5).unwrap();
        let mut sol = rhs.clone();
        line.solve_in_place(&mut sol);
        for (a, b) in sol.iter().zip(&x) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn constants_only_decay() {
        let line = NeumannLine::new(5, 0.5, 10.0).unwrap();
        let mut x = vec![3.0; 5];
        line.solve_in_place(&mut x);
        for v in x {
            assert!((v - 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn strided_matches_contiguous() {
        let line = NeumannLine::new(4, 0.1, 1.0).unwrap();
        let mut grid = vec![0.0; 12];
        for (i, v) in grid.iter_mut().enumerate() {
            *v = 1.0 + i as f64;
        }
        let mut col: Vec<f64> = (0..4).map(|k| grid[1 + 3 * k]).collect();
        line.solve_in_place(&mut col);
        let mut scratch = vec![0.0; 4];
        line.solve_strided(&mut grid, 1, 3, &mut scratch);
        for k in 0..4 {
            assert_eq!(grid[1 + 3 * k], col[k]);
        }
    }

    #[test]
    fn rejects_bad_coefficients() {
        assert!(NeumannLine::new(0, 0.0, 0.0).is_err());
        assert!(NeumannLine::new(3, -1.0, 0.0).is_err());
        assert!(NeumannLine::new(3, 0.0, f64::NAN).is_err());
    }
}
