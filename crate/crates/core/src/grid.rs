//! Uniform cell-centered grids on a box, the zero-flux Laplacian, quadrature
//! and averaged norms.
//!
//! Boundaries are handled with mirror ghost cells: the ghost value equals the
//! adjacent interior value, so the face flux through the wall is exactly zero.
//! The resulting discrete Laplacian is symmetric, negative semidefinite and
//! sums to zero over the grid.

use crate::error::{Error, Result};

/// Spatial dimension of a [`Grid`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dim {
    One,
    Two,
}

impl Dim {
    pub fn count(self) -> usize {
        match self {
            Dim::One => 1,
            Dim::Two => 2,
        }
    }
}

/// A box `[0, lx] (x [0, ly])` split into `nx (x ny)` equal cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: Dim,
    n: [usize; 2],
    length: [f64; 2],
}

impl Grid {
    pub const MIN_CELLS: usize = 3;

    pub fn new_1d(n: usize, length: f64) -> Result<Grid> {
        Grid::new(Dim::One, [n, 1], [length, 1.0])
    }

    pub fn new_2d(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Grid> {
        Grid::new(Dim::Two, [nx, ny], [lx, ly])
    }

    /// `n` and `length` are per axis; for 1D only the first entry is used.
    pub fn new(dim: Dim, n: [usize; 2], length: [f64; 2]) -> Result<Grid> {
        let axes = dim.count();
        for ax in 0..axes {
            if n[ax] < Self::MIN_CELLS {
                return Err(Error::InvalidGrid(format!(
                    "need at least {} cells per axis, got {}",
                    Self::MIN_CELLS,
                    n[ax]
                )));
            }
            if !(length[ax].is_finite() && length[ax] > 0.0) {
                return Err(Error::InvalidGrid(format!(
                    "axis length must be positive and finite, got {}",
                    length[ax]
                )));
            }
        }
        let (n, length) = match dim {
            Dim::One => ([n[0], 1], [length[0], 1.0]),
            Dim::Two => (n, length),
        };
        Ok(Grid { dim, n, length })
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    /// Cells along `axis`.
    pub fn n(&self, axis: usize) -> usize {
        self.n[axis]
    }

    pub fn length(&self, axis: usize) -> f64 {
        self.length[axis]
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.length[axis] / self.n[axis] as f64
    }

    /// Smallest spacing over the active axes.
    pub fn min_spacing(&self) -> f64 {
        (0..self.dim.count())
            .map(|ax| self.spacing(ax))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn len(&self) -> usize {
        self.n[0] * self.n[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Volume of one cell, `h^dim`.
    pub fn cell_volume(&self) -> f64 {
        (0..self.dim.count()).map(|ax| self.spacing(ax)).product()
    }

    /// `|Ω|`.
    pub fn measure(&self) -> f64 {
        (0..self.dim.count()).map(|ax| self.length[ax]).product()
    }

    /// Cell-center coordinates `(i + 1/2) h` along `axis`.
    pub fn centers(&self, axis: usize) -> Vec<f64> {
        let h = self.spacing(axis);
        (0..self.n[axis]).map(|i| (i as f64 + 0.5) * h).collect()
    }

    /// Row-major index; `i` runs along x (fastest), `j` along y.
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n[0] + i
    }

    /// Samples `f(x, y)` at cell centers (`y = 0` in 1D).
    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> Field {
        let xs = self.centers(0);
        let ys = match self.dim {
            Dim::One => vec![0.0],
            Dim::Two => self.centers(1),
        };
        let mut values = Vec::with_capacity(self.len());
        for &y in &ys {
            for &x in &xs {
                values.push(f(x, y));
            }
        }
        Field { grid: *self, values }
    }
}

/// Per-cell values on a [`Grid`], row-major in 2D.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Field> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "field has {} values, grid has {} cells",
                values.len(),
                grid.len()
            )));
        }
        Ok(Field { grid, values })
    }

    pub fn constant(grid: Grid, value: f64) -> Field {
        Field {
            grid,
            values: vec![value; grid.len()],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Maximum; NaN-propagating so a poisoned field never looks bounded.
    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, |m, x| if x.is_nan() || m.is_nan() { f64::NAN } else { m.max(x) })
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|x| x.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            grid: self.grid,
            values: self.values.iter().map(|&x| f(x)).collect(),
        }
    }
}

/// Sum with a fixed pairwise tree. The tree depends only on the length, so
/// the result is reproducible bit for bit.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 16;
    if values.len() <= LEAF {
        let mut s = 0.0;
        for &x in values {
            s += x;
        }
        s
    } else {
        let mid = values.len() / 2;
        pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
    }
}

/// Second-order zero-flux Laplacian.
pub fn laplacian(field: &Field) -> Field {
    let grid = field.grid;
    let mut out = vec![0.0; grid.len()];
    laplacian_into(&grid, &field.values, &mut out);
    Field { grid, values: out }
}

pub(crate) fn laplacian_into(grid: &Grid, u: &[f64], out: &mut [f64]) {
    let nx = grid.n(0);
    let ny = grid.n(1);
    let inv_hx2 = 1.0 / (grid.spacing(0) * grid.spacing(0));
    for j in 0..ny {
        let row = &u[j * nx..(j + 1) * nx];
        let dst = &mut out[j * nx..(j + 1) * nx];
        for i in 0..nx {
            let left = if i == 0 { row[0] } else { row[i - 1] };
            let right = if i + 1 == nx { row[nx - 1] } else { row[i + 1] };
            dst[i] = ((left - row[i]) + (right - row[i])) * inv_hx2;
        }
    }
    if grid.dim() == Dim::Two {
        let inv_hy2 = 1.0 / (grid.spacing(1) * grid.spacing(1));
        for j in 0..ny {
            let jd = if j == 0 { 0 } else { j - 1 };
            let ju = if j + 1 == ny { ny - 1 } else { j + 1 };
            for i in 0..nx {
                let c = u[j * nx + i];
                out[j * nx + i] += ((u[jd * nx + i] - c) + (u[ju * nx + i] - c)) * inv_hy2;
            }
        }
    }
}

/// Midpoint quadrature `Σ values · h^dim`.
pub fn integrate_field(field: &Field) -> f64 {
    pairwise_sum(&field.values) * field.grid.cell_volume()
}

/// Norm order for [`field_norm`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormOrder {
    /// Finite `p >= 1`.
    L(f64),
    Inf,
}

/// Averaged `L^p` norm `((1/|Ω|) ∫ |f|^p)^(1/p)`, or the max modulus.
pub fn field_norm(field: &Field, order: NormOrder) -> Result<f64> {
    match order {
        NormOrder::Inf => Ok(field.values.iter().fold(0.0, |m: f64, x| m.max(x.abs()))),
        NormOrder::L(p) => {
            if !(p >= 1.0 && p.is_finite()) {
                return Err(Error::PreconditionViolated(format!(
                    "norm order must be >= 1, got {p}"
                )));
            }
            let powered: Vec<f64> = field.values.iter().map(|x| x.abs().powf(p)).collect();
            let mean = pairwise_sum(&powered) * field.grid.cell_volume() / field.grid.measure();
            Ok(mean.powf(1.0 / p))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn rejects_tiny_or_degenerate_grids() {
        assert!(Grid::new_1d(2, 1.0).is_err());
        assert!(Grid::new_1d(8, 0.0).is_err());
        assert!(Grid::new_2d(8, 2, 1.0, 1.0).is_err());
        assert!(Grid::new_1d(3, 1.0).is_ok());
    }

    #[test]
    fn centers_are_offset_by_half_a_cell() {
        let g = Grid::new_1d(4, 2.0).unwrap();
        assert_eq!(g.centers(0), vec![0.25, 0.75, 1.25, 1.75]);
        assert_eq!(g.measure(), 2.0);
    }

    #[test]
    fn constant_field_is_harmonic() {
        let g = Grid::new_2d(5, 7, 1.0, 3.0).unwrap();
        let lap = laplacian(&Field::constant(g, 3.25));
        assert!(lap.values().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn three_point_stencil() {
        let g = Grid::new_1d(3, 3.0).unwrap();
        let f = Field::new(g, vec![1.0, 2.0, 4.0]).unwrap();
        let lap = laplacian(&f);
        assert_eq!(lap.values()[1], 1.0);
        // mirror ghosts: (u1 - u0)/h², (u1 - u2)/h²
        assert_eq!(lap.values()[0], 1.0);
        assert_eq!(lap.values()[2], -2.0);
    }

    #[test]
    fn cosine_is_a_discrete_eigenfunction() {
        for n in [8usize, 17, 64] {
            for k in 1..4 {
                let len = 1.7;
                let g = Grid::new_1d(n, len).unwrap();
                let h = g.spacing(0);
                let f = g.sample(|x, _| (k as f64 * PI * x / len).cos());
                let lam = 2.0 / (h * h) * (1.0 - (k as f64 * PI * h / len).cos());
                let lap = laplacian(&f);
                for (l, u) in lap.values().iter().zip(f.values()) {
                    assert!((l + lam * u).abs() <= 1e-12 * lam.max(1.0), "n={n} k={k}");
                }
            }
        }
    }

    #[test]
    fn integral_of_one_is_the_measure() {
        let g = Grid::new_1d(10, 2.0).unwrap();
        assert!((integrate_field(&Field::constant(g, 1.0)) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn cosine_integrates_to_zero() {
        for n in [16usize, 32, 100] {
            let g = Grid::new_1d(n, 1.0).unwrap();
            let h = g.spacing(0);
            let f = g.sample(|x, _| (PI * x).cos());
            assert!(integrate_field(&f).abs() < h * h);
        }
    }

    #[test]
    fn norms_by_hand() {
        let g = Grid::new_1d(3, 3.0).unwrap();
        let f = Field::constant(g, 3.0);
        for p in [1.0, 2.0, 3.5] {
            assert!((field_norm(&f, NormOrder::L(p)).unwrap() - 3.0).abs() < 1e-14);
        }
        // below the public minimum of 3 cells, built directly
        let g2 = Grid {
            dim: Dim::One,
            n: [2, 1],
            length: [2.0, 1.0],
        };
        let f = Field::new(g2, vec![3.0, -4.0]).unwrap();
        assert!((field_norm(&f, NormOrder::L(2.0)).unwrap() - 12.5f64.sqrt()).abs() < 1e-14);
        assert_eq!(field_norm(&f, NormOrder::Inf).unwrap(), 4.0);
        assert!(field_norm(&f, NormOrder::L(0.5)).is_err());
    }

    #[test]
    fn pairwise_sum_is_exact_on_integers() {
        let v: Vec<f64> = (1..=1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 500500.0);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }

    #[test]
    fn max_propagates_nan() {
        let g = Grid::new_1d(3, 1.0).unwrap();
        let f = Field::new(g, vec![1.0, f64::NAN, 2.0]).unwrap();
        assert!(f.max().is_nan());
    }
}
