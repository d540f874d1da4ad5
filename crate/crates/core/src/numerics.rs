//! Uniform grids, finite-difference operators and trapezoidal quadrature.
//!
//! Every other module samples its fields on a [`Grid1D`] (or a pair of them
//! for phase space). Derivative stencils are second order; the second
//! derivative treats values beyond the grid as zero, which is the hard-wall
//! convention the Hamiltonian discretization relies on.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid needs at least 3 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("grid upper bound {hi} must exceed lower bound {lo}")]
    EmptyInterval { lo: f64, hi: f64 },
    #[error("grid bounds must be finite (lo = {lo}, hi = {hi})")]
    NonFinite { lo: f64, hi: f64 },
    #[error("field has {got} values but grid has {expected} nodes")]
    LengthMismatch { expected: usize, got: usize },
    #[error("field value at node {0} is not finite")]
    NonFiniteValue(usize),
}

/// Uniform lattice `lo, lo + h, ..., hi` with `n` nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    lo: f64,
    hi: f64,
    n: usize,
    h: f64,
}

impl Grid1D {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self, GridError> {
        if !lo.is_finite() || !hi.is_finite() {
            return Err(GridError::NonFinite { lo, hi });
        }
        if n < 3 {
            return Err(GridError::TooFewNodes(n));
        }
        if hi <= lo {
            return Err(GridError::EmptyInterval { lo, hi });
        }
        let h = (hi - lo) / (n - 1) as f64;
        Ok(Self { lo, hi, n, h })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    /// Coordinate of node `i`. The last node returns `hi` exactly.
    pub fn node(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.hi
        } else {
            self.lo + i as f64 * self.h
        }
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.node(i))
    }

    /// Trapezoid weight (control-volume width) of node `i`.
    pub fn weight(&self, i: usize) -> f64 {
        if i == 0 || i + 1 == self.n {
            0.5 * self.h
        } else {
            self.h
        }
    }

    /// Samples `f` at every node.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            grid: *self,
            values: self.nodes().map(f).collect(),
        }
    }

    /// Index of the node closest to `x` (clamped to the grid).
    pub fn nearest(&self, x: f64) -> usize {
        let t = ((x - self.lo) / self.h).round();
        t.clamp(0.0, (self.n - 1) as f64) as usize
    }
}

/// Shorthand for [`Grid1D::new`].
pub fn build_grid(lo: f64, hi: f64, n: usize) -> Result<Grid1D, GridError> {
    Grid1D::new(lo, hi, n)
}

/// Tensor-product lattice for phase space. Values indexed `i * p.len() + j`
/// with `i` along `q` and `j` along `p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    pub q: Grid1D,
    pub p: Grid1D,
}

impl Grid2D {
    pub fn new(q: Grid1D, p: Grid1D) -> Self {
        Self { q, p }
    }

    pub fn len(&self) -> usize {
        self.q.len() * self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.p.len() + j
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.q.weight(i) * self.p.weight(j)
    }

    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for q in self.q.nodes() {
            for p in self.p.nodes() {
                out.push(f(q, p));
            }
        }
        out
    }
}

/// Real samples on a [`Grid1D`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid1D,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Grid1D, values: Vec<f64>) -> Result<Self, GridError> {
        if values.len() != grid.len() {
            return Err(GridError::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(GridError::NonFiniteValue(i));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid1D) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub(crate) fn from_raw(grid: Grid1D, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field::from_raw(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.values)
    }
}

pub(crate) fn max_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// First derivative: centered in the interior, one-sided second order at the
/// two boundary nodes.
pub fn gradient(f: &Field) -> Field {
    Field::from_raw(f.grid, gradient_slice(&f.values, f.grid.spacing()))
}

pub(crate) fn gradient_slice(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![0.0; n];
    let inv2h = 0.5 / h;
    for i in 1..n - 1 {
        out[i] = (f[i + 1] - f[i - 1]) * inv2h;
    }
    out[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) * inv2h;
    out[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) * inv2h;
    out
}

/// Three-point second derivative with zero values assumed outside the grid.
pub fn second_derivative(f: &Field) -> Field {
    let v = &f.values;
    let n = v.len();
    let inv_h2 = 1.0 / (f.grid.spacing() * f.grid.spacing());
    let out = (0..n)
        .map(|i| {
            let left = if i == 0 { 0.0 } else { v[i - 1] };
            let right = if i + 1 == n { 0.0 } else { v[i + 1] };
            (left - 2.0 * v[i] + right) * inv_h2
        })
        .collect();
    Field::from_raw(f.grid, out)
}

/// Trapezoidal rule over the whole grid.
pub fn integrate(f: &Field) -> f64 {
    integrate_slice(&f.values, &f.grid)
}

pub(crate) fn integrate_slice(values: &[f64], grid: &Grid1D) -> f64 {
    let n = values.len();
    let inner: f64 = values[1..n - 1].iter().sum();
    grid.spacing() * (inner + 0.5 * (values[0] + values[n - 1]))
}

/// Tensor-product trapezoidal rule on a [`Grid2D`].
pub fn integrate_2d(values: &[f64], grid: &Grid2D) -> f64 {
    let np = grid.p.len();
    (0..grid.q.len())
        .map(|i| grid.q.weight(i) * integrate_slice(&values[i * np..(i + 1) * np], &grid.p))
        .sum()
}
