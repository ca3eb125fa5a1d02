//! Uniform 1D meshes, nodal fields, trapezoidal quadrature, and the
//! Bernoulli function used by the exponential-fitting assembly.

use crate::error::{Error, Result};

/// Uniform partition of `[x_left, x_right]` into `n_cells` cells.
///
/// Node `i` sits at `x_left + i * h` for `i = 0..=n_cells`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mesh1D {
    x_left: f64,
    x_right: f64,
    n_cells: usize,
}

impl Mesh1D {
    pub fn new(x_left: f64, x_right: f64, n_cells: usize) -> Result<Self> {
        if !x_left.is_finite() || !x_right.is_finite() || x_right <= x_left {
            return Err(Error::InvalidExtent { x_left, x_right });
        }
        if n_cells < 2 {
            return Err(Error::TooFewCells { n_cells });
        }
        Ok(Mesh1D {
            x_left,
            x_right,
            n_cells,
        })
    }

    pub fn x_left(&self) -> f64 {
        self.x_left
    }

    pub fn x_right(&self) -> f64 {
        self.x_right
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn n_nodes(&self) -> usize {
        self.n_cells + 1
    }

    /// Cell width.
    pub fn h(&self) -> f64 {
        (self.x_right - self.x_left) / self.n_cells as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        debug_assert!(i <= self.n_cells);
        self.x_left + i as f64 * self.h()
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_nodes()).map(move |i| self.node(i))
    }

    /// Trapezoidal quadrature weight of node `i`: `h` inside, `h/2` at the ends.
    pub fn lumped_mass(&self, i: usize) -> f64 {
        let h = self.h();
        if i == 0 || i == self.n_cells {
            0.5 * h
        } else {
            h
        }
    }
}

/// Build a uniform mesh. Thin named wrapper around [`Mesh1D::new`].
pub fn build_mesh(x_left: f64, x_right: f64, n_cells: usize) -> Result<Mesh1D> {
    Mesh1D::new(x_left, x_right, n_cells)
}

/// One finite value per mesh node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalField {
    mesh: Mesh1D,
    values: Vec<f64>,
}

impl NodalField {
    pub fn new(mesh: Mesh1D, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.n_nodes() {
            return Err(Error::LengthMismatch {
                len: values.len(),
                expected: mesh.n_nodes(),
            });
        }
        for (index, &value) in values.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFinite { index, value });
            }
        }
        Ok(NodalField { mesh, values })
    }

    pub fn constant(mesh: Mesh1D, value: f64) -> Result<Self> {
        Self::new(mesh, vec![value; mesh.n_nodes()])
    }

    /// Sample `f(x)` at every node.
    pub fn from_fn(mesh: Mesh1D, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(mesh, mesh.nodes().map(f).collect())
    }

    pub fn mesh(&self) -> Mesh1D {
        self.mesh
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Replace the stored values, re-checking length and finiteness.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.mesh, values)
    }

    /// Trapezoidal rule over the mesh: `h * (f_0/2 + f_1 + ... + f_{N-1} + f_N/2)`.
    pub fn integrate(&self) -> f64 {
        integrate(self)
    }

    /// Max-norm of the values.
    pub fn linf(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |m, &v| m.min(v))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v))
    }
}

/// Trapezoidal integral of a nodal field over its mesh.
pub fn integrate(field: &NodalField) -> f64 {
    let v = field.values();
    let n = v.len();
    let interior: f64 = v[1..n - 1].iter().sum();
    field.mesh().h() * (0.5 * v[0] + interior + 0.5 * v[n - 1])
}

/// Max-norm of the difference of two equally long slices.
pub fn linf_diff(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Switch point below which `bernoulli` uses its Taylor expansion.
pub const BERNOULLI_SERIES_CUT: f64 = 1e-5;

/// The exponential-fitting kernel `B(t) = t / (e^t - 1)`.
///
/// Near zero the direct form cancels catastrophically, so `|t| < 1e-5`
/// evaluates the series `1 - t/2 + t^2/12`. Satisfies `B(-t) = B(t) + t`,
/// is strictly positive, and saturates to `0` / `-t` for large `+t` / `-t`.
pub fn bernoulli(t: f64) -> f64 {
    debug_assert!(t.is_finite());
    if t.abs() < BERNOULLI_SERIES_CUT {
        1.0 - 0.5 * t + t * t / 12.0
    } else {
        let em1 = t.exp_m1();
        if em1.is_infinite() {
            // t beyond ~709: e^t overflows, limit is 0
            0.0
        } else {
            t / em1
        }
    }
}
