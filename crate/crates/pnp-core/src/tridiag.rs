//! Tridiagonal matrices and the Thomas direct solver.
//!
//! Every linear system in this crate (Poisson stiffness, lumped-mass plus
//! exponential-fitting stiffness) is tridiagonal and diagonally dominant, so
//! forward elimination without pivoting is safe; a vanishing pivot is still
//! detected and reported rather than assumed away.

use crate::error::{Error, Result};

/// Pivot magnitudes below this are treated as singular.
pub const PIVOT_MIN: f64 = 1e-300;

/// Square tridiagonal matrix: `lower`/`upper` have length `n - 1`, `diag` has `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalMatrix {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
}

impl TridiagonalMatrix {
    pub fn new(lower: Vec<f64>, diag: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let n = diag.len();
        if n < 1 || lower.len() != n - 1 || upper.len() != n - 1 {
            return Err(Error::BadDimensions {
                lower: lower.len(),
                diag: n,
                upper: upper.len(),
                rhs: n,
            });
        }
        Ok(TridiagonalMatrix { lower, diag, upper })
    }

    pub fn zeros(n: usize) -> Self {
        TridiagonalMatrix {
            lower: vec![0.0; n.saturating_sub(1)],
            diag: vec![0.0; n],
            upper: vec![0.0; n.saturating_sub(1)],
        }
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub(crate) fn lower_mut(&mut self) -> &mut [f64] {
        &mut self.lower
    }

    pub(crate) fn diag_mut(&mut self) -> &mut [f64] {
        &mut self.diag
    }

    pub(crate) fn upper_mut(&mut self) -> &mut [f64] {
        &mut self.upper
    }

    /// Matrix-vector product.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n();
        debug_assert_eq!(x.len(), n);
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut v = self.diag[i] * x[i];
            if i > 0 {
                v += self.lower[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                v += self.upper[i] * x[i + 1];
            }
            y[i] = v;
        }
        y
    }

    /// Per-column sums; zero columns mean a mass-conserving operator.
    pub fn column_sums(&self) -> Vec<f64> {
        let n = self.n();
        let mut s = vec![0.0; n];
        for j in 0..n {
            s[j] = self.diag[j];
            if j > 0 {
                s[j] += self.upper[j - 1];
            }
            if j + 1 < n {
                s[j] += self.lower[j];
            }
        }
        s
    }

    /// `self + scale * other`, dimension-checked.
    pub fn add_scaled(&self, other: &TridiagonalMatrix, scale: f64) -> Result<TridiagonalMatrix> {
        if self.n() != other.n() {
            return Err(Error::BadDimensions {
                lower: other.lower.len(),
                diag: other.diag.len(),
                upper: other.upper.len(),
                rhs: self.n(),
            });
        }
        let comb = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x + scale * y).collect();
        Ok(TridiagonalMatrix {
            lower: comb(&self.lower, &other.lower),
            diag: comb(&self.diag, &other.diag),
            upper: comb(&self.upper, &other.upper),
        })
    }
}

/// A tridiagonal matrix paired with a right-hand side.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalSystem {
    pub matrix: TridiagonalMatrix,
    pub rhs: Vec<f64>,
}

impl TridiagonalSystem {
    pub fn new(matrix: TridiagonalMatrix, rhs: Vec<f64>) -> Result<Self> {
        if rhs.len() != matrix.n() {
            return Err(Error::BadDimensions {
                lower: matrix.lower.len(),
                diag: matrix.diag.len(),
                upper: matrix.upper.len(),
                rhs: rhs.len(),
            });
        }
        Ok(TridiagonalSystem { matrix, rhs })
    }

    pub fn solve(&self) -> Result<Vec<f64>> {
        solve_tridiagonal(self)
    }
}

/// Thomas algorithm: forward elimination, back substitution.
pub fn solve_tridiagonal(system: &TridiagonalSystem) -> Result<Vec<f64>> {
    let n = system.matrix.n();
    let a = system.matrix.lower();
    let b = system.matrix.diag();
    let c = system.matrix.upper();

    let mut c_prime = vec![0.0; n];
    let mut d_prime = vec![0.0; n];

    if b[0].abs() < PIVOT_MIN {
        return Err(Error::SingularPivot { row: 0, value: b[0] });
    }
    if n > 1 {
        c_prime[0] = c[0] / b[0];
    }
    d_prime[0] = system.rhs[0] / b[0];

    for i in 1..n {
        let pivot = b[i] - a[i - 1] * c_prime[i - 1];
        if pivot.abs() < PIVOT_MIN {
            return Err(Error::SingularPivot {
                row: i,
                value: pivot,
            });
        }
        if i + 1 < n {
            c_prime[i] = c[i] / pivot;
        }
        d_prime[i] = (system.rhs[i] - a[i - 1] * d_prime[i - 1]) / pivot;
    }

    let mut x = d_prime;
    for i in (0..n - 1).rev() {
        x[i] -= c_prime[i] * x[i + 1];
    }
    Ok(x)
}
