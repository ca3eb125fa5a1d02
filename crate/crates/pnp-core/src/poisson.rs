//! Piecewise-linear FEM solve of the Poisson equation
//! `(epsilon phi')' = -(z_n q c_n + z_p q c_p)` under Dirichlet or Robin
//! boundary conditions.

use crate::error::{Error, Result};
use crate::mesh::NodalField;
use crate::nernst_planck::PhysicalParams;
use crate::tridiag::{TridiagonalMatrix, TridiagonalSystem};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BcKind {
    Dirichlet,
    Robin,
}

impl BcKind {
    pub fn name(&self) -> &'static str {
        match self {
            BcKind::Dirichlet => "dirichlet",
            BcKind::Robin => "robin",
        }
    }
}

/// Boundary condition for the potential. Robin enforces
/// `phi + alpha * dphi/dnu = phi_0` with `phi_0` built from
/// `left_value` / `right_value`; `alpha = 0` reproduces Dirichlet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonBC {
    pub kind: BcKind,
    pub left_value: f64,
    pub right_value: f64,
    pub alpha: f64,
}

impl PoissonBC {
    pub fn dirichlet(left_value: f64, right_value: f64) -> Self {
        PoissonBC {
            kind: BcKind::Dirichlet,
            left_value,
            right_value,
            alpha: 0.0,
        }
    }

    pub fn robin(left_value: f64, right_value: f64, alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "alpha",
                reason: format!("Robin length scale must be finite and >= 0, got {alpha}"),
            });
        }
        Ok(PoissonBC {
            kind: BcKind::Robin,
            left_value,
            right_value,
            alpha,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == BcKind::Robin {
            Self::robin(self.left_value, self.right_value, self.alpha).map(|_| ())
        } else {
            Ok(())
        }
    }
}

/// Assemble the FEM system for the potential. Exposed so tests can inspect
/// the load vector's sign convention directly.
///
/// The load is the trapezoid-lumped nodal charge `q (z_n c_n + z_p c_p)`;
/// Dirichlet rows are replaced by identity rows carrying the prescribed
/// value, Robin adds `epsilon/alpha` to the boundary diagonal and
/// `epsilon/alpha * phi_0` to the boundary load.
pub fn poisson_system(
    c_n: &NodalField,
    c_p: &NodalField,
    params: &PhysicalParams,
    bc: &PoissonBC,
) -> Result<TridiagonalSystem> {
    if c_n.mesh() != c_p.mesh() {
        return Err(Error::MeshMismatch);
    }
    bc.validate()?;
    let mesh = c_n.mesh();
    let n = mesh.n_nodes();
    let h = mesh.h();
    let k = params.epsilon / h;

    let mut m = TridiagonalMatrix::zeros(n);
    for i in 0..n - 1 {
        m.diag_mut()[i] += k;
        m.diag_mut()[i + 1] += k;
        m.lower_mut()[i] -= k;
        m.upper_mut()[i] -= k;
    }

    let mut rhs = vec![0.0; n];
    for i in 0..n {
        let charge = params.q * (params.z_n * c_n.values()[i] + params.z_p * c_p.values()[i]);
        rhs[i] = mesh.lumped_mass(i) * charge;
    }

    let dirichlet = bc.kind == BcKind::Dirichlet || bc.alpha == 0.0;
    if dirichlet {
        m.diag_mut()[0] = 1.0;
        m.upper_mut()[0] = 0.0;
        rhs[0] = bc.left_value;
        m.diag_mut()[n - 1] = 1.0;
        m.lower_mut()[n - 2] = 0.0;
        rhs[n - 1] = bc.right_value;
    } else {
        let penalty = params.epsilon / bc.alpha;
        m.diag_mut()[0] += penalty;
        rhs[0] += penalty * bc.left_value;
        m.diag_mut()[n - 1] += penalty;
        rhs[n - 1] += penalty * bc.right_value;
    }

    TridiagonalSystem::new(m, rhs)
}

/// Solve for the potential generated by the two charge densities.
pub fn solve_poisson(
    c_n: &NodalField,
    c_p: &NodalField,
    params: &PhysicalParams,
    bc: &PoissonBC,
) -> Result<NodalField> {
    let system = poisson_system(c_n, c_p, params, bc)?;
    let phi = system.solve()?;
    NodalField::new(c_n.mesh(), phi)
}
