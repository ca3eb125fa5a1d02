//! Physical parameters, cross-diffusion coupling coefficients, the per-point
//! friction matrix, and edge-averaged exponential-fitting assembly of the
//! Nernst-Planck operators.

use crate::error::{Error, Result};
use crate::mesh::{bernoulli, NodalField};
use crate::tridiag::TridiagonalMatrix;

/// Concentrations in `[-NEG_CONC_TOL, 0)` are treated as exact zeros inside
/// coefficient evaluation; anything more negative is an error.
pub const NEG_CONC_TOL: f64 = 1e-10;

/// Coefficient fields more negative than this are rejected by the assembler.
pub const NEG_COEFF_TOL: f64 = 1e-14;

/// Mobility average used for the inter-species drag coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MobilityAverage {
    Arithmetic,
    Harmonic,
    Geometric,
}

impl MobilityAverage {
    pub fn name(&self) -> &'static str {
        match self {
            MobilityAverage::Arithmetic => "arithmetic",
            MobilityAverage::Harmonic => "harmonic",
            MobilityAverage::Geometric => "geometric",
        }
    }
}

/// Which Nernst-Planck coupling to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Classical,
    Modified,
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Classical => "classical",
            ModelKind::Modified => "modified",
        }
    }
}

/// Diffusivities, valences, charge/thermal groups, dielectric constant, and
/// the drag-model selector. `drag_average = None` means drag off, which
/// forces classical coupling regardless of `model`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    pub d_n: f64,
    pub d_p: f64,
    pub z_n: f64,
    pub z_p: f64,
    pub q: f64,
    /// Thermal energy `k_B * T` as a single group.
    pub kb_t: f64,
    pub epsilon: f64,
    pub drag_average: Option<MobilityAverage>,
    pub model: ModelKind,
    /// Test hook: fixed value for the drag mobility instead of the average
    /// of `(d_n, d_p)`. Large values recover the classical limit.
    pub drag_mobility_override: Option<f64>,
}

impl Default for PhysicalParams {
    /// Unit parameters with valences -1/+1, arithmetic drag average,
    /// modified coupling.
    fn default() -> Self {
        PhysicalParams {
            d_n: 1.0,
            d_p: 1.0,
            z_n: -1.0,
            z_p: 1.0,
            q: 1.0,
            kb_t: 1.0,
            epsilon: 1.0,
            drag_average: Some(MobilityAverage::Arithmetic),
            model: ModelKind::Modified,
            drag_mobility_override: None,
        }
    }
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        let positive: [(&'static str, f64); 5] = [
            ("d_n", self.d_n),
            ("d_p", self.d_p),
            ("q", self.q),
            ("kb_t", self.kb_t),
            ("epsilon", self.epsilon),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be positive and finite, got {v}"),
                });
            }
        }
        for (name, v) in [("z_n", self.z_n), ("z_p", self.z_p)] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be finite, got {v}"),
                });
            }
        }
        if let Some(v) = self.drag_mobility_override {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter {
                    name: "drag_mobility_override",
                    reason: format!("must be positive and finite, got {v}"),
                });
            }
        }
        Ok(())
    }

    /// Drift scale `z q / (k_B T)` for valence `z`.
    pub fn drift_scale(&self, z: f64) -> f64 {
        z * self.q / self.kb_t
    }

    /// The drag mobility `D_{n,p}`, or `None` when the drag coupling is off
    /// (either explicitly or because the model is classical).
    pub fn drag_mobility(&self) -> Option<f64> {
        if self.model == ModelKind::Classical {
            return None;
        }
        self.drag_average.map(|kind| {
            self.drag_mobility_override
                .unwrap_or_else(|| mobility_average(self.d_n, self.d_p, kind))
        })
    }
}

/// The selected mean of two positive diffusivities. All three coincide when
/// `d_n == d_p`.
pub fn mobility_average(d_n: f64, d_p: f64, kind: MobilityAverage) -> f64 {
    match kind {
        MobilityAverage::Arithmetic => 0.5 * (d_n + d_p),
        MobilityAverage::Harmonic => 2.0 * d_n * d_p / (d_n + d_p),
        MobilityAverage::Geometric => (d_n * d_p).sqrt(),
    }
}

/// Effective diffusivity fields of the (possibly drag-coupled) system.
///
/// `d_nn`/`d_pp` multiply the species' own drift group, `d_np`/`d_pn` the
/// partner's. Classical coupling has zero cross fields.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingCoefficients {
    pub d_nn: NodalField,
    pub d_np: NodalField,
    pub d_pp: NodalField,
    pub d_pn: NodalField,
}

fn clamped_nonneg(values: &[f64]) -> Result<Vec<f64>> {
    values
        .iter()
        .enumerate()
        .map(|(index, &value)| {
            if value >= 0.0 {
                Ok(value)
            } else if value >= -NEG_CONC_TOL {
                Ok(0.0)
            } else {
                Err(Error::NegativeConcentration { index, value })
            }
        })
        .collect()
}

/// Per-node effective diffusivities for the given state and model.
///
/// Modified coupling with drag mobility `D_np` evaluates, per node,
/// `W = D_np + D_n c_p + D_p c_n` and
/// `d_nn = D_n (D_np + D_p c_n) / W`, `d_np = D_n D_p c_n / W` (and the
/// symmetric pair for the p species). For `D_n = D_p = D` this reduces to
/// `D (1 + c_n) / (1 + c_n + c_p)` and `D c_n / (1 + c_n + c_p)`.
pub fn coupling_coefficients(
    c_n: &NodalField,
    c_p: &NodalField,
    params: &PhysicalParams,
) -> Result<CouplingCoefficients> {
    if c_n.mesh() != c_p.mesh() {
        return Err(Error::MeshMismatch);
    }
    let mesh = c_n.mesh();
    let n = mesh.n_nodes();
    let cn = clamped_nonneg(c_n.values())?;
    let cp = clamped_nonneg(c_p.values())?;

    let (mut d_nn, mut d_np, mut d_pp, mut d_pn) =
        (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);

    match params.drag_mobility() {
        None => {
            d_nn.fill(params.d_n);
            d_pp.fill(params.d_p);
        }
        Some(d_avg) => {
            for i in 0..n {
                let w = d_avg + params.d_n * cp[i] + params.d_p * cn[i];
                d_nn[i] = params.d_n * (d_avg + params.d_p * cn[i]) / w;
                d_np[i] = params.d_n * params.d_p * cn[i] / w;
                d_pp[i] = params.d_p * (d_avg + params.d_n * cp[i]) / w;
                d_pn[i] = params.d_n * params.d_p * cp[i] / w;
            }
        }
    }

    Ok(CouplingCoefficients {
        d_nn: NodalField::new(mesh, d_nn)?,
        d_np: NodalField::new(mesh, d_np)?,
        d_pp: NodalField::new(mesh, d_pp)?,
        d_pn: NodalField::new(mesh, d_pn)?,
    })
}

/// Per-point friction (force-velocity) matrix of the drag-coupled system:
///
/// ```text
/// [ kT c_n / D_n + kT c_n c_p / D_np        -kT c_n c_p / D_np              ]
/// [        -kT c_n c_p / D_np        kT c_p / D_p + kT c_n c_p / D_np       ]
/// ```
///
/// Symmetric by construction (Onsager reciprocity) and positive semidefinite
/// for nonnegative concentrations. With drag off the cross entries vanish.
pub fn friction_matrix(c_n: f64, c_p: f64, params: &PhysicalParams) -> [[f64; 2]; 2] {
    let kt = params.kb_t;
    let drag = match params.drag_mobility() {
        Some(d_avg) => kt * c_n * c_p / d_avg,
        None => 0.0,
    };
    let m11 = kt * c_n / params.d_n + drag;
    let m22 = kt * c_p / params.d_p + drag;
    [[m11, -drag], [-drag, m22]]
}

/// Edge-averaged exponential-fitting stiffness of
/// `-d/dx ( omega(x) ( c' + (z q / k_B T) c phi' ) )` with no-flux boundaries.
///
/// Edge `(i, i+1)` uses `delta = (z q / k_B T)(phi_{i+1} - phi_i)` and the
/// harmonic mean of the nodal `omega` values; the flux stencil
/// `(omega_e / h) * (B(delta) c_i - B(-delta) c_{i+1})` enters rows `i` and
/// `i+1` with opposite signs. Column sums vanish (discrete conservation) and
/// the sign pattern is that of an M-matrix.
pub fn assemble_np_operator(
    omega: &NodalField,
    z: f64,
    phi: &NodalField,
    params: &PhysicalParams,
) -> Result<TridiagonalMatrix> {
    if omega.mesh() != phi.mesh() {
        return Err(Error::MeshMismatch);
    }
    let mesh = omega.mesh();
    let h = mesh.h();
    let scale = params.drift_scale(z);

    let w = omega.values();
    for (index, &value) in w.iter().enumerate() {
        if value < -NEG_COEFF_TOL {
            return Err(Error::NegativeCoefficient { index, value });
        }
    }

    let n = mesh.n_nodes();
    let mut m = TridiagonalMatrix::zeros(n);
    let ph = phi.values();
    for i in 0..n - 1 {
        let wa = w[i].max(0.0);
        let wb = w[i + 1].max(0.0);
        let w_edge = if wa + wb > 0.0 {
            2.0 * wa * wb / (wa + wb)
        } else {
            0.0
        };
        let delta = scale * (ph[i + 1] - ph[i]);
        let b_fwd = bernoulli(delta);
        let b_bwd = bernoulli(-delta);
        let k = w_edge / h;
        // flux out of node i into node i+1: k * (B(delta) c_i - B(-delta) c_{i+1})
        m.diag_mut()[i] += k * b_fwd;
        m.upper_mut()[i] -= k * b_bwd;
        m.lower_mut()[i] -= k * b_fwd;
        m.diag_mut()[i + 1] += k * b_bwd;
    }
    Ok(m)
}
