//! Backward-Euler stepping with the inner sub-updating fixed-point loop that
//! alternates frozen-coefficient Nernst-Planck solves with Poisson re-solves.

use crate::error::{Error, Result};
use crate::functionals::{self, FunctionalReport};
use crate::mesh::{linf_diff, Mesh1D, NodalField};
use crate::nernst_planck::{assemble_np_operator, coupling_coefficients, PhysicalParams};
use crate::poisson::{solve_poisson, PoissonBC};
use crate::tridiag::{TridiagonalMatrix, TridiagonalSystem};

/// Pointwise round-off tolerance for concentration nonnegativity.
pub const NONNEG_TOL: f64 = 1e-10;

/// Concentrations and potential at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct IonState {
    c_n: NodalField,
    c_p: NodalField,
    phi: NodalField,
    t: f64,
}

impl IonState {
    /// Build a state at `t = 0`, solving Poisson for the initial potential.
    pub fn new(
        c_n: NodalField,
        c_p: NodalField,
        params: &PhysicalParams,
        bc: &PoissonBC,
    ) -> Result<Self> {
        let phi = solve_poisson(&c_n, &c_p, params, bc)?;
        Self::with_phi(c_n, c_p, phi, 0.0)
    }

    /// Build a state from explicit fields. The potential is trusted as-is;
    /// use [`IonState::phi_residual`] to verify consistency on demand.
    pub fn with_phi(c_n: NodalField, c_p: NodalField, phi: NodalField, t: f64) -> Result<Self> {
        if c_n.mesh() != c_p.mesh() || c_n.mesh() != phi.mesh() {
            return Err(Error::MeshMismatch);
        }
        for field in [&c_n, &c_p] {
            for (index, &value) in field.values().iter().enumerate() {
                if value < -NONNEG_TOL {
                    return Err(Error::NegativeConcentration { index, value });
                }
            }
        }
        Ok(IonState { c_n, c_p, phi, t })
    }

    pub fn mesh(&self) -> Mesh1D {
        self.c_n.mesh()
    }

    pub fn c_n(&self) -> &NodalField {
        &self.c_n
    }

    pub fn c_p(&self) -> &NodalField {
        &self.c_p
    }

    pub fn phi(&self) -> &NodalField {
        &self.phi
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn mass_n(&self) -> f64 {
        self.c_n.integrate()
    }

    pub fn mass_p(&self) -> f64 {
        self.c_p.integrate()
    }

    /// Max-norm distance between the stored potential and a fresh Poisson
    /// solve at the stored concentrations.
    pub fn phi_residual(&self, params: &PhysicalParams, bc: &PoissonBC) -> Result<f64> {
        let fresh = solve_poisson(&self.c_n, &self.c_p, params, bc)?;
        Ok(linf_diff(fresh.values(), self.phi.values()))
    }
}

/// What one backward-Euler step did.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub sub_iterations: usize,
    /// Max-norm concentration change over the last sub-iteration.
    pub final_increment: f64,
    pub mass_n: f64,
    pub mass_p: f64,
    pub converged: bool,
    /// Increment after each sub-iteration, in order.
    pub increments: Vec<f64>,
}

/// Step size, tolerances, and iteration caps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverControls {
    pub dt: f64,
    pub sub_tol: f64,
    pub max_sub_iters: usize,
    pub steady_tol: f64,
    pub max_steps: usize,
}

impl Default for SolverControls {
    fn default() -> Self {
        SolverControls {
            dt: 1e-3,
            sub_tol: 1e-10,
            max_sub_iters: 100,
            steady_tol: 1e-8,
            max_steps: 100_000,
        }
    }
}

impl SolverControls {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("dt", self.dt),
            ("sub_tol", self.sub_tol),
            ("steady_tol", self.steady_tol),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be positive and finite, got {v}"),
                });
            }
        }
        if self.max_sub_iters == 0 {
            return Err(Error::InvalidParameter {
                name: "max_sub_iters",
                reason: "must be at least 1".into(),
            });
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidParameter {
                name: "max_steps",
                reason: "must be at least 1".into(),
            });
        }
        Ok(())
    }
}

fn lumped_mass_matrix(mesh: Mesh1D) -> TridiagonalMatrix {
    let n = mesh.n_nodes();
    let mut m = TridiagonalMatrix::zeros(n);
    for i in 0..n {
        m.diag_mut()[i] = mesh.lumped_mass(i);
    }
    m
}

/// One backward-Euler step of the coupled system.
///
/// Runs the sub-updating loop: freeze the coupling coefficients and the
/// potential at the current iterate, solve the two decoupled linear
/// Nernst-Planck systems (lumped mass plus `dt` times the exponential-fitting
/// operator, cross term on the right-hand side), re-solve Poisson, and stop
/// once the concentration increment drops below `sub_tol`.
pub fn step(
    state: &IonState,
    params: &PhysicalParams,
    bc: &PoissonBC,
    controls: &SolverControls,
) -> Result<(IonState, StepReport)> {
    params.validate()?;
    controls.validate()?;
    let mesh = state.mesh();
    let dt = controls.dt;
    let mass = lumped_mass_matrix(mesh);
    let n = mesh.n_nodes();

    let rhs_base_n: Vec<f64> = (0..n)
        .map(|i| mesh.lumped_mass(i) * state.c_n.values()[i])
        .collect();
    let rhs_base_p: Vec<f64> = (0..n)
        .map(|i| mesh.lumped_mass(i) * state.c_p.values()[i])
        .collect();

    let cross_active = params.drag_mobility().is_some();

    let mut c_n_iter = state.c_n.clone();
    let mut c_p_iter = state.c_p.clone();
    let mut phi_iter = state.phi.clone();

    let mut increments = Vec::new();
    let mut converged = false;

    for _ in 0..controls.max_sub_iters {
        let coeffs = coupling_coefficients(&c_n_iter, &c_p_iter, params)?;

        let a_nn = assemble_np_operator(&coeffs.d_nn, params.z_n, &phi_iter, params)?;
        let mut rhs_n = rhs_base_n.clone();
        if cross_active {
            let a_np = assemble_np_operator(&coeffs.d_np, params.z_p, &phi_iter, params)?;
            for (r, f) in rhs_n.iter_mut().zip(a_np.apply(c_p_iter.values())) {
                *r -= dt * f;
            }
        }
        let c_n_next = TridiagonalSystem::new(mass.add_scaled(&a_nn, dt)?, rhs_n)?.solve()?;

        let a_pp = assemble_np_operator(&coeffs.d_pp, params.z_p, &phi_iter, params)?;
        let mut rhs_p = rhs_base_p.clone();
        if cross_active {
            let a_pn = assemble_np_operator(&coeffs.d_pn, params.z_n, &phi_iter, params)?;
            for (r, f) in rhs_p.iter_mut().zip(a_pn.apply(c_n_iter.values())) {
                *r -= dt * f;
            }
        }
        let c_p_next = TridiagonalSystem::new(mass.add_scaled(&a_pp, dt)?, rhs_p)?.solve()?;

        let increment = linf_diff(&c_n_next, c_n_iter.values())
            .max(linf_diff(&c_p_next, c_p_iter.values()));
        increments.push(increment);

        c_n_iter = c_n_iter.with_values(c_n_next)?;
        c_p_iter = c_p_iter.with_values(c_p_next)?;
        phi_iter = solve_poisson(&c_n_iter, &c_p_iter, params, bc)?;

        if increment <= controls.sub_tol {
            converged = true;
            break;
        }
    }

    let final_increment = increments.last().copied().unwrap_or(0.0);
    if !converged && final_increment > 100.0 * controls.sub_tol {
        return Err(Error::SubIterationDiverged {
            iters: increments.len(),
            increment: final_increment,
            tol: controls.sub_tol,
        });
    }

    let next = IonState::with_phi(c_n_iter, c_p_iter, phi_iter, state.t + dt)?;
    let report = StepReport {
        sub_iterations: increments.len(),
        final_increment,
        mass_n: next.mass_n(),
        mass_p: next.mass_p(),
        converged,
        increments,
    };
    Ok((next, report))
}

/// Pointwise bounds observed on a state, checked against the a-priori
/// envelope `c >= 0`, `c_n + c_p <= 5 * m0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundsReport {
    pub min_c_n: f64,
    pub min_c_p: f64,
    pub max_sum: f64,
    pub bounds_hold: bool,
}

/// Scale `m0 = max(|c_n(.,0)|_inf, |c_p(.,0)|_inf, 1)` from initial data.
pub fn initial_bound_scale(c_n0: &NodalField, c_p0: &NodalField) -> f64 {
    c_n0.linf().max(c_p0.linf()).max(1.0)
}

/// Purely observational check of the nonnegativity and `5 m0` envelope.
pub fn monitor_bounds(c_n: &NodalField, c_p: &NodalField, m0: f64) -> BoundsReport {
    let min_c_n = c_n.min();
    let min_c_p = c_p.min();
    let max_sum = c_n
        .values()
        .iter()
        .zip(c_p.values())
        .fold(f64::NEG_INFINITY, |m, (a, b)| m.max(a + b));
    BoundsReport {
        min_c_n,
        min_c_p,
        max_sum,
        bounds_hold: min_c_n >= -NONNEG_TOL
            && min_c_p >= -NONNEG_TOL
            && max_sum <= 5.0 * m0 + NONNEG_TOL,
    }
}

/// One recorded step of a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub functionals: FunctionalReport,
    /// Final sub-iteration increment of the step.
    pub increment: f64,
    /// `|c^{k+1} - c^k|_inf / dt`, the steady-state residual rate.
    pub rate: f64,
    pub bounds: BoundsReport,
}

/// Everything recorded by [`run_to_steady`].
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySummary {
    pub records: Vec<StepRecord>,
    pub steps: usize,
    pub steady: bool,
    /// Residual rate at the last step taken.
    pub final_rate: f64,
    /// Steps whose energy rose beyond the soft tolerance `1e-8 * (1 + |E|)`.
    pub energy_violations: usize,
    /// Lemma-style bound scale from the initial data.
    pub m0: f64,
    pub bounds_ok: bool,
}

/// Step until `|c^{k+1} - c^k|_inf / dt <= steady_tol` or `max_steps`.
///
/// Non-convergence is not an error: the partial trajectory is returned with
/// `steady = false`.
pub fn run_to_steady(
    state0: &IonState,
    params: &PhysicalParams,
    bc: &PoissonBC,
    controls: &SolverControls,
) -> Result<(TrajectorySummary, IonState)> {
    run_to_steady_with(state0, params, bc, controls, |_, _, _| Ok(()))
}

/// [`run_to_steady`] with a per-step observer; `on_step` sees the step index
/// (starting at 1) and the state after that step.
pub fn run_to_steady_with(
    state0: &IonState,
    params: &PhysicalParams,
    bc: &PoissonBC,
    controls: &SolverControls,
    mut on_step: impl FnMut(usize, &IonState, &StepRecord) -> Result<()>,
) -> Result<(TrajectorySummary, IonState)> {
    controls.validate()?;
    let m0 = initial_bound_scale(&state0.c_n, &state0.c_p);
    let mut state = state0.clone();
    let mut records = Vec::new();
    let mut steady = false;
    let mut final_rate = f64::INFINITY;
    let mut energy_violations = 0;
    let mut bounds_ok = true;
    let mut prev_energy: Option<f64> = None;

    for k in 1..=controls.max_steps {
        let prev = state.clone();
        let (next, report) = step(&state, params, bc, controls)?;
        let rate = linf_diff(next.c_n().values(), prev.c_n().values())
            .max(linf_diff(next.c_p().values(), prev.c_p().values()))
            / controls.dt;

        let functionals = functionals::report(&next, params, report.sub_iterations)?;
        if let Some(e_prev) = prev_energy {
            if functionals.energy > e_prev + 1e-8 * (1.0 + functionals.energy.abs()) {
                energy_violations += 1;
            }
        }
        prev_energy = Some(functionals.energy);

        let bounds = monitor_bounds(next.c_n(), next.c_p(), m0);
        bounds_ok &= bounds.bounds_hold;

        let record = StepRecord {
            functionals,
            increment: report.final_increment,
            rate,
            bounds,
        };
        on_step(k, &next, &record)?;
        records.push(record);

        state = next;
        final_rate = rate;
        if rate <= controls.steady_tol {
            steady = true;
            break;
        }
    }

    let steps = records.len();
    Ok((
        TrajectorySummary {
            records,
            steps,
            steady,
            final_rate,
            energy_violations,
            m0,
            bounds_ok,
        },
        state,
    ))
}
