//! 1D finite-element solvers for the classical and drag-modified
//! Poisson-Nernst-Planck systems.
//!
//! The two systems share their free energy, and therefore their equilibria,
//! but dissipate it differently: the modified system adds an inter-species
//! drag term to the entropy production. This crate provides the shared
//! machinery to show that numerically:
//!
//! - uniform 1D meshes, nodal fields, and a tridiagonal direct solver
//!   ([`mesh`], [`tridiag`]);
//! - a piecewise-linear FEM Poisson solve with Dirichlet or Robin
//!   boundaries ([`poisson`]);
//! - exponential-fitting (Scharfetter-Gummel) assembly of the
//!   Nernst-Planck operators, the cross-diffusion coupling coefficients,
//!   and the Onsager-symmetric friction matrix ([`nernst_planck`]);
//! - backward-Euler stepping with the sub-updating fixed-point loop
//!   ([`time_integrator`]);
//! - evaluators for the free energy and both entropy productions
//!   ([`functionals`]);
//! - the scalar inhomogeneous diffusion equation whose coefficients split
//!   equilibrium from rate ([`general_diffusion`]);
//! - config parsing, presets, and CSV-emitting run drivers ([`config`],
//!   [`driver`]).

pub mod config;
pub mod driver;
pub mod error;
pub mod expr;
pub mod functionals;
pub mod general_diffusion;
pub mod mesh;
pub mod nernst_planck;
pub mod poisson;
pub mod time_integrator;
pub mod tridiag;

pub use error::{Error, Result};
pub use functionals::{
    dissipation_classical, dissipation_modified, effective_velocities, entropy_flux_groups,
    free_energy_nonlocal, total_energy, FunctionalReport,
};
pub use general_diffusion::{equilibrium_of, step_general_diffusion, DiffusionProblem};
pub use mesh::{bernoulli, build_mesh, integrate, Mesh1D, NodalField};
pub use nernst_planck::{
    assemble_np_operator, coupling_coefficients, friction_matrix, mobility_average,
    CouplingCoefficients, MobilityAverage, ModelKind, PhysicalParams,
};
pub use poisson::{solve_poisson, BcKind, PoissonBC};
pub use time_integrator::{
    initial_bound_scale, monitor_bounds, run_to_steady, step, BoundsReport, IonState,
    SolverControls, StepReport, TrajectorySummary,
};
pub use tridiag::{solve_tridiagonal, TridiagonalMatrix, TridiagonalSystem};
