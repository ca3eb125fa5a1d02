//! Backward-Euler solver for the inhomogeneous diffusion equation
//! `f_t = (b(x) (a(x) f)')'` with no-flux boundaries.
//!
//! The step is assembled in the variable `g = a f`, where the operator is a
//! plain stiffness form with coefficient `b` and the exact discrete steady
//! state is `g = const`, i.e. `f = C / a`. The coefficient `a` alone fixes
//! the equilibrium; `b` only sets how fast it is approached.

use crate::error::{Error, Result};
use crate::mesh::{linf_diff, Mesh1D, NodalField};
use crate::tridiag::{TridiagonalMatrix, TridiagonalSystem};

/// Coefficient fields and initial density of one diffusion problem.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionProblem {
    pub mesh: Mesh1D,
    pub a: NodalField,
    pub b: NodalField,
    pub f0: NodalField,
}

impl DiffusionProblem {
    pub fn new(a: NodalField, b: NodalField, f0: NodalField) -> Result<Self> {
        if a.mesh() != b.mesh() || a.mesh() != f0.mesh() {
            return Err(Error::MeshMismatch);
        }
        for (name, field) in [("a", &a), ("b", &b)] {
            if let Some((index, &value)) = field
                .values()
                .iter()
                .enumerate()
                .find(|(_, v)| **v <= 0.0)
            {
                return Err(Error::InvalidParameter {
                    name: if name == "a" { "a" } else { "b" },
                    reason: format!("must be positive everywhere, got {value} at node {index}"),
                });
            }
        }
        if let Some((index, &value)) = f0.values().iter().enumerate().find(|(_, v)| **v < 0.0) {
            return Err(Error::NegativeConcentration { index, value });
        }
        Ok(DiffusionProblem {
            mesh: a.mesh(),
            a,
            b,
            f0,
        })
    }
}

fn stiffness(b: &NodalField) -> TridiagonalMatrix {
    let mesh = b.mesh();
    let h = mesh.h();
    let v = b.values();
    let n = mesh.n_nodes();
    let mut m = TridiagonalMatrix::zeros(n);
    for i in 0..n - 1 {
        let be = 2.0 * v[i] * v[i + 1] / (v[i] + v[i + 1]);
        let k = be / h;
        m.diag_mut()[i] += k;
        m.diag_mut()[i + 1] += k;
        m.lower_mut()[i] -= k;
        m.upper_mut()[i] -= k;
    }
    m
}

/// One backward-Euler step. Mass is conserved to round-off and the update
/// is inverse-positive, so nonnegative input stays nonnegative.
pub fn step_general_diffusion(
    problem: &DiffusionProblem,
    f: &NodalField,
    dt: f64,
) -> Result<NodalField> {
    if f.mesh() != problem.mesh {
        return Err(Error::MeshMismatch);
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidParameter {
            name: "dt",
            reason: format!("must be positive and finite, got {dt}"),
        });
    }
    let mesh = problem.mesh;
    let n = mesh.n_nodes();
    let a = problem.a.values();

    let mut matrix = stiffness(&problem.b);
    // scale the stiffness by dt and add the lumped mass in the g variable
    let mut rhs = vec![0.0; n];
    for i in 0..n - 1 {
        matrix.lower_mut()[i] *= dt;
        matrix.upper_mut()[i] *= dt;
    }
    for i in 0..n {
        matrix.diag_mut()[i] *= dt;
        matrix.diag_mut()[i] += mesh.lumped_mass(i) / a[i];
        rhs[i] = mesh.lumped_mass(i) * f.values()[i];
    }

    let g = TridiagonalSystem::new(matrix, rhs)?.solve()?;
    let f_new: Vec<f64> = g.iter().zip(a).map(|(gi, ai)| gi / ai).collect();
    NodalField::new(mesh, f_new)
}

/// Analytic no-flux steady state `C / a(x)`, with `C` fixed by the mass of
/// the initial density (same trapezoidal quadrature as the solver).
pub fn equilibrium_of(problem: &DiffusionProblem) -> NodalField {
    let mass = problem.f0.integrate();
    let inv_a = NodalField::new(
        problem.mesh,
        problem.a.values().iter().map(|v| 1.0 / v).collect(),
    )
    .expect("1/a of a positive field is finite");
    let c = mass / inv_a.integrate();
    NodalField::new(
        problem.mesh,
        problem.a.values().iter().map(|v| c / v).collect(),
    )
    .expect("C/a of a positive field is finite")
}

/// Per-step record of a diffusion run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusionRecord {
    pub t: f64,
    pub mass: f64,
    /// `|f^{k+1} - f^k|_inf / dt`.
    pub rate: f64,
}

/// Step until `|f^{k+1} - f^k|_inf / dt <= steady_tol` or `max_steps`.
pub fn run_diffusion_to_steady(
    problem: &DiffusionProblem,
    dt: f64,
    steady_tol: f64,
    max_steps: usize,
) -> Result<(Vec<DiffusionRecord>, NodalField, bool)> {
    run_diffusion_to_steady_with(problem, dt, steady_tol, max_steps, |_, _, _| Ok(()))
}

/// [`run_diffusion_to_steady`] with a per-step observer; `on_step` sees the
/// step index (starting at 1) and the density after that step.
pub fn run_diffusion_to_steady_with(
    problem: &DiffusionProblem,
    dt: f64,
    steady_tol: f64,
    max_steps: usize,
    mut on_step: impl FnMut(usize, &NodalField, DiffusionRecord) -> Result<()>,
) -> Result<(Vec<DiffusionRecord>, NodalField, bool)> {
    let mut f = problem.f0.clone();
    let mut records = Vec::new();
    let mut steady = false;
    let mut t = 0.0;
    for k in 1..=max_steps {
        let next = step_general_diffusion(problem, &f, dt)?;
        let rate = linf_diff(next.values(), f.values()) / dt;
        t += dt;
        let record = DiffusionRecord {
            t,
            mass: next.integrate(),
            rate,
        };
        on_step(k, &next, record)?;
        records.push(record);
        f = next;
        if rate <= steady_tol {
            steady = true;
            break;
        }
    }
    Ok((records, f, steady))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_mesh;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn problem(
        mesh: Mesh1D,
        a: impl Fn(f64) -> f64,
        b: impl Fn(f64) -> f64,
        f0: impl Fn(f64) -> f64,
    ) -> DiffusionProblem {
        DiffusionProblem::new(
            NodalField::from_fn(mesh, a).unwrap(),
            NodalField::from_fn(mesh, b).unwrap(),
            NodalField::from_fn(mesh, f0).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn uniform_density_is_heat_equation_equilibrium() {
        let mesh = build_mesh(-1.0, 1.0, 32).unwrap();
        let p = problem(mesh, |_| 1.0, |_| 1.0, |_| 1.5);
        let f1 = step_general_diffusion(&p, &p.f0, 1e-2).unwrap();
        assert!(linf_diff(f1.values(), p.f0.values()) < 1e-13);
    }

    #[test]
    fn fourier_mode_decays_at_heat_rate() {
        // slowest no-flux mode cos(pi (x+1) / 2) on [-1, 1]: rate pi^2/4
        let mesh = build_mesh(-1.0, 1.0, 256).unwrap();
        let mode = |x: f64| (std::f64::consts::FRAC_PI_2 * (x + 1.0)).cos();
        let p = problem(mesh, |_| 1.0, |_| 1.0, move |x| 1.0 + 0.5 * mode(x));
        let dt = 1e-4;
        let steps = 10;
        let mut f = p.f0.clone();
        for _ in 0..steps {
            f = step_general_diffusion(&p, &f, dt).unwrap();
        }
        let amp0 = p.f0.values()[0] - 1.0;
        let amp = f.values()[0] - 1.0;
        let rate = -(amp / amp0).ln() / (steps as f64 * dt);
        let exact = std::f64::consts::PI.powi(2) / 4.0;
        assert!(
            (rate - exact).abs() <= 0.05 * exact,
            "decay rate {rate} vs {exact}"
        );
    }

    #[test]
    fn exponential_coefficient_reaches_closed_form_equilibrium() {
        let mesh = build_mesh(-1.0, 1.0, 128).unwrap();
        let p = problem(mesh, |x| x.exp(), |_| 1.0, |x| 0.5 + 0.5 * (x + 1.0));
        let (_, f_end, steady) = run_diffusion_to_steady(&p, 0.05, 1e-9, 10_000).unwrap();
        assert!(steady);
        let eq = equilibrium_of(&p);
        assert!(
            linf_diff(f_end.values(), eq.values()) <= 1e-6,
            "distance {}",
            linf_diff(f_end.values(), eq.values())
        );
    }

    #[test]
    fn equilibrium_of_unit_coefficient() {
        let mesh = build_mesh(-1.0, 1.0, 16).unwrap();
        let p = problem(mesh, |_| 1.0, |_| 1.0, |_| 1.0); // mass 2
        let eq = equilibrium_of(&p);
        for &v in eq.values() {
            assert!((v - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn equilibrium_of_exponential_matches_normalization_integral() {
        // a = e^x, mass 1: f = e^{-x} / (e - e^{-1}), up to trapezoid error
        let mesh = build_mesh(-1.0, 1.0, 256).unwrap();
        let mass_one = {
            let raw = NodalField::from_fn(mesh, |_| 1.0).unwrap();
            let scale = 1.0 / raw.integrate();
            NodalField::from_fn(mesh, move |_| scale).unwrap()
        };
        let p = DiffusionProblem::new(
            NodalField::from_fn(mesh, |x| x.exp()).unwrap(),
            NodalField::from_fn(mesh, |_| 1.0).unwrap(),
            mass_one,
        )
        .unwrap();
        let eq = equilibrium_of(&p);
        let e = std::f64::consts::E;
        for (i, x) in mesh.nodes().enumerate() {
            let exact = (-x).exp() / (e - 1.0 / e);
            assert!(
                (eq.values()[i] - exact).abs() < 1e-4,
                "node {i}: {} vs {exact}",
                eq.values()[i]
            );
        }
    }

    #[test]
    fn equilibrium_is_independent_of_b() {
        let mesh = build_mesh(-1.0, 1.0, 128).unwrap();
        let a = |x: f64| x.exp();
        let reference = {
            let p = problem(mesh, a, |_| 1.0, |_| 0.7);
            equilibrium_of(&p)
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0x6dff);
        for trial in 0..10 {
            let (amp, freq, base) = (
                rng.gen_range(0.1..1.5),
                rng.gen_range(0.5..4.0),
                rng.gen_range(0.5..3.0),
            );
            let p = problem(
                mesh,
                a,
                move |x| base + amp * (freq * x).sin().abs(),
                |_| 0.7,
            );
            assert_eq!(equilibrium_of(&p).values(), reference.values());
            let (_, f_end, steady) = run_diffusion_to_steady(&p, 0.05, 1e-9, 20_000).unwrap();
            assert!(steady, "trial {trial} did not converge");
            let dist = linf_diff(f_end.values(), reference.values());
            assert!(dist <= 1e-6, "trial {trial}: distance {dist}");
        }
    }

    #[test]
    fn mass_conserved_and_nonnegative_along_run() {
        let mesh = build_mesh(-1.0, 1.0, 64).unwrap();
        let p = problem(
            mesh,
            |x| 1.0 + 0.5 * x * x,
            |x| 2.0 + (std::f64::consts::PI * x).sin(),
            |x| if x < 0.0 { 2.0 } else { 0.1 },
        );
        let mass0 = p.f0.integrate();
        let mut f = p.f0.clone();
        for _ in 0..200 {
            f = step_general_diffusion(&p, &f, 1e-3).unwrap();
            assert!((f.integrate() - mass0).abs() <= 1e-10 * mass0);
            assert!(f.min() >= -1e-10);
        }
    }

    #[test]
    fn problem_rejects_nonpositive_coefficients() {
        let mesh = build_mesh(-1.0, 1.0, 4).unwrap();
        let good = NodalField::constant(mesh, 1.0).unwrap();
        let bad = NodalField::new(mesh, vec![1.0, 0.0, 1.0, 1.0, 1.0]).unwrap();
        assert!(DiffusionProblem::new(bad.clone(), good.clone(), good.clone()).is_err());
        assert!(DiffusionProblem::new(good.clone(), bad, good.clone()).is_err());
        let neg_f0 = NodalField::new(mesh, vec![1.0, -0.5, 1.0, 1.0, 1.0]).unwrap();
        assert!(DiffusionProblem::new(good.clone(), good, neg_f0).is_err());
    }
}
