//! Free energy, the classical and drag-modified dissipation functionals,
//! effective velocities, and per-state reporting.
//!
//! Dissipation integrands are evaluated in edge-flux form
//! `c_edge * |g|^2` with `g` the per-edge electrochemical gradient group and
//! `c_edge` the logarithmic mean of the adjacent nodal values. The log mean
//! makes `g` vanish identically on discrete Boltzmann profiles, so the
//! discrete zero set of both functionals coincides with the discrete
//! equilibrium set.

use crate::error::{Error, Result};
use crate::mesh::NodalField;
use crate::nernst_planck::PhysicalParams;
use crate::time_integrator::IonState;

/// Floor applied to the log-mean denominator inside `1/c` evaluations.
pub const LOG_MEAN_FLOOR: f64 = 1e-14;

/// Mass, energy, and both dissipation functionals at one time level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FunctionalReport {
    pub t: f64,
    pub mass_n: f64,
    pub mass_p: f64,
    pub energy: f64,
    pub diss_classical: f64,
    pub diss_modified: f64,
    pub sub_iterations: usize,
}

/// Logarithmic mean `(a - b) / (ln a - ln b)`, extended continuously:
/// `a` at `a == b`, `0` when either argument is zero. Negative round-off
/// inputs are treated as zero.
pub fn log_mean(a: f64, b: f64) -> f64 {
    let a = a.max(0.0);
    let b = b.max(0.0);
    if a == b {
        return a;
    }
    if a == 0.0 || b == 0.0 {
        return 0.0;
    }
    let mid = 0.5 * (a + b);
    let u = 0.5 * (a - b) / mid;
    if u.abs() < 1e-4 {
        // L = mid * u / artanh(u) expanded to O(u^4)
        mid * (1.0 - u * u / 3.0)
    } else {
        (a - b) / (a / b).ln()
    }
}

fn c_ln_c(c: f64) -> f64 {
    if c <= 0.0 {
        0.0
    } else {
        c * c.ln()
    }
}

fn check_nonneg(field: &NodalField) -> Result<()> {
    for (index, &value) in field.values().iter().enumerate() {
        if value < -crate::time_integrator::NONNEG_TOL {
            return Err(Error::NegativeConcentration { index, value });
        }
    }
    Ok(())
}

/// Total free energy
/// `int kT (c_n ln c_n + c_p ln c_p) + (eps/2) |phi'|^2 dx`,
/// with `c ln c` continuously extended by zero at `c = 0` and the field term
/// accumulated from per-edge slopes.
pub fn total_energy(state: &IonState, params: &PhysicalParams) -> Result<f64> {
    check_nonneg(state.c_n())?;
    check_nonneg(state.c_p())?;
    let mesh = state.mesh();
    let h = mesh.h();

    let entropy_density: Vec<f64> = state
        .c_n()
        .values()
        .iter()
        .zip(state.c_p().values())
        .map(|(&a, &b)| params.kb_t * (c_ln_c(a) + c_ln_c(b)))
        .collect();
    let entropy = NodalField::new(mesh, entropy_density)?.integrate();

    let phi = state.phi().values();
    let mut field = 0.0;
    for i in 0..mesh.n_cells() {
        let slope = (phi[i + 1] - phi[i]) / h;
        field += h * slope * slope;
    }
    Ok(entropy + 0.5 * params.epsilon * field)
}

/// Per-edge electrochemical gradient groups
/// `g = grad(c)/c + (z q / k_B T) grad(phi)` for both species, with the
/// `1/c` taken at the (floored) log mean of the adjacent nodal values.
pub fn entropy_flux_groups(state: &IonState, params: &PhysicalParams) -> (Vec<f64>, Vec<f64>) {
    let group = |c: &NodalField, z: f64| -> Vec<f64> {
        let mesh = state.mesh();
        let h = mesh.h();
        let scale = params.drift_scale(z);
        let cv = c.values();
        let ph = state.phi().values();
        (0..mesh.n_cells())
            .map(|i| {
                let lm = log_mean(cv[i], cv[i + 1]).max(LOG_MEAN_FLOOR);
                (cv[i + 1] - cv[i]) / (h * lm) + scale * (ph[i + 1] - ph[i]) / h
            })
            .collect()
    };
    (
        group(state.c_n(), params.z_n),
        group(state.c_p(), params.z_p),
    )
}

fn edge_log_means(c: &NodalField) -> Vec<f64> {
    let v = c.values();
    (0..v.len() - 1).map(|i| log_mean(v[i], v[i + 1])).collect()
}

/// Classical entropy production
/// `kT int (D_n c_n |g_n|^2 + D_p c_p |g_p|^2) dx`.
pub fn dissipation_classical(state: &IonState, params: &PhysicalParams) -> f64 {
    let (g_n, g_p) = entropy_flux_groups(state, params);
    let ln_n = edge_log_means(state.c_n());
    let ln_p = edge_log_means(state.c_p());
    let h = state.mesh().h();
    let mut sum = 0.0;
    for i in 0..g_n.len() {
        sum += h * (params.d_n * ln_n[i] * g_n[i] * g_n[i]
            + params.d_p * ln_p[i] * g_p[i] * g_p[i]);
    }
    params.kb_t * sum
}

/// Per-edge effective velocities of the drag-coupled system.
///
/// Primitive fluxes come from the classical relations
/// `c u = -D (grad c + (z q / kT) c grad phi) = -D c_edge g`; the modified
/// fluxes are their weighted combination with denominator
/// `W = D_np + D_n c_p + D_p c_n`, and `u* = flux / c_edge` wherever
/// `c_edge` exceeds the floor (zero otherwise). With drag off the classical
/// velocities are returned unchanged.
pub fn effective_velocities(state: &IonState, params: &PhysicalParams) -> (Vec<f64>, Vec<f64>) {
    let (g_n, g_p) = entropy_flux_groups(state, params);
    let ln_n = edge_log_means(state.c_n());
    let ln_p = edge_log_means(state.c_p());
    let n_edges = g_n.len();
    let mut u_n = vec![0.0; n_edges];
    let mut u_p = vec![0.0; n_edges];
    let drag = params.drag_mobility();
    for i in 0..n_edges {
        let f_n = -params.d_n * ln_n[i] * g_n[i];
        let f_p = -params.d_p * ln_p[i] * g_p[i];
        let (f_n_eff, f_p_eff) = match drag {
            None => (f_n, f_p),
            Some(avg) => {
                let w = avg + params.d_n * ln_p[i] + params.d_p * ln_n[i];
                (
                    ((avg + params.d_p * ln_n[i]) * f_n + params.d_n * ln_n[i] * f_p) / w,
                    ((avg + params.d_n * ln_p[i]) * f_p + params.d_p * ln_p[i] * f_n) / w,
                )
            }
        };
        u_n[i] = if ln_n[i] > LOG_MEAN_FLOOR {
            f_n_eff / ln_n[i]
        } else {
            0.0
        };
        u_p[i] = if ln_p[i] > LOG_MEAN_FLOOR {
            f_p_eff / ln_p[i]
        } else {
            0.0
        };
    }
    (u_n, u_p)
}

/// Velocity-form modified entropy production
/// `int kT (c_n |u_n|^2 / D_n + c_p |u_p|^2 / D_p + c_n c_p |u_n - u_p|^2 / D_np) dx`,
/// built from [`effective_velocities`]. This is the general-diffusivity route.
pub fn dissipation_modified_velocity(state: &IonState, params: &PhysicalParams) -> f64 {
    let (u_n, u_p) = effective_velocities(state, params);
    let ln_n = edge_log_means(state.c_n());
    let ln_p = edge_log_means(state.c_p());
    let h = state.mesh().h();
    let drag = params.drag_mobility();
    let mut sum = 0.0;
    for i in 0..u_n.len() {
        let mut term = ln_n[i] * u_n[i] * u_n[i] / params.d_n
            + ln_p[i] * u_p[i] * u_p[i] / params.d_p;
        if let Some(avg) = drag {
            let du = u_n[i] - u_p[i];
            term += ln_n[i] * ln_p[i] * du * du / avg;
        }
        sum += h * term;
    }
    params.kb_t * sum
}

/// Modified entropy production.
///
/// Equal diffusivities use the closed three-term form with weights
/// `(1 + c)/(1 + c_n + c_p)` per edge; unequal diffusivities (or an
/// overridden drag mobility) route through the velocity form; drag off
/// falls back to the classical functional.
pub fn dissipation_modified(state: &IonState, params: &PhysicalParams) -> f64 {
    let Some(d_avg) = params.drag_mobility() else {
        return dissipation_classical(state, params);
    };
    if params.d_n != params.d_p || params.drag_mobility_override.is_some() {
        return dissipation_modified_velocity(state, params);
    }
    let d = params.d_n;
    debug_assert_eq!(d_avg, d);

    let (g_n, g_p) = entropy_flux_groups(state, params);
    let ln_n = edge_log_means(state.c_n());
    let ln_p = edge_log_means(state.c_p());
    let h = state.mesh().h();
    let mut sum = 0.0;
    for i in 0..g_n.len() {
        let s = 1.0 + ln_n[i] + ln_p[i];
        let w_n = ((1.0 + ln_n[i]) * g_n[i] + ln_p[i] * g_p[i]) / s;
        let w_p = ((1.0 + ln_p[i]) * g_p[i] + ln_n[i] * g_n[i]) / s;
        let w_x = (g_n[i] - g_p[i]) / s;
        sum += h * (ln_n[i] * w_n * w_n + ln_p[i] * w_p * w_p + ln_n[i] * ln_p[i] * w_x * w_x);
    }
    d * params.kb_t * sum
}

/// Nonlocal free energy: entropy term plus the double integral
/// `1/2 int int G(|x - y|) (c_n - c_p)(x) (c_n - c_p)(y) dy dx`
/// by the double trapezoidal sum. The kernel is caller-supplied; this exists
/// as a cross-check of the `|phi'|^2` field energy, not as a solver path.
pub fn free_energy_nonlocal(
    c_n: &NodalField,
    c_p: &NodalField,
    params: &PhysicalParams,
    kernel: impl Fn(f64) -> f64,
) -> Result<f64> {
    if c_n.mesh() != c_p.mesh() {
        return Err(Error::MeshMismatch);
    }
    check_nonneg(c_n)?;
    check_nonneg(c_p)?;
    let mesh = c_n.mesh();
    let n = mesh.n_nodes();

    let entropy_density: Vec<f64> = c_n
        .values()
        .iter()
        .zip(c_p.values())
        .map(|(&a, &b)| params.kb_t * (c_ln_c(a) + c_ln_c(b)))
        .collect();
    let entropy = NodalField::new(mesh, entropy_density)?.integrate();

    let rho: Vec<f64> = c_n
        .values()
        .iter()
        .zip(c_p.values())
        .map(|(&a, &b)| a - b)
        .collect();
    let mut interaction = 0.0;
    for i in 0..n {
        let wi = mesh.lumped_mass(i);
        let xi = mesh.node(i);
        for j in 0..n {
            let wj = mesh.lumped_mass(j);
            let xj = mesh.node(j);
            interaction += wi * wj * kernel((xi - xj).abs()) * rho[i] * rho[j];
        }
    }
    Ok(entropy + 0.5 * interaction)
}

/// Evaluate mass, energy, and both dissipation functionals on a state.
pub fn report(
    state: &IonState,
    params: &PhysicalParams,
    sub_iterations: usize,
) -> Result<FunctionalReport> {
    Ok(FunctionalReport {
        t: state.t(),
        mass_n: state.mass_n(),
        mass_p: state.mass_p(),
        energy: total_energy(state, params)?,
        diss_classical: dissipation_classical(state, params),
        diss_modified: dissipation_modified(state, params),
        sub_iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_mesh;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_params() -> PhysicalParams {
        PhysicalParams::default()
    }

    fn state_from(
        mesh: crate::mesh::Mesh1D,
        c_n: impl Fn(f64) -> f64,
        c_p: impl Fn(f64) -> f64,
        phi: impl Fn(f64) -> f64,
    ) -> IonState {
        IonState::with_phi(
            NodalField::from_fn(mesh, c_n).unwrap(),
            NodalField::from_fn(mesh, c_p).unwrap(),
            NodalField::from_fn(mesh, phi).unwrap(),
            0.0,
        )
        .unwrap()
    }

    fn boltzmann_state(
        mesh: crate::mesh::Mesh1D,
        params: &PhysicalParams,
        phi: impl Fn(f64) -> f64 + Copy,
        c0_n: f64,
        c0_p: f64,
    ) -> IonState {
        let sn = params.drift_scale(params.z_n);
        let sp = params.drift_scale(params.z_p);
        state_from(
            mesh,
            move |x| c0_n * (-sn * phi(x)).exp(),
            move |x| c0_p * (-sp * phi(x)).exp(),
            phi,
        )
    }

    #[test]
    fn log_mean_limits_and_symmetry() {
        assert_eq!(log_mean(2.0, 2.0), 2.0);
        assert_eq!(log_mean(0.0, 3.0), 0.0);
        assert_eq!(log_mean(0.0, 0.0), 0.0);
        // exact on an exponential pair: (a-b)/ln(a/b)
        let (a, b) = (1.7f64, 0.4f64);
        let exact = (a - b) / (a / b).ln();
        assert!((log_mean(a, b) - exact).abs() < 1e-15);
        assert!((log_mean(a, b) - log_mean(b, a)).abs() < 1e-15);
        // series branch: near-equal arguments
        let (a, b) = (1.0f64, 1.0f64 + 1e-6);
        let exact = (b - a) / (b / a).ln();
        assert!((log_mean(a, b) - exact).abs() < 1e-14);
    }

    #[test]
    fn energy_of_unit_uniform_state_is_zero() {
        let mesh = build_mesh(-1.0, 1.0, 32).unwrap();
        let s = state_from(mesh, |_| 1.0, |_| 1.0, |_| 0.0);
        assert!(total_energy(&s, &unit_params()).unwrap().abs() < 1e-14);
    }

    #[test]
    fn energy_of_e_uniform_state_is_four_e() {
        let mesh = build_mesh(-1.0, 1.0, 32).unwrap();
        let e = std::f64::consts::E;
        let s = state_from(mesh, move |_| e, move |_| e, |_| 0.0);
        assert!((total_energy(&s, &unit_params()).unwrap() - 4.0 * e).abs() < 1e-12);
    }

    #[test]
    fn energy_of_pure_field_state() {
        // c = 0, phi linear with slope s, eps = 2: energy = 2 s^2
        let mesh = build_mesh(-1.0, 1.0, 32).unwrap();
        let slope = 0.7;
        let params = PhysicalParams {
            epsilon: 2.0,
            ..unit_params()
        };
        let s = state_from(mesh, |_| 0.0, |_| 0.0, move |x| slope * x);
        assert!((total_energy(&s, &params).unwrap() - 2.0 * slope * slope).abs() < 1e-12);
    }

    #[test]
    fn energy_rejects_genuinely_negative_concentrations() {
        let mesh = build_mesh(-1.0, 1.0, 4).unwrap();
        let mut v = vec![1.0; 5];
        v[2] = -1e-9;
        let c_n = NodalField::new(mesh, v).unwrap();
        let c_p = NodalField::constant(mesh, 1.0).unwrap();
        let phi = NodalField::constant(mesh, 0.0).unwrap();
        // IonState itself rejects this, so exercise the functional directly
        // through a state built with clamped-legal c_n and a raw call.
        let ok = IonState::with_phi(c_p.clone(), c_p.clone(), phi.clone(), 0.0).unwrap();
        assert!(total_energy(&ok, &unit_params()).is_ok());
        assert!(check_nonneg(&c_n).is_err());
    }

    #[test]
    fn flux_groups_vanish_on_boltzmann_profiles() {
        let mesh = build_mesh(-1.0, 1.0, 128).unwrap();
        let s = boltzmann_state(mesh, &unit_params(), |x| 0.3 * (2.5 * x).sin(), 0.7, 1.4);
        let (g_n, g_p) = entropy_flux_groups(&s, &unit_params());
        for g in g_n.iter().chain(&g_p) {
            assert!(g.abs() < 1e-12, "flux group {g}");
        }
    }

    #[test]
    fn flux_groups_of_uniform_state_in_linear_potential() {
        let mesh = build_mesh(-1.0, 1.0, 16).unwrap();
        let slope = 0.8;
        let s = state_from(mesh, |_| 2.0, |_| 2.0, move |x| slope * x);
        let params = unit_params();
        let (g_n, g_p) = entropy_flux_groups(&s, &params);
        for g in &g_n {
            assert!((g - params.drift_scale(params.z_n) * slope).abs() < 1e-12);
        }
        for g in &g_p {
            assert!((g - params.drift_scale(params.z_p) * slope).abs() < 1e-12);
        }
    }

    #[test]
    fn flux_groups_second_order_against_continuum() {
        let params = unit_params();
        let err = |n: usize| {
            let mesh = build_mesh(-1.0, 1.0, n).unwrap();
            let s = state_from(
                mesh,
                |x| 1.2 + 0.5 * (1.7 * x + 0.3).sin(),
                |x| 1.0 + 0.2 * x * x,
                |x| 0.4 * (2.0 * x).cos(),
            );
            let (g_n, _) = entropy_flux_groups(&s, &params);
            let h = mesh.h();
            g_n.iter()
                .enumerate()
                .fold(0.0f64, |m, (i, g)| {
                    let x = mesh.node(i) + 0.5 * h;
                    let c = 1.2 + 0.5 * (1.7 * x + 0.3).sin();
                    let dc = 0.5 * 1.7 * (1.7 * x + 0.3).cos();
                    let dphi = -0.4 * 2.0 * (2.0 * x).sin();
                    let exact = dc / c + params.drift_scale(params.z_n) * dphi;
                    m.max((g - exact).abs())
                })
        };
        let ratio = err(256) / err(512);
        assert!(
            (3.0..=5.0).contains(&ratio),
            "flux-group convergence ratio {ratio}"
        );
    }

    #[test]
    fn classical_dissipation_zero_at_equilibrium() {
        let mesh = build_mesh(-1.0, 1.0, 128).unwrap();
        let s = boltzmann_state(mesh, &unit_params(), |x| 0.2 * x * x - 0.1 * x, 1.0, 2.0);
        assert!(dissipation_classical(&s, &unit_params()) < 1e-12);
    }

    #[test]
    fn classical_dissipation_closed_form_uniform_linear() {
        // uniform c = 1, phi slope s: Delta = 4 s^2
        let mesh = build_mesh(-1.0, 1.0, 64).unwrap();
        let slope = 0.6;
        let s = state_from(mesh, |_| 1.0, |_| 1.0, move |x| slope * x);
        let d = dissipation_classical(&s, &unit_params());
        assert!((d - 4.0 * slope * slope).abs() < 1e-12);
    }

    #[test]
    fn modified_dissipation_zero_at_equilibrium() {
        let mesh = build_mesh(-1.0, 1.0, 128).unwrap();
        let s = boltzmann_state(mesh, &unit_params(), |x| 0.3 * (x + 0.2).cos(), 1.3, 0.6);
        assert!(dissipation_modified(&s, &unit_params()) < 1e-12);
    }

    #[test]
    fn modified_dissipation_single_species_reduces_to_classical() {
        let mesh = build_mesh(-1.0, 1.0, 128).unwrap();
        let s = state_from(
            mesh,
            |x| 1.0 + 0.5 * (std::f64::consts::PI * x).cos(),
            |_| 0.0,
            |x| 0.05 * x,
        );
        let d_mod = dissipation_modified(&s, &unit_params());
        let d_cls = dissipation_classical(&s, &unit_params());
        assert!(
            (d_mod - d_cls).abs() <= 1e-14 * d_cls.abs().max(1.0),
            "{d_mod} vs {d_cls}"
        );
    }

    #[test]
    fn modified_dissipation_drag_off_equals_classical_bitwise() {
        let mesh = build_mesh(-1.0, 1.0, 64).unwrap();
        let s = state_from(mesh, |x| 1.0 + 0.4 * x, |x| 1.5 - 0.3 * x, |x| 0.1 * x);
        let params = PhysicalParams {
            drag_average: None,
            ..unit_params()
        };
        let d_mod = dissipation_modified(&s, &params);
        let d_cls = dissipation_classical(&s, &params);
        assert_eq!(d_mod.to_bits(), d_cls.to_bits());
    }

    #[test]
    fn velocity_route_matches_closed_form_for_equal_d() {
        let mesh = build_mesh(-1.0, 1.0, 256).unwrap();
        let s = state_from(
            mesh,
            |x| 1.2 + 0.5 * (1.3 * x).sin(),
            |x| 0.9 + 0.3 * (2.1 * x).cos(),
            |x| 0.2 * x * x - 0.1 * x,
        );
        let closed = dissipation_modified(&s, &unit_params());
        let vel = dissipation_modified_velocity(&s, &unit_params());
        let rel = (closed - vel).abs() / closed.abs().max(1e-30);
        assert!(rel <= 0.02, "closed {closed} vs velocity {vel}, rel {rel}");
    }

    #[test]
    fn effective_velocities_vanish_at_equilibrium() {
        let mesh = build_mesh(-1.0, 1.0, 128).unwrap();
        let s = boltzmann_state(mesh, &unit_params(), |x| 0.25 * (x * x * x - x), 1.0, 1.0);
        let (u_n, u_p) = effective_velocities(&s, &unit_params());
        for u in u_n.iter().chain(&u_p) {
            assert!(u.abs() < 1e-12);
        }
    }

    #[test]
    fn effective_velocity_single_species_is_classical() {
        let mesh = build_mesh(-1.0, 1.0, 64).unwrap();
        let params = PhysicalParams {
            d_n: 0.7,
            d_p: 2.4,
            ..unit_params()
        };
        let s = state_from(mesh, |x| 1.0 + 0.4 * x * x, |_| 0.0, |x| 0.2 * x);
        let (u_n, _) = effective_velocities(&s, &params);
        let (g_n, _) = entropy_flux_groups(&s, &params);
        for (u, g) in u_n.iter().zip(&g_n) {
            let classical = -params.d_n * g;
            assert!(
                (u - classical).abs() <= 1e-15 * classical.abs().max(1.0),
                "{u} vs {classical}"
            );
        }
    }

    #[test]
    fn common_zero_set_of_both_functionals() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x2e29);
        let mesh = build_mesh(-1.0, 1.0, 64).unwrap();
        let params = unit_params();
        for _ in 0..100 {
            let a = rng.gen_range(0.05..0.8);
            let k = rng.gen_range(0.5..3.0);
            let p = rng.gen_range(-1.0..1.0);
            let c0n = rng.gen_range(0.2..2.0);
            let c0p = rng.gen_range(0.2..2.0);
            let s = boltzmann_state(mesh, &params, move |x| a * (k * x + p).sin(), c0n, c0p);
            assert!(dissipation_classical(&s, &params) <= 1e-10);
            assert!(dissipation_modified(&s, &params) <= 1e-10);
        }
    }

    #[test]
    fn nonlocal_energy_neutral_has_entropy_only() {
        let mesh = build_mesh(-1.0, 1.0, 32).unwrap();
        let c = NodalField::from_fn(mesh, |x| 1.0 + 0.5 * x * x).unwrap();
        let with_kernel = free_energy_nonlocal(&c, &c, &unit_params(), |r| (-r).exp()).unwrap();
        let entropy: f64 = {
            let d: Vec<f64> = c.values().iter().map(|&v| 2.0 * c_ln_c(v)).collect();
            NodalField::new(mesh, d).unwrap().integrate()
        };
        assert!((with_kernel - entropy).abs() < 1e-13);
    }

    #[test]
    fn nonlocal_energy_matches_hand_double_sum() {
        let mesh = build_mesh(-1.0, 1.0, 8).unwrap();
        let c_n = NodalField::from_fn(mesh, |x| 1.0 + 0.5 * x).unwrap();
        let c_p = NodalField::from_fn(mesh, |x| 1.0 - 0.25 * x * x).unwrap();
        let kernel = |r: f64| (-r).exp();
        let got = free_energy_nonlocal(&c_n, &c_p, &unit_params(), kernel).unwrap();

        // independent hand evaluation with explicit trapezoid weights
        let h = 0.25;
        let xs: Vec<f64> = (0..9).map(|i| -1.0 + h * i as f64).collect();
        let w = |i: usize| if i == 0 || i == 8 { 0.5 * h } else { h };
        let rho: Vec<f64> = xs
            .iter()
            .map(|&x| (1.0 + 0.5 * x) - (1.0 - 0.25 * x * x))
            .collect();
        let mut entropy = 0.0;
        for (i, &x) in xs.iter().enumerate() {
            let a: f64 = 1.0 + 0.5 * x;
            let b: f64 = 1.0 - 0.25 * x * x;
            entropy += w(i) * (a * a.ln() + b * b.ln());
        }
        let mut inter = 0.0;
        for i in 0..9 {
            for j in 0..9 {
                inter += w(i) * w(j) * kernel((xs[i] - xs[j]).abs()) * rho[i] * rho[j];
            }
        }
        let expected = entropy + 0.5 * inter;
        assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");
    }

    #[test]
    fn nonlocal_energy_consistent_with_field_energy() {
        // dipole-free charge: c_n - c_p = 0.6 cos(pi x); whole-line kernel
        // -|r|/2 of the negative second derivative; homogeneous Dirichlet
        let mesh = build_mesh(-1.0, 1.0, 256).unwrap();
        let params = unit_params();
        let c_n = NodalField::from_fn(mesh, |x| 1.0 + 0.3 * (std::f64::consts::PI * x).cos())
            .unwrap();
        let c_p = NodalField::from_fn(mesh, |x| 1.0 - 0.3 * (std::f64::consts::PI * x).cos())
            .unwrap();
        let phi = crate::poisson::solve_poisson(
            &c_n,
            &c_p,
            &params,
            &crate::poisson::PoissonBC::dirichlet(0.0, 0.0),
        )
        .unwrap();
        let state = IonState::with_phi(c_n.clone(), c_p.clone(), phi, 0.0).unwrap();

        let total = total_energy(&state, &params).unwrap();
        let entropy = {
            let zero_phi = NodalField::constant(mesh, 0.0).unwrap();
            let s = IonState::with_phi(c_n.clone(), c_p.clone(), zero_phi, 0.0).unwrap();
            total_energy(&s, &params).unwrap()
        };
        let field = total - entropy;

        let nonlocal = free_energy_nonlocal(&c_n, &c_p, &params, |r| -0.5 * r).unwrap();
        let interaction = nonlocal - entropy;

        let rel = (interaction - field).abs() / field.abs();
        assert!(
            rel <= 0.05,
            "field {field} vs nonlocal interaction {interaction}, rel {rel}"
        );
    }

    #[test]
    fn classical_dissipation_matches_refined_brute_force() {
        // independent quadrature: interpolate the state onto a 4x mesh and
        // evaluate the integrand with central differences and arithmetic means
        let mesh = build_mesh(-1.0, 1.0, 64).unwrap();
        let params = unit_params();
        let s = state_from(
            mesh,
            |x| 1.1 + 0.4 * (1.2 * x).sin(),
            |x| 0.9 + 0.2 * (0.7 * x).cos(),
            |x| 0.15 * x * x,
        );
        let got = dissipation_classical(&s, &params);

        let fine = build_mesh(-1.0, 1.0, 256).unwrap();
        let interp = |coarse: &NodalField, x: f64| -> f64 {
            let h = mesh.h();
            let pos = (x - mesh.x_left()) / h;
            let i = (pos.floor() as usize).min(mesh.n_cells() - 1);
            let frac = pos - i as f64;
            coarse.values()[i] * (1.0 - frac) + coarse.values()[i + 1] * frac
        };
        let hf = fine.h();
        let mut brute = 0.0;
        for e in 0..fine.n_cells() {
            let (xa, xb) = (fine.node(e), fine.node(e + 1));
            for (c, z, d) in [
                (s.c_n(), params.z_n, params.d_n),
                (s.c_p(), params.z_p, params.d_p),
            ] {
                let ca = interp(c, xa);
                let cb = interp(c, xb);
                let cm = 0.5 * (ca + cb);
                let dc = (cb - ca) / hf;
                let dphi = (interp(s.phi(), xb) - interp(s.phi(), xa)) / hf;
                let g = dc / cm + params.drift_scale(z) * dphi;
                brute += hf * d * cm * g * g;
            }
        }
        brute *= params.kb_t;
        let rel = (got - brute).abs() / brute.abs();
        assert!(rel <= 0.02, "edge form {got} vs brute force {brute}, rel {rel}");
    }

    #[test]
    fn report_collects_all_functionals() {
        let mesh = build_mesh(-1.0, 1.0, 32).unwrap();
        let s = state_from(mesh, |_| 1.0, |_| 1.0, |_| 0.0);
        let r = report(&s, &unit_params(), 3).unwrap();
        assert_eq!(r.sub_iterations, 3);
        assert!((r.mass_n - 2.0).abs() < 1e-12);
        assert!(r.diss_classical >= -1e-12 && r.diss_modified >= -1e-12);
    }
}
