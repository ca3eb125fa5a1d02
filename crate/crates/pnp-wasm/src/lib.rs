//! wasm-bindgen bindings for the browser demo: run the classical and
//! drag-modified ion transport models side by side, explore the scalar
//! diffusion equation's equilibrium/rate split, and probe the friction
//! matrix. All numerics live in `pnp-core`; this layer only shuttles flat
//! `f64` buffers to JavaScript.

use wasm_bindgen::prelude::*;

use pnp_core::config::DEFAULT_INITIAL;
use pnp_core::expr::Expr;
use pnp_core::general_diffusion::{equilibrium_of, step_general_diffusion, DiffusionProblem};
use pnp_core::mesh::linf_diff;
use pnp_core::{
    dissipation_classical, dissipation_modified, friction_matrix, total_energy, IonState,
    Mesh1D, MobilityAverage, ModelKind, NodalField, PhysicalParams, PoissonBC, SolverControls,
};

fn parse_average(name: &str) -> Result<Option<MobilityAverage>, String> {
    match name {
        "arithmetic" => Ok(Some(MobilityAverage::Arithmetic)),
        "harmonic" => Ok(Some(MobilityAverage::Harmonic)),
        "geometric" => Ok(Some(MobilityAverage::Geometric)),
        "off" => Ok(None),
        other => Err(format!("unknown drag average '{other}'")),
    }
}

struct ModelLane {
    params: PhysicalParams,
    state: IonState,
    steady: bool,
}

impl ModelLane {
    fn advance(
        &mut self,
        bc: &PoissonBC,
        controls: &SolverControls,
    ) -> Result<(f64, f64, f64), String> {
        let (next, _) =
            pnp_core::step(&self.state, &self.params, bc, controls).map_err(|e| e.to_string())?;
        let rate = linf_diff(next.c_n().values(), self.state.c_n().values())
            .max(linf_diff(next.c_p().values(), self.state.c_p().values()))
            / controls.dt;
        if rate <= controls.steady_tol {
            self.steady = true;
        }
        self.state = next;
        let energy = total_energy(&self.state, &self.params).map_err(|e| e.to_string())?;
        let diss = match self.params.model {
            ModelKind::Classical => dissipation_classical(&self.state, &self.params),
            ModelKind::Modified => dissipation_modified(&self.state, &self.params),
        };
        Ok((energy, diss, rate))
    }
}

/// Classical and modified runs advancing in lockstep from identical initial
/// data, with per-step energy and dissipation histories.
#[wasm_bindgen]
pub struct CompareSim {
    mesh: Mesh1D,
    bc: PoissonBC,
    controls: SolverControls,
    classical: ModelLane,
    modified: ModelLane,
    times: Vec<f64>,
    energy_classical: Vec<f64>,
    energy_modified: Vec<f64>,
    diss_classical: Vec<f64>,
    diss_modified: Vec<f64>,
}

#[wasm_bindgen]
impl CompareSim {
    /// `drag_average` is one of `arithmetic | harmonic | geometric | off`;
    /// `amplitude` scales the initial neutral bump `1 + A cos(pi x)`.
    #[wasm_bindgen(constructor)]
    pub fn new(
        n_cells: usize,
        dt: f64,
        phi_left: f64,
        phi_right: f64,
        amplitude: f64,
        d_n: f64,
        d_p: f64,
        drag_average: &str,
    ) -> Result<CompareSim, String> {
        if !(amplitude.is_finite() && amplitude.abs() < 1.0) {
            return Err("amplitude must lie in (-1, 1)".to_string());
        }
        let mesh = Mesh1D::new(-1.0, 1.0, n_cells).map_err(|e| e.to_string())?;
        let bc = PoissonBC::dirichlet(phi_left, phi_right);
        let controls = SolverControls {
            dt,
            ..SolverControls::default()
        };
        controls.validate().map_err(|e| e.to_string())?;
        let drag = parse_average(drag_average)?;

        let bump = NodalField::from_fn(mesh, |x| {
            1.0 + amplitude * (std::f64::consts::PI * x).cos()
        })
        .map_err(|e| e.to_string())?;

        let lane = |model: ModelKind| -> Result<ModelLane, String> {
            let params = PhysicalParams {
                d_n,
                d_p,
                drag_average: drag,
                model,
                ..PhysicalParams::default()
            };
            params.validate().map_err(|e| e.to_string())?;
            let state = IonState::new(bump.clone(), bump.clone(), &params, &bc)
                .map_err(|e| e.to_string())?;
            Ok(ModelLane {
                params,
                state,
                steady: false,
            })
        };

        Ok(CompareSim {
            mesh,
            bc,
            controls,
            classical: lane(ModelKind::Classical)?,
            modified: lane(ModelKind::Modified)?,
            times: Vec::new(),
            energy_classical: Vec::new(),
            energy_modified: Vec::new(),
            diss_classical: Vec::new(),
            diss_modified: Vec::new(),
        })
    }

    /// Advance both lanes by up to `steps` steps (lanes stop individually at
    /// steady state). Returns true once both are steady.
    pub fn advance(&mut self, steps: usize) -> Result<bool, String> {
        for _ in 0..steps {
            if self.classical.steady && self.modified.steady {
                break;
            }
            let mut t = self.times.last().copied().unwrap_or(0.0);
            t += self.controls.dt;
            let (e_c, d_c, _) = if self.classical.steady {
                (
                    *self.energy_classical.last().unwrap_or(&0.0),
                    *self.diss_classical.last().unwrap_or(&0.0),
                    0.0,
                )
            } else {
                self.classical.advance(&self.bc, &self.controls)?
            };
            let (e_m, d_m, _) = if self.modified.steady {
                (
                    *self.energy_modified.last().unwrap_or(&0.0),
                    *self.diss_modified.last().unwrap_or(&0.0),
                    0.0,
                )
            } else {
                self.modified.advance(&self.bc, &self.controls)?
            };
            self.times.push(t);
            self.energy_classical.push(e_c);
            self.energy_modified.push(e_m);
            self.diss_classical.push(d_c);
            self.diss_modified.push(d_m);
        }
        Ok(self.classical.steady && self.modified.steady)
    }

    pub fn x(&self) -> Vec<f64> {
        self.mesh.nodes().collect()
    }

    pub fn time(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    pub fn steps_taken(&self) -> usize {
        self.times.len()
    }

    pub fn classical_c_n(&self) -> Vec<f64> {
        self.classical.state.c_n().values().to_vec()
    }

    pub fn classical_c_p(&self) -> Vec<f64> {
        self.classical.state.c_p().values().to_vec()
    }

    pub fn classical_phi(&self) -> Vec<f64> {
        self.classical.state.phi().values().to_vec()
    }

    pub fn modified_c_n(&self) -> Vec<f64> {
        self.modified.state.c_n().values().to_vec()
    }

    pub fn modified_c_p(&self) -> Vec<f64> {
        self.modified.state.c_p().values().to_vec()
    }

    pub fn modified_phi(&self) -> Vec<f64> {
        self.modified.state.phi().values().to_vec()
    }

    pub fn times(&self) -> Vec<f64> {
        self.times.clone()
    }

    pub fn dissipation_classical_series(&self) -> Vec<f64> {
        self.diss_classical.clone()
    }

    pub fn dissipation_modified_series(&self) -> Vec<f64> {
        self.diss_modified.clone()
    }

    pub fn energy_classical_series(&self) -> Vec<f64> {
        self.energy_classical.clone()
    }

    pub fn energy_modified_series(&self) -> Vec<f64> {
        self.energy_modified.clone()
    }

    /// Max-norm gap between the two lanes' concentration fields.
    pub fn linf_gap(&self) -> f64 {
        linf_diff(
            self.classical.state.c_n().values(),
            self.modified.state.c_n().values(),
        )
        .max(linf_diff(
            self.classical.state.c_p().values(),
            self.modified.state.c_p().values(),
        ))
    }
}

/// Scalar inhomogeneous diffusion lane: watch any positive `b(x)` relax to
/// the same `C / a(x)` equilibrium.
#[wasm_bindgen]
pub struct DiffusionSim {
    problem: DiffusionProblem,
    f: NodalField,
    equilibrium: NodalField,
    dt: f64,
    t: f64,
    steady: bool,
}

#[wasm_bindgen]
impl DiffusionSim {
    /// `a_expr`, `b_expr`, `f0_expr` are expressions in `x`
    /// (`+ - * / ^ cos sin exp pi e`).
    #[wasm_bindgen(constructor)]
    pub fn new(
        n_cells: usize,
        dt: f64,
        a_expr: &str,
        b_expr: &str,
        f0_expr: &str,
    ) -> Result<DiffusionSim, String> {
        let mesh = Mesh1D::new(-1.0, 1.0, n_cells).map_err(|e| e.to_string())?;
        let field = |src: &str| -> Result<NodalField, String> {
            let expr = Expr::parse(src).map_err(|e| e.to_string())?;
            NodalField::from_fn(mesh, |x| expr.eval(x)).map_err(|e| e.to_string())
        };
        let problem = DiffusionProblem::new(field(a_expr)?, field(b_expr)?, field(f0_expr)?)
            .map_err(|e| e.to_string())?;
        let equilibrium = equilibrium_of(&problem);
        let f = problem.f0.clone();
        Ok(DiffusionSim {
            problem,
            f,
            equilibrium,
            dt,
            t: 0.0,
            steady: false,
        })
    }

    pub fn advance(&mut self, steps: usize) -> Result<bool, String> {
        for _ in 0..steps {
            if self.steady {
                break;
            }
            let next =
                step_general_diffusion(&self.problem, &self.f, self.dt).map_err(|e| e.to_string())?;
            let rate = linf_diff(next.values(), self.f.values()) / self.dt;
            self.f = next;
            self.t += self.dt;
            if rate <= 1e-9 {
                self.steady = true;
            }
        }
        Ok(self.steady)
    }

    pub fn x(&self) -> Vec<f64> {
        self.problem.mesh.nodes().collect()
    }

    pub fn f(&self) -> Vec<f64> {
        self.f.values().to_vec()
    }

    pub fn equilibrium(&self) -> Vec<f64> {
        self.equilibrium.values().to_vec()
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn mass(&self) -> f64 {
        self.f.integrate()
    }

    pub fn linf_to_equilibrium(&self) -> f64 {
        linf_diff(self.f.values(), self.equilibrium.values())
    }
}

/// Friction matrix entries and eigenvalues at one point:
/// `[m11, m12, m21, m22, eig_min, eig_max]`. The off-diagonals are equal by
/// construction and the eigenvalues never go negative.
#[wasm_bindgen]
pub fn friction_probe(
    c_n: f64,
    c_p: f64,
    d_n: f64,
    d_p: f64,
    kb_t: f64,
    drag_average: &str,
) -> Result<Vec<f64>, String> {
    let params = PhysicalParams {
        d_n,
        d_p,
        kb_t,
        drag_average: parse_average(drag_average)?,
        ..PhysicalParams::default()
    };
    params.validate().map_err(|e| e.to_string())?;
    let m = friction_matrix(c_n.max(0.0), c_p.max(0.0), &params);
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
    Ok(vec![
        m[0][0],
        m[0][1],
        m[1][0],
        m[1][1],
        tr / 2.0 - disc,
        tr / 2.0 + disc,
    ])
}

/// Default initial-data expression used by the page.
#[wasm_bindgen]
pub fn default_initial_expression() -> String {
    DEFAULT_INITIAL.to_string()
}
