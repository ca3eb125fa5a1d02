//! Flat `key = value` configuration with strict unknown-key rejection,
//! documented defaults, paper-style presets, and a lossless renderer.

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::mesh::{build_mesh, Mesh1D, NodalField};
use crate::nernst_planck::{MobilityAverage, ModelKind, PhysicalParams};
use crate::poisson::{BcKind, PoissonBC};
use crate::time_integrator::{IonState, SolverControls};

/// Which solver paths a run exercises.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunModel {
    Classical,
    Modified,
    Both,
}

impl RunModel {
    pub fn name(&self) -> &'static str {
        match self {
            RunModel::Classical => "classical",
            RunModel::Modified => "modified",
            RunModel::Both => "both",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "classical" => Some(RunModel::Classical),
            "modified" => Some(RunModel::Modified),
            "both" => Some(RunModel::Both),
            _ => None,
        }
    }
}

/// Fully resolved simulation configuration. Every field has a documented
/// default; see [`SimulationConfig::default`].
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub x_left: f64,
    pub x_right: f64,
    pub n_cells: usize,
    pub d_n: f64,
    pub d_p: f64,
    pub z_n: f64,
    pub z_p: f64,
    pub q: f64,
    pub kb_t: f64,
    pub epsilon: f64,
    pub drag_average: Option<MobilityAverage>,
    pub model: RunModel,
    pub bc_kind: BcKind,
    pub phi_left: f64,
    pub phi_right: f64,
    pub robin_alpha: f64,
    pub dt: f64,
    pub sub_tol: f64,
    pub max_sub_iters: usize,
    pub steady_tol: f64,
    pub max_steps: usize,
    pub initial_c_n: String,
    pub initial_c_p: String,
    pub out_dir: String,
    pub snapshot_stride: usize,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            x_left: -1.0,
            x_right: 1.0,
            n_cells: 256,
            d_n: 1.0,
            d_p: 1.0,
            z_n: -1.0,
            z_p: 1.0,
            q: 1.0,
            kb_t: 1.0,
            epsilon: 1.0,
            drag_average: Some(MobilityAverage::Arithmetic),
            model: RunModel::Both,
            bc_kind: BcKind::Dirichlet,
            phi_left: 0.0,
            phi_right: 0.0,
            robin_alpha: 0.0,
            dt: 1e-3,
            sub_tol: 1e-10,
            max_sub_iters: 100,
            steady_tol: 1e-8,
            max_steps: 100_000,
            initial_c_n: DEFAULT_INITIAL.to_string(),
            initial_c_p: DEFAULT_INITIAL.to_string(),
            out_dir: "out".to_string(),
            snapshot_stride: 100,
        }
    }
}

/// Smooth neutral perturbation used when no initial data is configured.
pub const DEFAULT_INITIAL: &str = "1 + 0.5*cos(pi*x)";

/// Names accepted by [`SimulationConfig::preset`] and the `preset` key.
pub const PRESET_NAMES: [&str; 2] = ["fig41-left", "fig41-right"];

impl SimulationConfig {
    /// Named experiment presets. The two differ only in which end of the
    /// domain carries the 0.05 potential.
    pub fn preset(name: &str) -> Result<Self> {
        let base = SimulationConfig::default();
        match name {
            "fig41-left" => Ok(SimulationConfig {
                phi_left: 0.05,
                phi_right: 0.0,
                ..base
            }),
            "fig41-right" => Ok(SimulationConfig {
                phi_left: 0.0,
                phi_right: 0.05,
                ..base
            }),
            other => Err(Error::UnknownPreset(other.to_string())),
        }
    }

    /// Parse the documented flat `key = value` format (UTF-8, `#` comments,
    /// unknown keys rejected) and validate the result.
    pub fn parse(text: &str) -> Result<Self> {
        let entries = parse_key_values(text)?;
        let mut config = match entries.iter().find(|e| e.key == "preset") {
            Some(e) => SimulationConfig::preset(&e.value).map_err(|_| Error::ConfigParse {
                line: e.line,
                column: e.value_column,
                message: format!("unknown preset '{}'", e.value),
            })?,
            None => SimulationConfig::default(),
        };
        for e in &entries {
            config.apply(e)?;
        }
        config.validate()?;
        Ok(config)
    }

    fn apply(&mut self, e: &RawEntry) -> Result<()> {
        match e.key.as_str() {
            "preset" => {} // consumed above
            "x_left" => self.x_left = e.parse_f64()?,
            "x_right" => self.x_right = e.parse_f64()?,
            "n_cells" => self.n_cells = e.parse_usize()?,
            "d_n" => self.d_n = e.parse_f64()?,
            "d_p" => self.d_p = e.parse_f64()?,
            "z_n" => self.z_n = e.parse_f64()?,
            "z_p" => self.z_p = e.parse_f64()?,
            "q" => self.q = e.parse_f64()?,
            "kb_t" => self.kb_t = e.parse_f64()?,
            "epsilon" => self.epsilon = e.parse_f64()?,
            "drag_average" => {
                self.drag_average = match e.value.as_str() {
                    "arithmetic" => Some(MobilityAverage::Arithmetic),
                    "harmonic" => Some(MobilityAverage::Harmonic),
                    "geometric" => Some(MobilityAverage::Geometric),
                    "off" => None,
                    other => {
                        return Err(e.value_error(format!(
                            "expected arithmetic|harmonic|geometric|off, got '{other}'"
                        )))
                    }
                }
            }
            "model" => {
                self.model = RunModel::parse(&e.value).ok_or_else(|| {
                    e.value_error(format!(
                        "expected classical|modified|both, got '{}'",
                        e.value
                    ))
                })?
            }
            "bc_kind" => {
                self.bc_kind = match e.value.as_str() {
                    "dirichlet" => BcKind::Dirichlet,
                    "robin" => BcKind::Robin,
                    other => {
                        return Err(
                            e.value_error(format!("expected dirichlet|robin, got '{other}'"))
                        )
                    }
                }
            }
            "phi_left" => self.phi_left = e.parse_f64()?,
            "phi_right" => self.phi_right = e.parse_f64()?,
            "robin_alpha" => self.robin_alpha = e.parse_f64()?,
            "dt" => self.dt = e.parse_f64()?,
            "sub_tol" => self.sub_tol = e.parse_f64()?,
            "max_sub_iters" => self.max_sub_iters = e.parse_usize()?,
            "steady_tol" => self.steady_tol = e.parse_f64()?,
            "max_steps" => self.max_steps = e.parse_usize()?,
            "initial_c_n" => self.initial_c_n = e.value.clone(),
            "initial_c_p" => self.initial_c_p = e.value.clone(),
            "out_dir" => self.out_dir = e.value.clone(),
            "snapshot_stride" => self.snapshot_stride = e.parse_usize()?,
            other => {
                return Err(Error::ConfigParse {
                    line: e.line,
                    column: e.key_column,
                    message: format!("unknown key '{other}'"),
                })
            }
        }
        Ok(())
    }

    /// Emit the config in the same format [`SimulationConfig::parse`] reads.
    /// `parse(render(c)) == c` for every valid config.
    pub fn render(&self) -> String {
        let drag = match self.drag_average {
            Some(k) => k.name(),
            None => "off",
        };
        format!(
            "# mesh\n\
             x_left = {:?}\n\
             x_right = {:?}\n\
             n_cells = {}\n\
             \n\
             # physics\n\
             d_n = {:?}\n\
             d_p = {:?}\n\
             z_n = {:?}\n\
             z_p = {:?}\n\
             q = {:?}\n\
             kb_t = {:?}\n\
             epsilon = {:?}\n\
             drag_average = {}\n\
             model = {}\n\
             \n\
             # potential boundary condition\n\
             bc_kind = {}\n\
             phi_left = {:?}\n\
             phi_right = {:?}\n\
             robin_alpha = {:?}\n\
             \n\
             # solver controls\n\
             dt = {:?}\n\
             sub_tol = {:?}\n\
             max_sub_iters = {}\n\
             steady_tol = {:?}\n\
             max_steps = {}\n\
             \n\
             # initial data and output\n\
             initial_c_n = {}\n\
             initial_c_p = {}\n\
             out_dir = {}\n\
             snapshot_stride = {}\n",
            self.x_left,
            self.x_right,
            self.n_cells,
            self.d_n,
            self.d_p,
            self.z_n,
            self.z_p,
            self.q,
            self.kb_t,
            self.epsilon,
            drag,
            self.model.name(),
            self.bc_kind.name(),
            self.phi_left,
            self.phi_right,
            self.robin_alpha,
            self.dt,
            self.sub_tol,
            self.max_sub_iters,
            self.steady_tol,
            self.max_steps,
            self.initial_c_n,
            self.initial_c_p,
            self.out_dir,
            self.snapshot_stride,
        )
    }

    /// Check every field against its owning type's invariants before any
    /// solve starts. Errors name the offending field.
    pub fn validate(&self) -> Result<()> {
        let named = |e: Error| match e {
            Error::InvalidParameter { name, reason } => Error::ConfigValidation {
                field: name.to_string(),
                reason,
            },
            other => other,
        };
        if !(self.x_left.is_finite() && self.x_right.is_finite() && self.x_right > self.x_left) {
            return Err(Error::ConfigValidation {
                field: "x_right".into(),
                reason: format!(
                    "domain [{}, {}] is not a valid interval",
                    self.x_left, self.x_right
                ),
            });
        }
        if self.n_cells < 2 {
            return Err(Error::ConfigValidation {
                field: "n_cells".into(),
                reason: format!("need at least 2 cells, got {}", self.n_cells),
            });
        }
        self.physical_params(ModelKind::Modified)
            .validate()
            .map_err(named)?;
        self.poisson_bc().validate().map_err(|e| match e {
            Error::InvalidParameter { reason, .. } => Error::ConfigValidation {
                field: "robin_alpha".to_string(),
                reason,
            },
            other => other,
        })?;
        self.solver_controls().validate().map_err(named)?;
        if self.snapshot_stride == 0 {
            return Err(Error::ConfigValidation {
                field: "snapshot_stride".into(),
                reason: "must be at least 1".into(),
            });
        }
        if self.out_dir.is_empty() {
            return Err(Error::ConfigValidation {
                field: "out_dir".into(),
                reason: "must not be empty".into(),
            });
        }
        // the initial data must parse, evaluate finite, and be nonnegative
        let mesh = self.mesh()?;
        for (field, src) in [
            ("initial_c_n", &self.initial_c_n),
            ("initial_c_p", &self.initial_c_p),
        ] {
            let expr = Expr::parse(src).map_err(|e| Error::ConfigValidation {
                field: field.into(),
                reason: e.to_string(),
            })?;
            let values = NodalField::from_fn(mesh, |x| expr.eval(x)).map_err(|e| {
                Error::ConfigValidation {
                    field: field.into(),
                    reason: e.to_string(),
                }
            })?;
            if values.min() < 0.0 {
                return Err(Error::ConfigValidation {
                    field: field.into(),
                    reason: format!("initial concentration dips to {}", values.min()),
                });
            }
        }
        Ok(())
    }

    pub fn mesh(&self) -> Result<Mesh1D> {
        build_mesh(self.x_left, self.x_right, self.n_cells)
    }

    pub fn physical_params(&self, model: ModelKind) -> PhysicalParams {
        PhysicalParams {
            d_n: self.d_n,
            d_p: self.d_p,
            z_n: self.z_n,
            z_p: self.z_p,
            q: self.q,
            kb_t: self.kb_t,
            epsilon: self.epsilon,
            drag_average: self.drag_average,
            model,
            drag_mobility_override: None,
        }
    }

    pub fn poisson_bc(&self) -> PoissonBC {
        PoissonBC {
            kind: self.bc_kind,
            left_value: self.phi_left,
            right_value: self.phi_right,
            alpha: self.robin_alpha,
        }
    }

    pub fn solver_controls(&self) -> SolverControls {
        SolverControls {
            dt: self.dt,
            sub_tol: self.sub_tol,
            max_sub_iters: self.max_sub_iters,
            steady_tol: self.steady_tol,
            max_steps: self.max_steps,
        }
    }

    /// Evaluate the initial-data expressions and solve for the initial
    /// potential.
    pub fn initial_state(&self, model: ModelKind) -> Result<IonState> {
        let mesh = self.mesh()?;
        let c_n_expr = Expr::parse(&self.initial_c_n)?;
        let c_p_expr = Expr::parse(&self.initial_c_p)?;
        let c_n = NodalField::from_fn(mesh, |x| c_n_expr.eval(x))?;
        let c_p = NodalField::from_fn(mesh, |x| c_p_expr.eval(x))?;
        IonState::new(c_n, c_p, &self.physical_params(model), &self.poisson_bc())
    }
}

/// Configuration of the scalar inhomogeneous diffusion run
/// (`diffusion` subcommand).
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionConfig {
    pub x_left: f64,
    pub x_right: f64,
    pub n_cells: usize,
    /// Equilibrium coefficient field, as an expression in `x`.
    pub a: String,
    /// Rate coefficient field, as an expression in `x`.
    pub b: String,
    /// Initial density, as an expression in `x`.
    pub f0: String,
    pub dt: f64,
    pub steady_tol: f64,
    pub max_steps: usize,
    pub out_dir: String,
    pub snapshot_stride: usize,
}

impl Default for DiffusionConfig {
    fn default() -> Self {
        DiffusionConfig {
            x_left: -1.0,
            x_right: 1.0,
            n_cells: 256,
            a: "exp(x)".to_string(),
            b: "1".to_string(),
            f0: "1".to_string(),
            dt: 1e-3,
            steady_tol: 1e-8,
            max_steps: 100_000,
            out_dir: "out".to_string(),
            snapshot_stride: 100,
        }
    }
}

impl DiffusionConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let entries = parse_key_values(text)?;
        let mut config = DiffusionConfig::default();
        for e in &entries {
            match e.key.as_str() {
                "x_left" => config.x_left = e.parse_f64()?,
                "x_right" => config.x_right = e.parse_f64()?,
                "n_cells" => config.n_cells = e.parse_usize()?,
                "a" => config.a = e.value.clone(),
                "b" => config.b = e.value.clone(),
                "f0" => config.f0 = e.value.clone(),
                "dt" => config.dt = e.parse_f64()?,
                "steady_tol" => config.steady_tol = e.parse_f64()?,
                "max_steps" => config.max_steps = e.parse_usize()?,
                "out_dir" => config.out_dir = e.value.clone(),
                "snapshot_stride" => config.snapshot_stride = e.parse_usize()?,
                other => {
                    return Err(Error::ConfigParse {
                        line: e.line,
                        column: e.key_column,
                        message: format!("unknown key '{other}'"),
                    })
                }
            }
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x_left.is_finite() && self.x_right.is_finite() && self.x_right > self.x_left) {
            return Err(Error::ConfigValidation {
                field: "x_right".into(),
                reason: format!(
                    "domain [{}, {}] is not a valid interval",
                    self.x_left, self.x_right
                ),
            });
        }
        if self.n_cells < 2 {
            return Err(Error::ConfigValidation {
                field: "n_cells".into(),
                reason: format!("need at least 2 cells, got {}", self.n_cells),
            });
        }
        for (field, v) in [("dt", self.dt), ("steady_tol", self.steady_tol)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::ConfigValidation {
                    field: field.into(),
                    reason: format!("must be positive and finite, got {v}"),
                });
            }
        }
        if self.max_steps == 0 || self.snapshot_stride == 0 {
            return Err(Error::ConfigValidation {
                field: if self.max_steps == 0 {
                    "max_steps".into()
                } else {
                    "snapshot_stride".into()
                },
                reason: "must be at least 1".into(),
            });
        }
        self.problem().map(|_| ())
    }

    /// Build the diffusion problem, naming the offending expression on error.
    pub fn problem(&self) -> Result<crate::general_diffusion::DiffusionProblem> {
        let mesh = build_mesh(self.x_left, self.x_right, self.n_cells)?;
        let field = |field: &str, src: &str| -> Result<NodalField> {
            let expr = Expr::parse(src).map_err(|e| Error::ConfigValidation {
                field: field.into(),
                reason: e.to_string(),
            })?;
            NodalField::from_fn(mesh, |x| expr.eval(x)).map_err(|e| Error::ConfigValidation {
                field: field.into(),
                reason: e.to_string(),
            })
        };
        crate::general_diffusion::DiffusionProblem::new(
            field("a", &self.a)?,
            field("b", &self.b)?,
            field("f0", &self.f0)?,
        )
    }
}

struct RawEntry {
    key: String,
    value: String,
    line: usize,
    key_column: usize,
    value_column: usize,
}

impl RawEntry {
    fn value_error(&self, message: String) -> Error {
        Error::ConfigParse {
            line: self.line,
            column: self.value_column,
            message,
        }
    }

    fn parse_f64(&self) -> Result<f64> {
        self.value
            .parse::<f64>()
            .map_err(|_| self.value_error(format!("expected a number, got '{}'", self.value)))
    }

    fn parse_usize(&self) -> Result<usize> {
        self.value
            .parse::<usize>()
            .map_err(|_| self.value_error(format!("expected a nonnegative integer, got '{}'", self.value)))
    }
}

/// Split text into `key = value` entries: `#` starts a comment, blank lines
/// are skipped, keys must be unique.
fn parse_key_values(text: &str) -> Result<Vec<RawEntry>> {
    let mut entries: Vec<RawEntry> = Vec::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let content = match raw_line.find('#') {
            Some(p) => &raw_line[..p],
            None => raw_line,
        };
        if content.trim().is_empty() {
            continue;
        }
        let eq = content.find('=').ok_or(Error::ConfigParse {
            line,
            column: 1,
            message: "expected 'key = value'".to_string(),
        })?;
        let key_part = &content[..eq];
        let value_part = &content[eq + 1..];
        let key = key_part.trim();
        let value = value_part.trim();
        let key_column = key_part.find(|c: char| !c.is_whitespace()).unwrap_or(0) + 1;
        if key.is_empty() {
            return Err(Error::ConfigParse {
                line,
                column: 1,
                message: "missing key before '='".to_string(),
            });
        }
        let value_column =
            eq + 2 + value_part.find(|c: char| !c.is_whitespace()).unwrap_or(0);
        if value.is_empty() {
            return Err(Error::ConfigParse {
                line,
                column: eq + 2,
                message: format!("missing value for '{key}'"),
            });
        }
        if entries.iter().any(|e| e.key == key) {
            return Err(Error::ConfigParse {
                line,
                column: key_column,
                message: format!("duplicate key '{key}'"),
            });
        }
        entries.push(RawEntry {
            key: key.to_string(),
            value: value.to_string(),
            line,
            key_column,
            value_column,
        });
    }
    Ok(entries)
}
