//! Simulation drivers: run a configured simulation, stream CSV artifacts,
//! and report classical-vs-modified comparisons.
//!
//! All CSV output is deterministic: 17 significant digits, `.` decimal
//! separator, `\n` line endings, fixed column order. Files are written to a
//! temporary sibling and renamed into place, so a failed run never leaves a
//! partial CSV behind.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::config::{DiffusionConfig, RunModel, SimulationConfig};
use crate::error::Result;
use crate::general_diffusion::{equilibrium_of, run_diffusion_to_steady_with};
use crate::mesh::{linf_diff, NodalField};
use crate::nernst_planck::ModelKind;
use crate::time_integrator::{run_to_steady_with, IonState, TrajectorySummary};

/// Format a float with 17 significant digits (lossless for f64).
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Write `contents` to `path` atomically (temp file + rename).
fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".to_string());
    let tmp = dir.join(format!(".tmp.{name}"));
    let write = fs::write(&tmp, contents).and_then(|_| fs::rename(&tmp, path));
    if write.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    write?;
    Ok(())
}

/// Max-norm differences between the two models' steady states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonSummary {
    pub linf_c_n: f64,
    pub linf_c_p: f64,
    pub linf_phi: f64,
}

/// What a driver run produced.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    /// 0 when every requested run reached steady state, 2 otherwise.
    pub exit_code: i32,
    pub steady: bool,
    /// Steps taken (largest across models for `both`).
    pub steps: usize,
    /// One-line human summary (steps, steady flag, final masses).
    pub summary_line: String,
    pub comparison: Option<ComparisonSummary>,
}

const TIMESERIES_HEADER: &str =
    "t,mass_n,mass_p,energy,diss_classical,diss_modified,sub_iters,increment\n";

fn snapshot_csv(state: &IonState) -> String {
    let mesh = state.mesh();
    let mut s = String::from("x,c_n,c_p,phi\n");
    for (i, x) in mesh.nodes().enumerate() {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            fmt_f64(x),
            fmt_f64(state.c_n().values()[i]),
            fmt_f64(state.c_p().values()[i]),
            fmt_f64(state.phi().values()[i]),
        );
    }
    s
}

fn run_one_model(
    config: &SimulationConfig,
    model: ModelKind,
    dir: &Path,
) -> Result<(TrajectorySummary, IonState)> {
    fs::create_dir_all(dir)?;
    let params = config.physical_params(model);
    let bc = config.poisson_bc();
    let controls = config.solver_controls();
    let state0 = config.initial_state(model)?;

    write_atomic(&dir.join("snap_0.csv"), &snapshot_csv(&state0))?;

    let stride = config.snapshot_stride;
    let mut timeseries = String::from(TIMESERIES_HEADER);
    let mut last_snap = 0usize;
    let (summary, final_state) =
        run_to_steady_with(&state0, &params, &bc, &controls, |k, state, record| {
            let f = &record.functionals;
            let _ = writeln!(
                timeseries,
                "{},{},{},{},{},{},{},{}",
                fmt_f64(f.t),
                fmt_f64(f.mass_n),
                fmt_f64(f.mass_p),
                fmt_f64(f.energy),
                fmt_f64(f.diss_classical),
                fmt_f64(f.diss_modified),
                f.sub_iterations,
                fmt_f64(record.increment),
            );
            if k % stride == 0 {
                write_atomic(&dir.join(format!("snap_{k}.csv")), &snapshot_csv(state))?;
                last_snap = k;
            }
            Ok(())
        })?;

    if summary.steps != last_snap {
        write_atomic(
            &dir.join(format!("snap_{}.csv", summary.steps)),
            &snapshot_csv(&final_state),
        )?;
    }
    write_atomic(&dir.join("timeseries.csv"), &timeseries)?;
    Ok((summary, final_state))
}

fn comparison_csv(classical: &IonState, modified: &IonState) -> (String, ComparisonSummary) {
    let mesh = classical.mesh();
    let mut s = String::from(
        "x,c_n_classical,c_n_modified,c_p_classical,c_p_modified,phi_classical,phi_modified\n",
    );
    for (i, x) in mesh.nodes().enumerate() {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            fmt_f64(x),
            fmt_f64(classical.c_n().values()[i]),
            fmt_f64(modified.c_n().values()[i]),
            fmt_f64(classical.c_p().values()[i]),
            fmt_f64(modified.c_p().values()[i]),
            fmt_f64(classical.phi().values()[i]),
            fmt_f64(modified.phi().values()[i]),
        );
    }
    let summary = ComparisonSummary {
        linf_c_n: linf_diff(classical.c_n().values(), modified.c_n().values()),
        linf_c_p: linf_diff(classical.c_p().values(), modified.c_p().values()),
        linf_phi: linf_diff(classical.phi().values(), modified.phi().values()),
    };
    let _ = writeln!(
        s,
        "# linf_c_n = {}, linf_c_p = {}, linf_phi = {}",
        fmt_f64(summary.linf_c_n),
        fmt_f64(summary.linf_c_p),
        fmt_f64(summary.linf_phi),
    );
    (s, summary)
}

/// Run a validated configuration, writing CSV artifacts under its output
/// directory. For `model = both` the two runs land in `classical/` and
/// `modified/` subdirectories plus a steady-state `comparison.csv`.
pub fn run(config: &SimulationConfig) -> Result<RunOutcome> {
    config.validate()?;
    let out = PathBuf::from(&config.out_dir);
    fs::create_dir_all(&out)?;

    match config.model {
        RunModel::Classical | RunModel::Modified => {
            let model = if config.model == RunModel::Classical {
                ModelKind::Classical
            } else {
                ModelKind::Modified
            };
            let (summary, state) = run_one_model(config, model, &out)?;
            let line = format!(
                "{}: steps={} steady={} mass_n={} mass_p={}",
                model.name(),
                summary.steps,
                summary.steady,
                fmt_f64(state.mass_n()),
                fmt_f64(state.mass_p()),
            );
            Ok(RunOutcome {
                exit_code: if summary.steady { 0 } else { 2 },
                steady: summary.steady,
                steps: summary.steps,
                summary_line: line,
                comparison: None,
            })
        }
        RunModel::Both => {
            let (sum_c, end_c) = run_one_model(config, ModelKind::Classical, &out.join("classical"))?;
            let (sum_m, end_m) = run_one_model(config, ModelKind::Modified, &out.join("modified"))?;
            let (csv, comparison) = comparison_csv(&end_c, &end_m);
            write_atomic(&out.join("comparison.csv"), &csv)?;
            let steady = sum_c.steady && sum_m.steady;
            let line = format!(
                "both: classical steps={} steady={}, modified steps={} steady={}, \
                 linf_c_n={} linf_c_p={} linf_phi={}",
                sum_c.steps,
                sum_c.steady,
                sum_m.steps,
                sum_m.steady,
                fmt_f64(comparison.linf_c_n),
                fmt_f64(comparison.linf_c_p),
                fmt_f64(comparison.linf_phi),
            );
            Ok(RunOutcome {
                exit_code: if steady { 0 } else { 2 },
                steady,
                steps: sum_c.steps.max(sum_m.steps),
                summary_line: line,
                comparison: Some(comparison),
            })
        }
    }
}

fn diffusion_snapshot_csv(mesh: crate::mesh::Mesh1D, f: &NodalField) -> String {
    let mut s = String::from("x,f\n");
    for (i, x) in mesh.nodes().enumerate() {
        let _ = writeln!(s, "{},{}", fmt_f64(x), fmt_f64(f.values()[i]));
    }
    s
}

/// Run a configured scalar diffusion problem. Writes `timeseries.csv`
/// (`t,mass,rate`), stride snapshots (`x,f`), and `equilibrium.csv`
/// comparing the final density against the analytic steady state `C/a`.
pub fn run_diffusion(config: &DiffusionConfig) -> Result<RunOutcome> {
    config.validate()?;
    let out = PathBuf::from(&config.out_dir);
    fs::create_dir_all(&out)?;
    let problem = config.problem()?;
    let mesh = problem.mesh;

    write_atomic(
        &out.join("snap_0.csv"),
        &diffusion_snapshot_csv(mesh, &problem.f0),
    )?;

    let mut timeseries = String::from("t,mass,rate\n");
    let mut last_snap = 0usize;
    let stride = config.snapshot_stride;
    let mut snapshots: Vec<(usize, String)> = Vec::new();
    let (records, f_end, steady) = run_diffusion_to_steady_with(
        &problem,
        config.dt,
        config.steady_tol,
        config.max_steps,
        |k, f, record| {
            let _ = writeln!(
                timeseries,
                "{},{},{}",
                fmt_f64(record.t),
                fmt_f64(record.mass),
                fmt_f64(record.rate),
            );
            if k % stride == 0 {
                snapshots.push((k, diffusion_snapshot_csv(mesh, f)));
                last_snap = k;
            }
            Ok(())
        },
    )?;
    for (k, csv) in &snapshots {
        write_atomic(&out.join(format!("snap_{k}.csv")), csv)?;
    }
    if records.len() != last_snap {
        write_atomic(
            &out.join(format!("snap_{}.csv", records.len())),
            &diffusion_snapshot_csv(mesh, &f_end),
        )?;
    }
    write_atomic(&out.join("timeseries.csv"), &timeseries)?;

    let eq = equilibrium_of(&problem);
    let mut eq_csv = String::from("x,f_final,f_equilibrium\n");
    for (i, x) in mesh.nodes().enumerate() {
        let _ = writeln!(
            eq_csv,
            "{},{},{}",
            fmt_f64(x),
            fmt_f64(f_end.values()[i]),
            fmt_f64(eq.values()[i]),
        );
    }
    let linf = linf_diff(f_end.values(), eq.values());
    let _ = writeln!(eq_csv, "# linf_vs_equilibrium = {}", fmt_f64(linf));
    write_atomic(&out.join("equilibrium.csv"), &eq_csv)?;

    let line = format!(
        "diffusion: steps={} steady={} mass={} linf_vs_equilibrium={}",
        records.len(),
        steady,
        fmt_f64(f_end.integrate()),
        fmt_f64(linf),
    );
    Ok(RunOutcome {
        exit_code: if steady { 0 } else { 2 },
        steady,
        steps: records.len(),
        summary_line: line,
        comparison: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::Path;

    fn tmp_dir(tag: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("pnp-driver-{tag}-{}", std::process::id()));
        let _ = fs::remove_dir_all(&dir);
        dir
    }

    fn read(path: &Path) -> String {
        fs::read_to_string(path).unwrap_or_else(|e| panic!("missing {path:?}: {e}"))
    }

    #[test]
    fn equilibrium_initial_data_gives_one_row_and_exit_zero() {
        let dir = tmp_dir("eq");
        let config = SimulationConfig {
            model: RunModel::Classical,
            n_cells: 32,
            phi_left: 0.0,
            phi_right: 0.0,
            initial_c_n: "1".into(),
            initial_c_p: "1".into(),
            out_dir: dir.to_string_lossy().into_owned(),
            ..SimulationConfig::default()
        };
        let outcome = run(&config).unwrap();
        assert_eq!(outcome.exit_code, 0);
        assert!(outcome.steady);
        let ts = read(&dir.join("timeseries.csv"));
        let rows: Vec<&str> = ts.trim_end().lines().collect();
        assert_eq!(rows.len(), 2, "header + one data row, got:\n{ts}");
        assert_eq!(
            rows[0],
            "t,mass_n,mass_p,energy,diss_classical,diss_modified,sub_iters,increment"
        );
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn csv_output_is_byte_identical_across_runs() {
        let dir_a = tmp_dir("det-a");
        let dir_b = tmp_dir("det-b");
        let mk = |dir: &Path| SimulationConfig {
            model: RunModel::Modified,
            n_cells: 48,
            phi_left: 0.05,
            max_steps: 40,
            steady_tol: 1e-15,
            snapshot_stride: 16,
            out_dir: dir.to_string_lossy().into_owned(),
            ..SimulationConfig::default()
        };
        run(&mk(&dir_a)).unwrap();
        run(&mk(&dir_b)).unwrap();
        for name in ["timeseries.csv", "snap_0.csv", "snap_16.csv", "snap_40.csv"] {
            assert_eq!(
                read(&dir_a.join(name)),
                read(&dir_b.join(name)),
                "{name} differs between runs"
            );
        }
        fs::remove_dir_all(&dir_a).unwrap();
        fs::remove_dir_all(&dir_b).unwrap();
    }

    #[test]
    fn both_mode_writes_comparison_with_summary_line() {
        let dir = tmp_dir("both");
        let config = SimulationConfig {
            model: RunModel::Both,
            n_cells: 32,
            phi_left: 0.05,
            steady_tol: 1e-6,
            out_dir: dir.to_string_lossy().into_owned(),
            ..SimulationConfig::default()
        };
        let outcome = run(&config).unwrap();
        assert_eq!(outcome.exit_code, 0);
        let cmp = read(&dir.join("comparison.csv"));
        assert!(cmp.starts_with(
            "x,c_n_classical,c_n_modified,c_p_classical,c_p_modified,phi_classical,phi_modified\n"
        ));
        assert!(cmp.trim_end().lines().last().unwrap().starts_with("# linf_c_n"));
        assert!(dir.join("classical/timeseries.csv").exists());
        assert!(dir.join("modified/timeseries.csv").exists());
        let c = outcome.comparison.unwrap();
        assert!(c.linf_c_n < 1e-4, "equilibria differ: {c:?}");
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn unwritable_output_leaves_no_partial_csv() {
        // a regular file where the output directory should go makes every
        // write fail, including for root
        let dir = tmp_dir("ro");
        fs::create_dir_all(&dir).unwrap();
        let blocker = dir.join("blocker");
        fs::write(&blocker, "not a directory").unwrap();

        let config = SimulationConfig {
            model: RunModel::Classical,
            n_cells: 16,
            initial_c_n: "1".into(),
            initial_c_p: "1".into(),
            out_dir: blocker.join("out").to_string_lossy().into_owned(),
            ..SimulationConfig::default()
        };
        let result = run(&config);
        assert!(result.is_err());
        let names: Vec<String> = fs::read_dir(&dir)
            .unwrap()
            .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
            .collect();
        assert_eq!(names, vec!["blocker".to_string()], "partial files: {names:?}");
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn max_steps_without_steadiness_exits_two() {
        let dir = tmp_dir("slow");
        let config = SimulationConfig {
            model: RunModel::Classical,
            n_cells: 32,
            phi_left: 0.05,
            max_steps: 3,
            out_dir: dir.to_string_lossy().into_owned(),
            ..SimulationConfig::default()
        };
        let outcome = run(&config).unwrap();
        assert_eq!(outcome.exit_code, 2);
        assert!(!outcome.steady);
        // final snapshot still written
        assert!(dir.join("snap_3.csv").exists());
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn diffusion_run_reports_equilibrium_distance() {
        let dir = tmp_dir("diff");
        let config = DiffusionConfig {
            n_cells: 64,
            a: "exp(x)".into(),
            b: "2 + sin(pi*x)".into(),
            f0: "0.7".into(),
            dt: 0.05,
            steady_tol: 1e-9,
            out_dir: dir.to_string_lossy().into_owned(),
            ..DiffusionConfig::default()
        };
        let outcome = run_diffusion(&config).unwrap();
        assert_eq!(outcome.exit_code, 0);
        let eq = read(&dir.join("equilibrium.csv"));
        let last = eq.trim_end().lines().last().unwrap();
        let linf: f64 = last.rsplit('=').next().unwrap().trim().parse().unwrap();
        assert!(linf < 1e-6, "steady state far from C/a: {linf}");
        fs::remove_dir_all(&dir).unwrap();
    }
}
