//! Single runs with artifacts, parameter sweeps and mesh-convergence studies.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::diagnostics::DiagnosticsRecord;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::levelset::LevelSetParams;
use crate::scenario::{InterfaceSettings, Thickness};

use super::config::{Resolution, RunConfig, SweepPlan, SweepPoint};
use super::output::{write_diagnostics, write_json, write_rows, write_step_log, write_vtk};
use super::run::{run_case, OracleCheck, RunOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridInfo {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    pub fluid_cells: usize,
}

impl GridInfo {
    fn of(grid: &Grid) -> GridInfo {
        GridInfo {
            nx: grid.nx,
            ny: grid.ny,
            dx: grid.dx,
            dy: grid.dy,
            fluid_cells: grid.n_fluid(),
        }
    }
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, Serialize)]
pub struct Summary<'a> {
    pub case: &'a str,
    pub status: &'static str,
    pub error: Option<String>,
    pub config: &'a RunConfig,
    pub grid: GridInfo,
    pub levelset: Option<LevelSetParams>,
    pub simulated_time: f64,
    pub final_record: Option<DiagnosticsRecord>,
    pub oracle: Option<OracleCheck>,
    pub steady_at: Option<f64>,
    pub ink_exit_at: Option<f64>,
    pub phi_range: Option<[f64; 2]>,
    pub flow_solves: usize,
    pub levelset_steps: usize,
    pub wall_clock: f64,
}

/// Builds and runs one configuration, writing `diagnostics.csv`,
/// `steps.csv`, `summary.json`, `ink.csv` for cases with an inlet, and any requested `fields_NNNN.vtk` into the
/// output directory. A failed run leaves `failed_state.vtk` and a summary
/// carrying the error.
pub fn run_single(config: &RunConfig) -> Result<RunOutcome> {
    let case = config.build_case()?;
    let dir = config.output.directory.clone();
    std::fs::create_dir_all(&dir)?;
    let every = config.output.snapshot_every;
    let mut snapshot = |k: usize, t: f64, grid: &Grid, fields: &crate::grid::FieldSet| -> Result<()> {
        if every > 0 && k.is_multiple_of(every) {
            write_vtk(&dir.join(format!("fields_{:04}.vtk", k / every)), grid, fields, t)?;
        }
        Ok(())
    };
    log::info!(
        "{}: {}x{} cells, h = {:.4e} m, until t = {:.4e}",
        case.name,
        case.grid.nx,
        case.grid.ny,
        case.grid.m_min(),
        case.duration
    );
    let mut summary = Summary {
        case: &case.name,
        status: "ok",
        error: None,
        config,
        grid: GridInfo::of(&case.grid),
        levelset: case.levelset,
        simulated_time: 0.0,
        final_record: None,
        oracle: None,
        steady_at: None,
        ink_exit_at: None,
        phi_range: None,
        flow_solves: 0,
        levelset_steps: 0,
        wall_clock: 0.0,
    };
    match run_case(&case, &config.settings, Some(&mut snapshot)) {
        Ok(out) => {
            write_diagnostics(&dir.join("diagnostics.csv"), &out.records)?;
            write_step_log(&dir.join("steps.csv"), &out.log)?;
            if !out.ink.is_empty() {
                write_rows(&dir.join("ink.csv"), &out.ink)?;
            }
            summary.simulated_time = out.time;
            summary.final_record = Some(*out.final_record());
            summary.oracle = Some(out.oracle);
            summary.steady_at = out.steady_at;
            summary.ink_exit_at = out.ink_exit_at;
            summary.phi_range = Some([out.phi_min, out.phi_max]);
            summary.flow_solves = out.flow_solves;
            summary.levelset_steps = out.levelset_steps;
            summary.wall_clock = out.wall_clock;
            write_json(&dir.join("summary.json"), &summary)?;
            Ok(out)
        }
        Err(failure) => {
            log::error!("{} failed at t = {:.4e}: {}", case.name, failure.time, failure.error);
            write_vtk(&dir.join("failed_state.vtk"), &case.grid, &failure.state, failure.time)?;
            summary.status = "failed";
            summary.error = Some(failure.error.to_string());
            summary.simulated_time = failure.time;
            write_json(&dir.join("summary.json"), &summary)?;
            Err(failure.error)
        }
    }
}

/// Maps `f` over `items` on up to `workers` threads, keeping input order.
pub fn parallel_map<T: Sync, R: Send>(items: &[T], workers: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<R>>> = Mutex::new(items.iter().map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..workers.clamp(1, items.len().max(1)) {
            s.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                if k >= items.len() {
                    break;
                }
                let r = f(&items[k]);
                results.lock().expect("a worker panicked")[k] = Some(r);
            });
        }
    });
    results
        .into_inner()
        .expect("a worker panicked")
        .into_iter()
        .map(|r| r.expect("every item is processed"))
        .collect()
}

/// One row of `sweep.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub index: usize,
    pub gamma: Option<f64>,
    pub epsilon_f: Option<f64>,
    pub grid_target: Option<f64>,
    #[serde(rename = "delta_z_over_D")]
    pub delta_z_over_d: Option<f64>,
    pub speed_ratio: Option<f64>,
    pub status: String,
    pub time: Option<f64>,
    #[serde(rename = "A_s")]
    pub a_s: Option<f64>,
    #[serde(rename = "A_f")]
    pub a_f: Option<f64>,
    #[serde(rename = "delta_A_pct")]
    pub delta_a_pct: Option<f64>,
    #[serde(rename = "P_max")]
    pub p_max: Option<f64>,
    pub ink_volume: Option<f64>,
    #[serde(rename = "H")]
    pub h: Option<f64>,
    pub steady_at: Option<f64>,
    pub wall_clock: Option<f64>,
}

impl SweepRow {
    fn new(p: &SweepPoint, result: &Result<RunOutcome>) -> SweepRow {
        let mut row = SweepRow {
            index: p.index,
            gamma: p.gamma,
            epsilon_f: p.epsilon_f,
            grid_target: p.grid_target,
            delta_z_over_d: p.delta_z_over_d,
            speed_ratio: p.speed_ratio,
            status: "ok".into(),
            time: None,
            a_s: None,
            a_f: None,
            delta_a_pct: None,
            p_max: None,
            ink_volume: None,
            h: None,
            steady_at: None,
            wall_clock: None,
        };
        match result {
            Ok(out) => {
                let r = out.final_record();
                row.time = Some(r.time);
                row.a_s = Some(r.a_s);
                row.a_f = Some(r.a_f);
                row.delta_a_pct = Some(r.delta_a_pct);
                row.p_max = Some(r.p_max);
                row.ink_volume = Some(r.ink_volume);
                row.h = r.h;
                row.steady_at = out.steady_at;
                row.wall_clock = Some(out.wall_clock);
            }
            Err(e) => row.status = format!("failed: {e}"),
        }
        row
    }
}

/// Runs every point of `plan`, writing `sweep.csv` in axis order. Failed
/// points are reported in their rows; the sweep fails only if all do.
pub fn run_sweep(plan: &SweepPlan) -> Result<Vec<SweepRow>> {
    plan.validate()?;
    let points = plan.points();
    log::info!("sweep of {} points on {} workers", points.len(), plan.workers);
    let rows = parallel_map(&points, plan.workers, |p| {
        let result = p.apply(&plan.base).and_then(|c| run_single(&c));
        if let Err(e) = &result {
            log::warn!("sweep point {} failed: {e}", p.index);
        }
        SweepRow::new(p, &result)
    });
    std::fs::create_dir_all(&plan.base.output.directory)?;
    write_rows(&plan.base.output.directory.join("sweep.csv"), &rows)?;
    if rows.iter().all(|r| r.status != "ok") {
        return Err(Error::Config("every sweep point failed".into()));
    }
    Ok(rows)
}

/// How the interface thickness follows the grid in a convergence study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EpsilonMode {
    /// The thickness the base configuration gives on its own grid, in metres.
    #[default]
    FixedPhysical,
    /// The configured factor times each grid's recommended thickness.
    ScaledWithGrid,
}

/// One row of `convergence.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub grid_target: f64,
    pub nx: usize,
    pub ny: usize,
    pub fluid_cells: usize,
    pub gamma: Option<f64>,
    pub epsilon: Option<f64>,
    pub epsilon_mode: EpsilonMode,
    pub status: String,
    #[serde(rename = "A_s")]
    pub a_s: Option<f64>,
    #[serde(rename = "delta_A_pct")]
    pub delta_a_pct: Option<f64>,
    #[serde(rename = "P_max")]
    pub p_max: Option<f64>,
    pub oracle_metric: Option<&'static str>,
    pub oracle_measured: Option<f64>,
    pub oracle_expected: Option<f64>,
    pub oracle_error: Option<f64>,
    pub wall_clock: Option<f64>,
}

/// Runs `base` on each cell size in `grids` and for each value in
/// `gammas` (the base value when empty), writing `convergence.csv`.
pub fn run_mesh_convergence(
    base: &RunConfig,
    grids: &[f64],
    gammas: &[f64],
    mode: EpsilonMode,
    workers: usize,
) -> Result<Vec<ConvergenceRow>> {
    if grids.len() < 3 {
        return Err(Error::Config(format!(
            "a convergence study needs at least 3 grid levels, got {}",
            grids.len()
        )));
    }
    if grids.iter().any(|h| !(*h > 0.0 && h.is_finite())) {
        return Err(Error::Config("grid sizes must be positive".into()));
    }
    base.validate()?;
    let base_case = base.build_case()?;
    let fixed_eps = base_case.levelset.map(|p| p.epsilon);
    let gammas: Vec<Option<f64>> = if gammas.is_empty() {
        vec![None]
    } else {
        gammas.iter().copied().map(Some).collect()
    };
    let mut jobs = Vec::new();
    for g in &gammas {
        for (k, h) in grids.iter().enumerate() {
            let mut c = base.clone();
            c.resolution = Resolution::Spacing(*h);
            if let Some(g) = g {
                let i = c.interface.get_or_insert(InterfaceSettings {
                    thickness: Thickness::Factor(1.0),
                    gamma: *g,
                });
                i.gamma = *g;
            }
            if let (EpsilonMode::FixedPhysical, Some(eps)) = (mode, fixed_eps) {
                let gamma = c
                    .interface
                    .map(|i| i.gamma)
                    .or(base_case.levelset.map(|p| p.gamma))
                    .unwrap_or(0.0);
                c.interface = Some(InterfaceSettings {
                    thickness: Thickness::Absolute(eps),
                    gamma,
                });
            }
            let tag = g.map_or(String::new(), |g| format!("_gamma{g:e}"));
            c.output.directory = base.output.directory.join(format!("level_{k}{tag}"));
            jobs.push((c, *g, *h));
        }
    }
    let rows = parallel_map(&jobs, workers, |(c, g, h)| {
        let mut row = ConvergenceRow {
            grid_target: *h,
            nx: 0,
            ny: 0,
            fluid_cells: 0,
            gamma: *g,
            epsilon: None,
            epsilon_mode: mode,
            status: "ok".into(),
            a_s: None,
            delta_a_pct: None,
            p_max: None,
            oracle_metric: None,
            oracle_measured: None,
            oracle_expected: None,
            oracle_error: None,
            wall_clock: None,
        };
        let result = c.build_case().and_then(|case| {
            row.nx = case.grid.nx;
            row.ny = case.grid.ny;
            row.fluid_cells = case.grid.n_fluid();
            row.epsilon = case.levelset.map(|p| p.epsilon);
            row.gamma = case.levelset.map(|p| p.gamma);
            run_single(c)
        });
        match result {
            Ok(out) => {
                let r = out.final_record();
                row.a_s = Some(r.a_s);
                row.delta_a_pct = Some(r.delta_a_pct).filter(|x| x.is_finite());
                row.p_max = Some(r.p_max);
                row.oracle_metric = Some(out.oracle.metric);
                row.oracle_measured = Some(out.oracle.measured);
                row.oracle_expected = Some(out.oracle.expected);
                row.oracle_error = Some(out.oracle.error);
                row.wall_clock = Some(out.wall_clock);
            }
            Err(e) => row.status = format!("failed: {e}"),
        }
        row
    });
    std::fs::create_dir_all(&base.output.directory)?;
    write_rows(&base.output.directory.join("convergence.csv"), &rows)?;
    Ok(rows)
}

/// Observed order of accuracy from errors on grids refined by `ratio`.
pub fn observed_order(coarse_error: f64, fine_error: f64, ratio: f64) -> f64 {
    (coarse_error / fine_error).ln() / ratio.ln()
}
