//! The time loop shared by single runs, sweeps and convergence studies.
//!
//! Solved cases alternate a flow solve with level-set sub-steps: the flow
//! step follows a Courant limit on the fastest face velocity, and the level
//! set is sub-cycled inside it at its own stable step. Prescribed cases step
//! the level set directly.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::diagnostics::{
    conservation_error, global_ink_volume, strand_cross_section, DiagnosticsRecord, SteadyStateDetector,
};
use crate::error::{Error, Result};
use crate::flow::{cosine_ramp, FlowMode, FlowSolver, FlowStats};
use crate::grid::{divergence, FieldSet, Grid};
use crate::levelset::{
    advance_levelset, area_of_indicator, blend_properties, equilibrium_profile, stable_dt, Estimator, LevelSetParams,
    INDICATOR_LEVEL,
};
use crate::scenario::{zero_masked, Case, Kinematics, Motion, Oracle};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub cfl_advective: f64,
    pub cfl_diffusive: f64,
    /// Courant number of one flow step against the fastest face velocity.
    pub cfl_flow: f64,
    pub estimator: Estimator,
    /// Simulated time between diagnostics rows. `None` keeps only the
    /// first and last rows.
    pub sample_interval: Option<f64>,
    /// Stop once the strand section is steady.
    pub stop_at_steady: bool,
    pub max_steps: usize,
}

impl Default for RunSettings {
    fn default() -> Self {
        RunSettings {
            cfl_advective: 0.5,
            cfl_diffusive: 0.5,
            cfl_flow: 0.5,
            estimator: Estimator::SubCell,
            sample_interval: None,
            stop_at_steady: false,
            max_steps: 50_000_000,
        }
    }
}

impl RunSettings {
    pub fn validate(&self) -> Result<()> {
        for (name, c) in [
            ("cfl_advective", self.cfl_advective),
            ("cfl_diffusive", self.cfl_diffusive),
            ("cfl_flow", self.cfl_flow),
        ] {
            if !(c > 0.0 && c <= 1.0) {
                return Err(Error::Config(format!("{name} must lie in (0, 1], got {c}")));
            }
        }
        if let Some(s) = self.sample_interval {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::Config(format!("sample interval must be positive, got {s}")));
            }
        }
        if self.max_steps == 0 {
            return Err(Error::Config("max_steps must be at least 1".into()));
        }
        Ok(())
    }
}

/// One row of the per-step log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepLog {
    pub time: f64,
    pub dt: f64,
    pub substeps: usize,
    pub p_max: f64,
    pub max_divergence: f64,
    pub viscous_iterations: usize,
    pub pressure_iterations: usize,
    pub phi_min: f64,
    pub phi_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InkSample {
    pub time: f64,
    pub volume: f64,
    /// Ink volume delivered through the inlet since the start.
    pub delivered: f64,
}

/// Final comparison against the case's analytic reference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleCheck {
    pub metric: &'static str,
    pub measured: f64,
    pub expected: f64,
    /// Relative error, or the absolute deviation when `expected` is zero.
    pub error: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub records: Vec<DiagnosticsRecord>,
    pub log: Vec<StepLog>,
    pub fields: FieldSet,
    pub time: f64,
    /// First time the strand section met the steady criterion.
    pub steady_at: Option<f64>,
    /// Extremes of phi over every step.
    pub phi_min: f64,
    pub phi_max: f64,
    /// `sum(phi dA)` before and after.
    pub phi_integral: [f64; 2],
    /// Net time-integrated outflow of phi through boundary faces.
    pub boundary_outflow: f64,
    pub ink: Vec<InkSample>,
    /// First time ink reached a cell on an outflow side.
    pub ink_exit_at: Option<f64>,
    pub oracle: OracleCheck,
    pub levelset_steps: usize,
    pub flow_solves: usize,
    pub wall_clock: f64,
}

impl RunOutcome {
    pub fn final_record(&self) -> &DiagnosticsRecord {
        self.records.last().expect("runs always record their final state")
    }
}

/// A failed run with the state of the failing step.
#[derive(Debug)]
pub struct RunFailure {
    pub error: Error,
    pub time: f64,
    pub state: FieldSet,
}

/// Called with every recorded state.
pub type Observer<'a> = dyn FnMut(usize, f64, &Grid, &FieldSet) -> Result<()> + 'a;

struct Tracker {
    phi_min: f64,
    phi_max: f64,
    outflow: f64,
    steps: usize,
}

impl Tracker {
    fn step(
        &mut self,
        grid: &Grid,
        fields: &mut FieldSet,
        params: &LevelSetParams,
        case: &Case,
        dt: f64,
    ) -> Result<()> {
        let s = advance_levelset(grid, fields, params, case.transport, dt)?;
        self.phi_min = self.phi_min.min(s.min);
        self.phi_max = self.phi_max.max(s.max);
        self.outflow += s.boundary_outflow;
        self.steps += 1;
        Ok(())
    }
}

/// Runs `case` to its duration, or to steady state when requested.
pub fn run_case(
    case: &Case,
    settings: &RunSettings,
    observer: Option<&mut Observer>,
) -> Result<RunOutcome, Box<RunFailure>> {
    let mut fields = case.fields.clone();
    let mut time = 0.0;
    let fail = |error: Error, time: f64, state: &FieldSet| {
        Box::new(RunFailure {
            error,
            time,
            state: state.clone(),
        })
    };
    if let Err(e) = settings.validate().and_then(|_| case.check()) {
        return Err(fail(e, 0.0, &fields));
    }
    let mut driver = Driver {
        case,
        settings,
        observer,
        start: Instant::now(),
        records: Vec::new(),
        log: Vec::new(),
        ink: Vec::new(),
        ink_exit_at: None,
        steady_at: None,
        next_sample: 0.0,
        n_recorded: 0,
        tracker: Tracker {
            phi_min: f64::INFINITY,
            phi_max: f64::NEG_INFINITY,
            outflow: 0.0,
            steps: 0,
        },
        flow_solves: 0,
    };
    let integral0 = phi_integral(&case.grid, &fields.phi);
    let result = match &case.motion {
        Motion::Prescribed(k) => driver.prescribed(*k, &mut fields, &mut time),
        Motion::Solved { .. } => driver.solved(&mut fields, &mut time),
    };
    if let Err(e) = result {
        return Err(fail(e, time, &fields));
    }
    let out = (|| {
        let oracle = check_oracle(case, &fields, settings.estimator)?;
        Ok(RunOutcome {
            phi_integral: [integral0, phi_integral(&case.grid, &fields.phi)],
            records: driver.records,
            log: driver.log,
            time,
            steady_at: driver.steady_at,
            phi_min: driver.tracker.phi_min,
            phi_max: driver.tracker.phi_max,
            boundary_outflow: driver.tracker.outflow,
            ink: driver.ink,
            ink_exit_at: driver.ink_exit_at,
            oracle,
            levelset_steps: driver.tracker.steps,
            flow_solves: driver.flow_solves,
            wall_clock: driver.start.elapsed().as_secs_f64(),
            fields: fields.clone(),
        })
    })();
    out.map_err(|e| fail(e, time, &fields))
}

struct Driver<'c, 'o, 'r> {
    case: &'c Case,
    settings: &'c RunSettings,
    observer: Option<&'o mut Observer<'r>>,
    start: Instant,
    records: Vec<DiagnosticsRecord>,
    log: Vec<StepLog>,
    ink: Vec<InkSample>,
    ink_exit_at: Option<f64>,
    steady_at: Option<f64>,
    next_sample: f64,
    n_recorded: usize,
    tracker: Tracker,
    flow_solves: usize,
}

impl Driver<'_, '_, '_> {
    fn grid(&self) -> &Grid {
        &self.case.grid
    }

    fn remaining(&self, time: f64) -> f64 {
        self.case.duration - time
    }

    fn done(&self, time: f64) -> bool {
        self.remaining(time) <= 1e-12 * self.case.duration.max(1.0)
    }

    fn record(&mut self, time: f64, fields: &FieldSet, p_max: f64, force: bool) -> Result<()> {
        if !force && time + 1e-12 < self.next_sample {
            return Ok(());
        }
        if let Some(every) = self.settings.sample_interval {
            while self.next_sample <= time + 1e-12 {
                self.next_sample += every;
            }
        } else {
            self.next_sample = f64::INFINITY;
        }
        if self.records.last().is_some_and(|r| r.time == time) {
            return Ok(());
        }
        let rec = measure(self.case, fields, self.settings.estimator, p_max, time)?;
        self.records.push(rec);
        if let Some(obs) = self.observer.as_mut() {
            obs(self.n_recorded, time, &self.case.grid, fields)?;
        }
        self.n_recorded += 1;
        Ok(())
    }

    fn prescribed(&mut self, kin: Kinematics, fields: &mut FieldSet, time: &mut f64) -> Result<()> {
        self.record(0.0, fields, 0.0, true)?;
        let Some(params) = self.case.levelset else {
            return Ok(());
        };
        let grid = self.case.grid.clone();
        while !self.done(*time) {
            if self.tracker.steps >= self.settings.max_steps {
                log::warn!("step limit {} reached at t = {:.4e}", self.settings.max_steps, *time);
                break;
            }
            if kin.is_time_dependent() {
                kin.apply(&grid, fields, *time);
                zero_masked(&grid, fields);
            }
            let lim = stable_dt(
                fields,
                &params,
                &grid,
                self.settings.cfl_advective,
                self.settings.cfl_diffusive,
            )?;
            let dt = lim.clamped(self.remaining(*time));
            if kin.is_time_dependent() {
                kin.apply(&grid, fields, *time + 0.5 * dt);
                zero_masked(&grid, fields);
            }
            self.tracker.step(&grid, fields, &params, self.case, dt)?;
            *time += dt;
            self.record(*time, fields, 0.0, false)?;
        }
        self.record(*time, fields, 0.0, true)
    }

    fn solved(&mut self, fields: &mut FieldSet, time: &mut f64) -> Result<()> {
        let Motion::Solved {
            boundary,
            flow,
            ramp_window,
        } = &self.case.motion
        else {
            unreachable!("solved() is only called for solved motion");
        };
        let grid = self.case.grid.clone();
        let mut solver = FlowSolver::new(&grid, *boundary, *flow)?;
        let stokes = flow.mode == FlowMode::Stokes;
        let window = *ramp_window;
        // Longest flow step: resolve the ramp, and take at least 50 steps.
        let max_dt = if window > 0.0 {
            (window / 20.0).min(self.case.duration / 50.0)
        } else {
            self.case.duration / 50.0
        };
        let h = grid.m_min();
        let cfl_dt = |f: &FieldSet| {
            let s = f.max_speed(&grid);
            if s > 0.0 {
                self.settings.cfl_flow * h / s
            } else {
                f64::INFINITY
            }
        };
        let (inlet_rate, station) = match self.case.oracle {
            Oracle::Strand {
                inlet_rate, station, ..
            } => (inlet_rate, Some(station)),
            _ => (0.0, None),
        };
        let mut detector = SteadyStateDetector::standard();
        let mut delivered = 0.0;
        let mut p_max = 0.0;
        self.ink.push(InkSample {
            time: 0.0,
            volume: global_ink_volume(&fields.phi, &grid),
            delivered: 0.0,
        });
        self.record(0.0, fields, 0.0, true)?;
        loop {
            if self.done(*time) {
                break;
            }
            if self.tracker.steps >= self.settings.max_steps {
                log::warn!("step limit {} reached at t = {:.4e}", self.settings.max_steps, *time);
                break;
            }
            let cap = max_dt.min(self.remaining(*time));
            let (rho, mu) = blend_properties(&fields.phi, &self.case.props);
            let (dt, ramp, stats) = if stokes {
                let ramp = cosine_ramp(*time, window);
                let stats = solver.advance(fields, &rho, &mu, ramp, cap)?;
                (cfl_dt(fields).min(cap), ramp, stats)
            } else {
                let dt = cfl_dt(fields).min(cap);
                let ramp = cosine_ramp(*time + dt, window);
                let stats = solver.advance(fields, &rho, &mu, ramp, dt)?;
                (dt, ramp, stats)
            };
            self.flow_solves += 1;
            p_max = stats.max_pressure;
            let substeps = match self.case.levelset {
                Some(params) => {
                    let lim = stable_dt(
                        fields,
                        &params,
                        &grid,
                        self.settings.cfl_advective,
                        self.settings.cfl_diffusive,
                    )?;
                    let n = (dt / lim.dt).ceil().max(1.0) as usize;
                    let sub = dt / n as f64;
                    for _ in 0..n {
                        self.tracker.step(&grid, fields, &params, self.case, sub)?;
                    }
                    n
                }
                None => 0,
            };
            *time += dt;
            delivered += ramp * inlet_rate * dt;
            self.log_step(*time, dt, substeps, &stats, fields);
            if station.is_some() {
                self.ink.push(InkSample {
                    time: *time,
                    volume: global_ink_volume(&fields.phi, &grid),
                    delivered,
                });
                if self.ink_exit_at.is_none() && ink_on_outflow_side(&grid, &fields.phi) {
                    self.ink_exit_at = Some(*time);
                }
            }
            self.record(*time, fields, p_max, false)?;
            if let Some(x) = station {
                if *time > window {
                    let s = strand_cross_section(&fields.phi, &grid, x)?;
                    if detector.push(*time, s.size) && self.steady_at.is_none() {
                        log::info!("strand section steady at t = {:.4} s ({:.4e} m)", *time, s.size);
                        self.steady_at = Some(*time);
                        if self.settings.stop_at_steady {
                            break;
                        }
                    }
                }
            }
            // A steady single-phase Stokes problem is solved in one go.
            if stokes && self.case.levelset.is_none() && window == 0.0 {
                break;
            }
        }
        self.record(*time, fields, p_max, true)
    }

    fn log_step(&mut self, time: f64, dt: f64, substeps: usize, stats: &FlowStats, fields: &FieldSet) {
        let (lo, hi) = fluid_range(self.grid(), &fields.phi);
        self.log.push(StepLog {
            time,
            dt,
            substeps,
            p_max: stats.max_pressure,
            max_divergence: stats.max_divergence,
            viscous_iterations: stats.viscous_iterations,
            pressure_iterations: stats.pressure_iterations,
            phi_min: lo,
            phi_max: hi,
        });
    }
}

fn fluid_range(grid: &Grid, phi: &[f64]) -> (f64, f64) {
    let mut r = (f64::INFINITY, f64::NEG_INFINITY);
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            if grid.is_fluid(i, j) {
                let p = phi[grid.idx(i, j)];
                r = (r.0.min(p), r.1.max(p));
            }
        }
    }
    r
}

fn phi_integral(grid: &Grid, phi: &[f64]) -> f64 {
    let mut s = 0.0;
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            if grid.is_fluid(i, j) {
                s += phi[grid.idx(i, j)];
            }
        }
    }
    s * grid.cell_area()
}

/// True once a fluid cell in the first or last column holds ink.
fn ink_on_outflow_side(grid: &Grid, phi: &[f64]) -> bool {
    (0..grid.ny).any(|j| {
        [0, grid.nx - 1]
            .into_iter()
            .any(|i| grid.is_fluid(i, j) && phi[grid.idx(i, j)] <= INDICATOR_LEVEL)
    })
}

/// Diagnostics row for the current state.
pub fn measure(
    case: &Case,
    fields: &FieldSet,
    estimator: Estimator,
    p_max: f64,
    time: f64,
) -> Result<DiagnosticsRecord> {
    let grid = &case.grid;
    let ink_volume = global_ink_volume(&fields.phi, grid);
    let (a_s, a_f, h) = match case.oracle {
        Oracle::Strand {
            ideal_thickness,
            station,
            ..
        } => {
            let s = strand_cross_section(&fields.phi, grid, station)?;
            (s.size, ideal_thickness, Some(s.height))
        }
        Oracle::IndicatorArea { area } => (area_of_indicator(&fields.phi, grid, estimator), area, None),
        _ => {
            let a = match case.levelset {
                Some(_) => area_of_indicator(&fields.phi, grid, estimator),
                None => 0.0,
            };
            (a, f64::NAN, None)
        }
    };
    Ok(DiagnosticsRecord {
        time,
        a_s,
        a_f,
        delta_a_pct: if a_f.is_finite() {
            conservation_error(a_s, a_f)
        } else {
            f64::NAN
        },
        p_max,
        ink_volume,
        w: None,
        h,
        wh_ratio: None,
    })
}

/// Compares the final state with the case's analytic reference.
pub fn check_oracle(case: &Case, fields: &FieldSet, estimator: Estimator) -> Result<OracleCheck> {
    let grid = &case.grid;
    let relative = |metric, measured: f64, expected: f64| OracleCheck {
        metric,
        measured,
        expected,
        error: (measured - expected).abs() / expected.abs(),
    };
    Ok(match case.oracle {
        Oracle::IndicatorArea { area } => {
            relative("indicator_area", area_of_indicator(&fields.phi, grid, estimator), area)
        }
        Oracle::Profile { center, epsilon } => {
            let mut dev: f64 = 0.0;
            for j in 0..grid.ny {
                for i in 0..grid.nx {
                    if grid.is_fluid(i, j) {
                        let x = grid.cell_center(i, j)[0];
                        let exact = equilibrium_profile(x - center, epsilon);
                        dev = dev.max((fields.phi[grid.idx(i, j)] - exact).abs());
                    }
                }
            }
            OracleCheck {
                metric: "max_profile_deviation",
                measured: dev,
                expected: 0.0,
                error: dev,
            }
        }
        Oracle::PressureDrop { expected, length, .. } => relative(
            "pressure_drop",
            channel_pressure_drop(grid, &fields.p, length),
            expected,
        ),
        Oracle::Hydrostatic { rho, gravity, surface } => {
            let scale = rho * gravity.abs() * surface;
            let mut dev: f64 = 0.0;
            for j in 0..grid.ny {
                for i in 0..grid.nx {
                    let y = grid.cell_center(i, j)[1];
                    let exact = rho * gravity.abs() * (surface - y);
                    dev = dev.max((fields.p[grid.idx(i, j)] - exact).abs());
                }
            }
            OracleCheck {
                metric: "max_hydrostatic_deviation",
                measured: dev / scale,
                expected: 0.0,
                error: dev / scale,
            }
        }
        Oracle::Strand {
            ideal_thickness,
            station,
            ..
        } => {
            let s = strand_cross_section(&fields.phi, grid, station)?;
            relative("strand_thickness", s.size, ideal_thickness)
        }
    })
}

/// Pressure drop over `length` from the mean pressure gradient across the
/// middle half of the channel, clear of the entry and exit regions.
pub fn channel_pressure_drop(grid: &Grid, p: &[f64], length: f64) -> f64 {
    if grid.nx < 2 {
        return f64::NAN;
    }
    let mean = |i: usize| (0..grid.ny).map(|j| p[grid.idx(i, j)]).sum::<f64>() / grid.ny as f64;
    let a = grid.nx / 4;
    let b = (3 * grid.nx / 4).clamp(a + 1, grid.nx - 1);
    (mean(a) - mean(b)) / ((b - a) as f64 * grid.dx) * length
}

/// Largest cell divergence magnitude of the current velocity.
pub fn max_divergence(grid: &Grid, fields: &FieldSet) -> f64 {
    divergence(grid, &fields.u, &fields.v)
        .iter()
        .zip(grid.cells())
        .filter(|(_, k)| **k == crate::grid::CellKind::Fluid)
        .fold(0.0, |m, (d, _)| m.max(d.abs()))
}
