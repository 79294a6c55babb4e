//! Run configurations and sweep plans read from TOML files. Physical
//! quantities must carry units; ratios, factors and counts are plain numbers.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{FlowConfig, FlowMode};
use crate::levelset::{Estimator, PhaseProperties};
use crate::scenario::{
    build_benchmark, build_deposition, BenchmarkCase, BenchmarkKind, Case, DepositionScenario, InterfaceSettings,
    Motion, Thickness, CHANNEL,
};

use super::run::RunSettings;
use super::units::{Dimension, RawQuantity};

pub const OUT_DIR_ENV: &str = "STRANDSIM_OUT_DIR";
pub const WORKERS_ENV: &str = "STRANDSIM_WORKERS";

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CaseSelector {
    Deposition(DepositionScenario),
    Benchmark {
        benchmark: BenchmarkKind,
        duration: Option<f64>,
    },
}

/// Target cell size, given directly or as a cell count across the case's
/// characteristic length (the gap, the channel width, or the unit box).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Resolution {
    Spacing(f64),
    CellsAcross(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputSettings {
    pub directory: PathBuf,
    /// Write a VTK snapshot every this many diagnostics rows; 0 disables.
    pub snapshot_every: usize,
}

impl Default for OutputSettings {
    fn default() -> Self {
        OutputSettings {
            directory: PathBuf::from("out"),
            snapshot_every: 0,
        }
    }
}

/// Solver options a configuration may override. Gravity belongs to the case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlowOptions {
    pub mode: FlowMode,
    pub pressure_tol: f64,
    pub viscous_tol: f64,
    pub max_iters: usize,
}

impl Default for FlowOptions {
    fn default() -> Self {
        let d = FlowConfig::default();
        FlowOptions {
            mode: d.mode,
            pressure_tol: d.pressure_tol,
            viscous_tol: d.viscous_tol,
            max_iters: d.max_iters,
        }
    }
}

impl FlowOptions {
    fn apply(&self, flow: &mut FlowConfig) {
        flow.mode = self.mode;
        flow.pressure_tol = self.pressure_tol;
        flow.viscous_tol = self.viscous_tol;
        flow.max_iters = self.max_iters;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub case: CaseSelector,
    pub resolution: Resolution,
    /// `None` keeps the case's default interface settings.
    pub interface: Option<InterfaceSettings>,
    pub flow: FlowOptions,
    pub settings: RunSettings,
    pub output: OutputSettings,
}

impl RunConfig {
    /// Reference deposition setup at twelve cells across the gap.
    pub fn baseline() -> RunConfig {
        RunConfig {
            case: CaseSelector::Deposition(DepositionScenario::default()),
            resolution: Resolution::CellsAcross(12),
            interface: Some(InterfaceSettings {
                thickness: Thickness::Factor(1.0),
                gamma: 0.02,
            }),
            flow: FlowOptions::default(),
            settings: RunSettings {
                sample_interval: Some(5e-3),
                ..RunSettings::default()
            },
            output: OutputSettings::default(),
        }
    }

    pub fn benchmark(kind: BenchmarkKind, resolution: Resolution) -> RunConfig {
        RunConfig {
            case: CaseSelector::Benchmark {
                benchmark: kind,
                duration: None,
            },
            resolution,
            interface: None,
            flow: FlowOptions::default(),
            settings: RunSettings::default(),
            output: OutputSettings::default(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<RunConfig> {
        let raw: RawRunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        raw.resolve()
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        RunConfig::from_toml_str(&text)
    }

    /// Applies the output-directory environment override.
    pub fn apply_env(&mut self) {
        if let Ok(dir) = std::env::var(OUT_DIR_ENV) {
            if !dir.is_empty() {
                self.output.directory = PathBuf::from(dir);
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match &self.case {
            CaseSelector::Deposition(_) => "deposition",
            CaseSelector::Benchmark { benchmark, .. } => benchmark.name(),
        }
    }

    /// Length the `CellsAcross` resolution divides.
    pub fn characteristic_length(&self) -> f64 {
        match &self.case {
            CaseSelector::Deposition(s) => s.gap,
            CaseSelector::Benchmark { benchmark, .. } => match benchmark {
                BenchmarkKind::PlanePoiseuille => CHANNEL.0,
                BenchmarkKind::HydrostaticColumn => 1e-3,
                _ => 1.0,
            },
        }
    }

    pub fn grid_target(&self) -> f64 {
        match self.resolution {
            Resolution::Spacing(h) => h,
            Resolution::CellsAcross(n) => self.characteristic_length() / n as f64,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.resolution {
            Resolution::Spacing(h) if !(h > 0.0 && h.is_finite()) => {
                return Err(Error::Config(format!("grid target must be positive, got {h}")));
            }
            Resolution::CellsAcross(0) => return Err(Error::Config("cells_across must be at least 1".into())),
            _ => {}
        }
        if let Some(i) = &self.interface {
            let eps = match i.thickness {
                Thickness::Factor(f) => f,
                Thickness::Absolute(e) => e,
            };
            if !(eps > 0.0 && eps.is_finite()) {
                return Err(Error::Config(format!(
                    "interface thickness must be positive, got {eps}"
                )));
            }
            if !(i.gamma >= 0.0 && i.gamma.is_finite()) {
                return Err(Error::Config(format!("gamma must be non-negative, got {}", i.gamma)));
            }
        }
        match &self.case {
            CaseSelector::Deposition(s) => s.validate()?,
            CaseSelector::Benchmark { duration: Some(d), .. } if !(*d > 0.0 && d.is_finite()) => {
                return Err(Error::Config(format!("duration must be positive, got {d}")));
            }
            _ => {}
        }
        let mut flow = FlowConfig::default();
        self.flow.apply(&mut flow);
        flow.validate()?;
        self.settings.validate()
    }

    /// Validates and builds the initial state.
    pub fn build_case(&self) -> Result<Case> {
        self.validate()?;
        let target = self.grid_target();
        let mut case = match &self.case {
            CaseSelector::Deposition(s) => {
                let interface = self.interface.unwrap_or(InterfaceSettings {
                    thickness: Thickness::Factor(1.0),
                    gamma: 0.02,
                });
                build_deposition(s, target, interface)?
            }
            CaseSelector::Benchmark { benchmark, duration } => build_benchmark(
                &BenchmarkCase {
                    kind: *benchmark,
                    interface: self.interface,
                    duration: *duration,
                },
                target,
            )?,
        };
        if let Motion::Solved { flow, .. } = &mut case.motion {
            self.flow.apply(flow);
        }
        Ok(case)
    }
}

// ---- file layout -------------------------------------------------------

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRunConfig {
    case: RawCase,
    #[serde(default)]
    deposition: RawDeposition,
    interface: Option<RawInterface>,
    #[serde(default)]
    flow: RawFlow,
    #[serde(default)]
    run: RawRun,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCase {
    kind: String,
    grid_target: Option<RawQuantity>,
    cells_across: Option<usize>,
    duration: Option<RawQuantity>,
    deterministic: Option<bool>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDeposition {
    nozzle_diameter: Option<RawQuantity>,
    nozzle_length: Option<RawQuantity>,
    gap: Option<RawQuantity>,
    gap_ratio: Option<f64>,
    block_width: Option<RawQuantity>,
    block_height: Option<RawQuantity>,
    block_length: Option<RawQuantity>,
    plunger_speed: Option<RawQuantity>,
    nozzle_speed: Option<RawQuantity>,
    speed_ratio: Option<f64>,
    ink_density: Option<RawQuantity>,
    ink_viscosity: Option<RawQuantity>,
    air_density: Option<RawQuantity>,
    air_viscosity: Option<RawQuantity>,
    gravity: Option<RawQuantity>,
    nozzle_axis: Option<RawQuantity>,
    measure_offset: Option<RawQuantity>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInterface {
    epsilon: Option<RawQuantity>,
    epsilon_factor: Option<f64>,
    gamma: RawQuantity,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFlow {
    mode: Option<FlowMode>,
    pressure_tol: Option<f64>,
    viscous_tol: Option<f64>,
    max_iters: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    cfl_advective: Option<f64>,
    cfl_diffusive: Option<f64>,
    cfl_flow: Option<f64>,
    estimator: Option<Estimator>,
    sample_interval: Option<RawQuantity>,
    stop_at_steady: Option<bool>,
    max_steps: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    directory: Option<PathBuf>,
    snapshot_every: Option<usize>,
}

fn quantity(raw: &Option<RawQuantity>, dim: Dimension, key: &str) -> Result<Option<f64>> {
    raw.as_ref().map(|q| q.to_si(dim, key)).transpose()
}

fn set(target: &mut f64, raw: &Option<RawQuantity>, dim: Dimension, key: &str) -> Result<()> {
    if let Some(v) = quantity(raw, dim, key)? {
        *target = v;
    }
    Ok(())
}

impl RawRunConfig {
    fn resolve(self) -> Result<RunConfig> {
        let c = &self.case;
        if c.deterministic == Some(false) {
            return Err(Error::Config(
                "runs are always deterministic; remove 'deterministic = false'".into(),
            ));
        }
        let resolution = match (
            quantity(&c.grid_target, Dimension::Length, "case.grid_target")?,
            c.cells_across,
        ) {
            (Some(h), None) => Resolution::Spacing(h),
            (None, Some(n)) => Resolution::CellsAcross(n),
            (None, None) => return Err(Error::Config("case needs grid_target or cells_across".into())),
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "give either grid_target or cells_across, not both".into(),
                ));
            }
        };
        let duration = quantity(&c.duration, Dimension::Time, "case.duration")?;
        let case = if c.kind == "deposition" {
            CaseSelector::Deposition(self.deposition.resolve(duration)?)
        } else {
            if !self.deposition.is_empty() {
                return Err(Error::Config(format!(
                    "[deposition] does not apply to case '{}'",
                    c.kind
                )));
            }
            CaseSelector::Benchmark {
                benchmark: c.kind.parse()?,
                duration,
            }
        };
        let interface = self
            .interface
            .as_ref()
            .map(|i| {
                let gamma = i.gamma.to_si(Dimension::Speed, "interface.gamma")?;
                let thickness = match (
                    quantity(&i.epsilon, Dimension::Length, "interface.epsilon")?,
                    i.epsilon_factor,
                ) {
                    (Some(e), None) => Thickness::Absolute(e),
                    (None, Some(f)) => Thickness::Factor(f),
                    (None, None) => Thickness::Factor(1.0),
                    (Some(_), Some(_)) => {
                        return Err(Error::Config("give either epsilon or epsilon_factor, not both".into()));
                    }
                };
                Ok(InterfaceSettings { thickness, gamma })
            })
            .transpose()?;
        let mut flow = FlowOptions::default();
        if let Some(m) = self.flow.mode {
            flow.mode = m;
        }
        flow.pressure_tol = self.flow.pressure_tol.unwrap_or(flow.pressure_tol);
        flow.viscous_tol = self.flow.viscous_tol.unwrap_or(flow.viscous_tol);
        flow.max_iters = self.flow.max_iters.unwrap_or(flow.max_iters);

        let r = &self.run;
        let mut settings = RunSettings::default();
        settings.cfl_advective = r.cfl_advective.unwrap_or(settings.cfl_advective);
        settings.cfl_diffusive = r.cfl_diffusive.unwrap_or(settings.cfl_diffusive);
        settings.cfl_flow = r.cfl_flow.unwrap_or(settings.cfl_flow);
        settings.estimator = r.estimator.unwrap_or(settings.estimator);
        settings.sample_interval = quantity(&r.sample_interval, Dimension::Time, "run.sample_interval")?;
        settings.stop_at_steady = r.stop_at_steady.unwrap_or(false);
        settings.max_steps = r.max_steps.unwrap_or(settings.max_steps);

        let mut output = OutputSettings::default();
        if let Some(d) = &self.output.directory {
            output.directory = d.clone();
        }
        output.snapshot_every = self.output.snapshot_every.unwrap_or(0);

        let config = RunConfig {
            case,
            resolution,
            interface,
            flow,
            settings,
            output,
        };
        config.validate()?;
        Ok(config)
    }
}

impl RawDeposition {
    fn is_empty(&self) -> bool {
        let q = [
            &self.nozzle_diameter,
            &self.nozzle_length,
            &self.gap,
            &self.block_width,
            &self.block_height,
            &self.block_length,
            &self.plunger_speed,
            &self.nozzle_speed,
            &self.ink_density,
            &self.ink_viscosity,
            &self.air_density,
            &self.air_viscosity,
            &self.gravity,
            &self.nozzle_axis,
            &self.measure_offset,
        ];
        q.iter().all(|x| x.is_none()) && self.gap_ratio.is_none() && self.speed_ratio.is_none()
    }

    fn resolve(&self, duration: Option<f64>) -> Result<DepositionScenario> {
        use Dimension::*;
        let mut s = DepositionScenario::default();
        set(
            &mut s.nozzle_diameter,
            &self.nozzle_diameter,
            Length,
            "deposition.nozzle_diameter",
        )?;
        set(
            &mut s.nozzle_length,
            &self.nozzle_length,
            Length,
            "deposition.nozzle_length",
        )?;
        set(&mut s.block_width, &self.block_width, Length, "deposition.block_width")?;
        set(
            &mut s.block_height,
            &self.block_height,
            Length,
            "deposition.block_height",
        )?;
        set(
            &mut s.block_length,
            &self.block_length,
            Length,
            "deposition.block_length",
        )?;
        set(
            &mut s.plunger_speed,
            &self.plunger_speed,
            Speed,
            "deposition.plunger_speed",
        )?;
        set(&mut s.gravity, &self.gravity, Acceleration, "deposition.gravity")?;
        set(&mut s.nozzle_axis, &self.nozzle_axis, Length, "deposition.nozzle_axis")?;
        set(
            &mut s.measure_offset,
            &self.measure_offset,
            Length,
            "deposition.measure_offset",
        )?;
        let mut props: PhaseProperties = s.props;
        set(&mut props.rho1, &self.ink_density, Density, "deposition.ink_density")?;
        set(
            &mut props.mu1,
            &self.ink_viscosity,
            Viscosity,
            "deposition.ink_viscosity",
        )?;
        set(&mut props.rho2, &self.air_density, Density, "deposition.air_density")?;
        set(
            &mut props.mu2,
            &self.air_viscosity,
            Viscosity,
            "deposition.air_viscosity",
        )?;
        s.props = props;
        match (quantity(&self.gap, Length, "deposition.gap")?, self.gap_ratio) {
            (Some(g), None) => s.gap = g,
            (None, Some(r)) => s.gap = r * s.nozzle_diameter,
            (None, None) => {}
            (Some(_), Some(_)) => return Err(Error::Config("give either gap or gap_ratio, not both".into())),
        }
        match (
            quantity(&self.nozzle_speed, Speed, "deposition.nozzle_speed")?,
            self.speed_ratio,
        ) {
            (Some(v), None) => s.nozzle_speed = v,
            (None, Some(r)) => s.nozzle_speed = r * s.plunger_speed,
            (None, None) => {}
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "give either nozzle_speed or speed_ratio, not both".into(),
                ));
            }
        }
        if let Some(t) = duration {
            s.max_time = t;
        }
        Ok(s)
    }
}

// ---- sweeps ------------------------------------------------------------

/// Values swept along each axis; `None` leaves the base value alone.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SweepAxes {
    /// Reinitialisation rate (m/s).
    pub gamma: Option<Vec<f64>>,
    pub epsilon_f: Option<Vec<f64>>,
    /// Cell size (m).
    pub grid_target: Option<Vec<f64>>,
    pub delta_z_over_d: Option<Vec<f64>>,
    pub speed_ratio: Option<Vec<f64>>,
}

impl SweepAxes {
    fn lists(&self) -> [(&'static str, Option<&Vec<f64>>); 5] {
        [
            ("gamma", self.gamma.as_ref()),
            ("epsilon_f", self.epsilon_f.as_ref()),
            ("grid_target", self.grid_target.as_ref()),
            ("delta_z_over_D", self.delta_z_over_d.as_ref()),
            ("speed_ratio", self.speed_ratio.as_ref()),
        ]
    }
}

/// One grid point of a sweep; entries follow the axis order of [`SweepAxes`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub index: usize,
    pub gamma: Option<f64>,
    pub epsilon_f: Option<f64>,
    pub grid_target: Option<f64>,
    #[serde(rename = "delta_z_over_D")]
    pub delta_z_over_d: Option<f64>,
    pub speed_ratio: Option<f64>,
}

impl SweepPoint {
    /// `base` with this point's axis values substituted.
    pub fn apply(&self, base: &RunConfig) -> Result<RunConfig> {
        let mut c = base.clone();
        if self.gamma.is_some() || self.epsilon_f.is_some() {
            let mut i = c.interface.unwrap_or(InterfaceSettings {
                thickness: Thickness::Factor(1.0),
                gamma: 0.02,
            });
            if let Some(g) = self.gamma {
                i.gamma = g;
            }
            if let Some(f) = self.epsilon_f {
                i.thickness = Thickness::Factor(f);
            }
            c.interface = Some(i);
        }
        if let Some(h) = self.grid_target {
            c.resolution = Resolution::Spacing(h);
        }
        if self.delta_z_over_d.is_some() || self.speed_ratio.is_some() {
            let CaseSelector::Deposition(s) = &mut c.case else {
                return Err(Error::Config("gap and speed axes apply only to deposition".into()));
            };
            if let Some(r) = self.delta_z_over_d {
                s.gap = r * s.nozzle_diameter;
            }
            if let Some(r) = self.speed_ratio {
                s.nozzle_speed = r * s.plunger_speed;
            }
        }
        c.output.directory = base.output.directory.join(format!("point_{:03}", self.index));
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPlan {
    pub base: RunConfig,
    pub axes: SweepAxes,
    pub workers: usize,
}

impl SweepPlan {
    pub fn validate(&self) -> Result<()> {
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        let lists = self.axes.lists();
        if lists.iter().all(|(_, l)| l.is_none()) {
            return Err(Error::Config("a sweep needs at least one axis".into()));
        }
        for (name, list) in lists {
            if let Some(l) = list {
                if l.is_empty() {
                    return Err(Error::Config(format!("axis {name} is empty")));
                }
                if l.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
                    return Err(Error::Config(format!("axis {name} holds a non-positive value")));
                }
            }
        }
        self.base.validate()
    }

    /// Number of points in the cartesian product.
    pub fn size(&self) -> usize {
        self.axes
            .lists()
            .iter()
            .map(|(_, l)| l.map_or(1, |l| l.len()))
            .product()
    }

    /// All points, the last axis varying fastest.
    pub fn points(&self) -> Vec<SweepPoint> {
        let axis = |l: &Option<Vec<f64>>| -> Vec<Option<f64>> {
            match l {
                Some(v) => v.iter().copied().map(Some).collect(),
                None => vec![None],
            }
        };
        let a = &self.axes;
        let mut out = Vec::with_capacity(self.size());
        for gamma in axis(&a.gamma) {
            for epsilon_f in axis(&a.epsilon_f) {
                for grid_target in axis(&a.grid_target) {
                    for delta_z_over_d in axis(&a.delta_z_over_d) {
                        for speed_ratio in axis(&a.speed_ratio) {
                            out.push(SweepPoint {
                                index: out.len(),
                                gamma,
                                epsilon_f,
                                grid_target,
                                delta_z_over_d,
                                speed_ratio,
                            });
                        }
                    }
                }
            }
        }
        out
    }

    pub fn from_toml_str(text: &str, dir: &Path) -> Result<SweepPlan> {
        let raw: RawSweepPlan = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let base = match raw.base {
            RawBase::Path(p) => RunConfig::load(&dir.join(p))?,
            RawBase::Inline(c) => c.resolve()?,
        };
        let lengths = |l: &Option<Vec<RawQuantity>>, dim, key: &str| -> Result<Option<Vec<f64>>> {
            l.as_ref()
                .map(|v| v.iter().map(|q| q.to_si(dim, key)).collect::<Result<Vec<_>>>())
                .transpose()
        };
        let a = &raw.axes;
        let plan = SweepPlan {
            base,
            axes: SweepAxes {
                gamma: lengths(&a.gamma_list, Dimension::Speed, "axes.gamma_list")?,
                epsilon_f: a.epsilon_f_list.clone(),
                grid_target: lengths(&a.grid_target_list, Dimension::Length, "axes.grid_target_list")?,
                delta_z_over_d: a.delta_z_over_d_list.clone(),
                speed_ratio: a.speed_ratio_list.clone(),
            },
            workers: raw.workers.unwrap_or(1),
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn load(path: &Path) -> Result<SweepPlan> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        SweepPlan::from_toml_str(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// Applies the output-directory and worker-count environment overrides.
    pub fn apply_env(&mut self) -> Result<()> {
        self.base.apply_env();
        if let Ok(w) = std::env::var(WORKERS_ENV) {
            self.workers = w
                .trim()
                .parse()
                .ok()
                .filter(|n| *n > 0)
                .ok_or_else(|| Error::Config(format!("{WORKERS_ENV}={w} is not a positive integer")))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum RawBase {
    Path(PathBuf),
    Inline(Box<RawRunConfig>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweepPlan {
    base: RawBase,
    workers: Option<usize>,
    axes: RawAxes,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAxes {
    gamma_list: Option<Vec<RawQuantity>>,
    epsilon_f_list: Option<Vec<f64>>,
    grid_target_list: Option<Vec<RawQuantity>>,
    #[serde(rename = "delta_z_over_D_list")]
    delta_z_over_d_list: Option<Vec<f64>>,
    speed_ratio_list: Option<Vec<f64>>,
}
