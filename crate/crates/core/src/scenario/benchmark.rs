use std::f64::consts::PI;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{plane_poiseuille_reference, BoundarySpec, FlowConfig, SideCondition};
use crate::grid::{build_grid, FieldSet, Grid};
use crate::levelset::{equilibrium_profile, LevelSetParams, PhaseProperties, TransportBoundary};

use super::{Case, InterfaceSettings, Kinematics, Motion, Oracle, Thickness};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BenchmarkKind {
    EquilibriumRelaxation,
    TranslatingBlob,
    ZalesakDisk,
    SingleVortex,
    PlanePoiseuille,
    HydrostaticColumn,
}

impl BenchmarkKind {
    pub const ALL: [BenchmarkKind; 6] = [
        BenchmarkKind::EquilibriumRelaxation,
        BenchmarkKind::TranslatingBlob,
        BenchmarkKind::ZalesakDisk,
        BenchmarkKind::SingleVortex,
        BenchmarkKind::PlanePoiseuille,
        BenchmarkKind::HydrostaticColumn,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BenchmarkKind::EquilibriumRelaxation => "equilibrium-relaxation",
            BenchmarkKind::TranslatingBlob => "translating-blob",
            BenchmarkKind::ZalesakDisk => "zalesak-disk",
            BenchmarkKind::SingleVortex => "single-vortex",
            BenchmarkKind::PlanePoiseuille => "plane-poiseuille",
            BenchmarkKind::HydrostaticColumn => "hydrostatic-column",
        }
    }
}

impl FromStr for BenchmarkKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BenchmarkKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown benchmark kind '{s}'")))
    }
}

/// Benchmark selection with optional overrides of the per-kind defaults.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkCase {
    pub kind: BenchmarkKind,
    pub interface: Option<InterfaceSettings>,
    pub duration: Option<f64>,
}

impl BenchmarkCase {
    pub fn new(kind: BenchmarkKind) -> BenchmarkCase {
        BenchmarkCase {
            kind,
            interface: None,
            duration: None,
        }
    }
}

/// Plane channel used by the flow benchmark: width, length, per-depth rate,
/// viscosity and density.
pub const CHANNEL: (f64, f64, f64, f64, f64) = (0.4e-3, 1.6e-3, 8e-6, 1000.0, 1000.0);

fn phi_from_distance(grid: &Grid, eps: f64, dist: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    let mut phi = vec![1.0; grid.n_cells()];
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let [x, y] = grid.cell_center(i, j);
            phi[grid.idx(i, j)] = equilibrium_profile(dist(x, y), eps);
        }
    }
    phi
}

/// Approximate signed distance to the slotted disc (negative inside).
fn zalesak_distance(x: f64, y: f64) -> f64 {
    let (cx, cy, r) = (0.5, 0.75, 0.15);
    let (half_w, slot_top) = (0.025, 0.85);
    let disc = (x - cx).hypot(y - cy) - r;
    // Slot: |x - cx| <= half_w, y <= slot_top.
    let slot = (x - cx).abs() - half_w;
    let slot = slot.max(y - slot_top);
    disc.max(-slot)
}

/// Area of the slotted disc by midpoint quadrature on an `n x n` lattice
/// over its bounding box.
pub fn zalesak_area(n: usize) -> f64 {
    let (x0, y0, side) = (0.35, 0.6, 0.3);
    let h = side / n as f64;
    let mut count = 0usize;
    for j in 0..n {
        for i in 0..n {
            let x = x0 + (i as f64 + 0.5) * h;
            let y = y0 + (j as f64 + 0.5) * h;
            let in_disc = (x - 0.5).hypot(y - 0.75) <= 0.15;
            let in_slot = (x - 0.5).abs() <= 0.025 && y <= 0.85;
            if in_disc && !in_slot {
                count += 1;
            }
        }
    }
    count as f64 * h * h
}

fn unit_box(target: f64, side: SideCondition) -> Result<(Grid, BoundarySpec)> {
    let spec = BoundarySpec::new(side, side, side, side)?;
    let grid = build_grid([1.0, 1.0], target)?.with_tags(spec.tags())?;
    Ok((grid, spec))
}

fn params(case: &BenchmarkCase, grid: &Grid, default: InterfaceSettings) -> Result<LevelSetParams> {
    case.interface.unwrap_or(default).resolve(grid)
}

fn prescribed(
    name: &str,
    grid: Grid,
    phi: Vec<f64>,
    ls: LevelSetParams,
    kin: Kinematics,
    duration: f64,
    oracle: Oracle,
) -> Case {
    let mut fields = FieldSet::new(&grid);
    fields.phi = phi;
    kin.apply(&grid, &mut fields, 0.0);
    zero_masked(&grid, &mut fields);
    Case {
        name: name.into(),
        grid,
        fields,
        levelset: Some(ls),
        props: PhaseProperties::single_phase(1.0, 1.0),
        transport: TransportBoundary::default(),
        motion: Motion::Prescribed(kin),
        duration,
        oracle,
    }
}

/// Zeroes velocities on faces with no fluid neighbour and on wall faces.
pub(crate) fn zero_masked(grid: &Grid, fields: &mut FieldSet) {
    use crate::grid::FaceType;
    for j in 0..grid.ny {
        for i in 0..=grid.nx {
            if matches!(grid.u_face(i, j).ty, FaceType::Inactive | FaceType::Wall) {
                fields.u[grid.u_idx(i, j)] = 0.0;
            }
        }
    }
    for j in 0..=grid.ny {
        for i in 0..grid.nx {
            if matches!(grid.v_face(i, j).ty, FaceType::Inactive | FaceType::Wall) {
                fields.v[grid.v_idx(i, j)] = 0.0;
            }
        }
    }
}

/// Builds a benchmark with cells of size about `grid_target` (unit-box
/// cases span 1 x 1; flow cases are in metres).
pub fn build_benchmark(case: &BenchmarkCase, grid_target: f64) -> Result<Case> {
    if let Some(d) = case.duration {
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::Config(format!("duration must be positive, got {d}")));
        }
    }
    let factor = |f: f64, gamma: f64| InterfaceSettings {
        thickness: Thickness::Factor(f),
        gamma,
    };
    match case.kind {
        BenchmarkKind::EquilibriumRelaxation => {
            // A strip four cells tall; sharp step at x = 1/2.
            let spec = BoundarySpec::new(
                SideCondition::NoSlip,
                SideCondition::NoSlip,
                SideCondition::Periodic,
                SideCondition::Periodic,
            )?;
            let probe = build_grid([1.0, 1.0], grid_target)?;
            let grid = Grid::new(probe.nx, 4, probe.dx, probe.dx)?.with_tags(spec.tags())?;
            let ls = params(case, &grid, factor(1.0, 1.0))?;
            let phi = (0..grid.n_cells())
                .map(|c| {
                    if grid.cell_center(c % grid.nx, 0)[0] < 0.5 {
                        0.0
                    } else {
                        1.0
                    }
                })
                .collect();
            let duration = case
                .duration
                .unwrap_or(60.0 * ls.epsilon / ls.gamma.max(f64::MIN_POSITIVE));
            let oracle = Oracle::Profile {
                center: 0.5,
                epsilon: ls.epsilon,
            };
            Ok(prescribed(
                case.kind.name(),
                grid,
                phi,
                ls,
                Kinematics::Still,
                duration,
                oracle,
            ))
        }
        BenchmarkKind::TranslatingBlob => {
            let (grid, _) = unit_box(grid_target, SideCondition::Periodic)?;
            let kin = Kinematics::Uniform { velocity: [1.0, 0.5] };
            let ls = params(case, &grid, factor(1.0, 1.2))?;
            let r = 0.25;
            let phi = phi_from_distance(&grid, ls.epsilon, |x, y| (x - 0.5).hypot(y - 0.5) - r);
            let oracle = Oracle::IndicatorArea { area: PI * r * r };
            Ok(prescribed(
                case.kind.name(),
                grid,
                phi,
                ls,
                kin,
                case.duration.unwrap_or(1.0),
                oracle,
            ))
        }
        BenchmarkKind::ZalesakDisk => {
            let (grid, _) = unit_box(grid_target, SideCondition::Open)?;
            let kin = Kinematics::Rotation {
                center: [0.5, 0.5],
                omega: 1.0,
            };
            let ls = params(case, &grid, factor(0.5, kin.peak_speed(&grid)))?;
            let phi = phi_from_distance(&grid, ls.epsilon, zalesak_distance);
            let oracle = Oracle::IndicatorArea {
                area: zalesak_area(3000),
            };
            Ok(prescribed(
                case.kind.name(),
                grid,
                phi,
                ls,
                kin,
                case.duration.unwrap_or(2.0 * PI),
                oracle,
            ))
        }
        BenchmarkKind::SingleVortex => {
            let (grid, _) = unit_box(grid_target, SideCondition::NoSlip)?;
            let period = case.duration.unwrap_or(8.0);
            let kin = Kinematics::SingleVortex {
                extent: [1.0, 1.0],
                period,
            };
            let ls = params(case, &grid, factor(0.5, kin.peak_speed(&grid)))?;
            let r = 0.15;
            let phi = phi_from_distance(&grid, ls.epsilon, |x, y| (x - 0.5).hypot(y - 0.75) - r);
            let oracle = Oracle::IndicatorArea { area: PI * r * r };
            Ok(prescribed(case.kind.name(), grid, phi, ls, kin, period, oracle))
        }
        BenchmarkKind::PlanePoiseuille => {
            let (width, length, rate, mu, rho) = CHANNEL;
            let spec = BoundarySpec::new(
                SideCondition::Inlet { rate },
                SideCondition::Open,
                SideCondition::NoSlip,
                SideCondition::NoSlip,
            )?;
            let grid = build_grid([length, width], grid_target)?.with_tags(spec.tags())?;
            let mut fields = FieldSet::new(&grid);
            fields.phi.iter_mut().for_each(|p| *p = 0.0);
            Ok(Case {
                name: case.kind.name().into(),
                grid,
                fields,
                levelset: None,
                props: PhaseProperties::single_phase(rho, mu),
                transport: TransportBoundary::default(),
                motion: Motion::Solved {
                    boundary: spec,
                    flow: FlowConfig {
                        gravity: [0.0, 0.0],
                        ..FlowConfig::default()
                    },
                    ramp_window: 0.0,
                },
                duration: case.duration.unwrap_or(1e-3),
                oracle: Oracle::PressureDrop {
                    expected: plane_poiseuille_reference(mu, length, rate, width)?,
                    length,
                    width,
                    rate,
                    mu,
                },
            })
        }
        BenchmarkKind::HydrostaticColumn => {
            let (width, height, rho) = (1e-3, 2e-3, 1000.0);
            let spec = BoundarySpec::new(
                SideCondition::NoSlip,
                SideCondition::NoSlip,
                SideCondition::NoSlip,
                SideCondition::Open,
            )?;
            let grid = build_grid([width, height], grid_target)?.with_tags(spec.tags())?;
            let mut fields = FieldSet::new(&grid);
            fields.phi.iter_mut().for_each(|p| *p = 0.0);
            let flow = FlowConfig::default();
            Ok(Case {
                name: case.kind.name().into(),
                grid,
                fields,
                levelset: None,
                props: PhaseProperties::single_phase(rho, 1000.0),
                transport: TransportBoundary::default(),
                motion: Motion::Solved {
                    boundary: spec,
                    flow,
                    ramp_window: 0.0,
                },
                duration: case.duration.unwrap_or(1e-3),
                oracle: Oracle::Hydrostatic {
                    rho,
                    gravity: flow.gravity[1],
                    surface: height,
                },
            })
        }
    }
}
