//! Ready-to-run cases: the planar extrusion-deposition setup and a set of
//! verification benchmarks with analytic oracles.

mod benchmark;
mod kinematics;

pub(crate) use benchmark::zero_masked;
pub use benchmark::{build_benchmark, zalesak_area, BenchmarkCase, BenchmarkKind, CHANNEL};
pub use kinematics::Kinematics;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{BoundarySpec, FlowConfig, SideCondition};
use crate::grid::{build_grid, CellKind, FieldSet, Grid};
use crate::levelset::{epsilon_ref, equilibrium_profile, LevelSetParams, PhaseProperties, TransportBoundary};

/// Interface thickness either relative to the mesh recommendation or in metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Thickness {
    Factor(f64),
    Absolute(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterfaceSettings {
    pub thickness: Thickness,
    /// Reinitialisation rate (m/s).
    pub gamma: f64,
}

impl InterfaceSettings {
    pub fn resolve(&self, grid: &Grid) -> Result<LevelSetParams> {
        match self.thickness {
            Thickness::Factor(f) => {
                if !(f > 0.0 && f.is_finite()) {
                    return Err(Error::Config(format!("epsilon factor must be positive, got {f}")));
                }
                LevelSetParams::from_factor(grid, f, self.gamma)
            }
            Thickness::Absolute(eps) => {
                let mut p = LevelSetParams::new(eps, self.gamma)?;
                p.epsilon_f = Some(eps / epsilon_ref(grid));
                Ok(p)
            }
        }
    }
}

/// How face velocities are obtained during a run.
#[derive(Debug, Clone, PartialEq)]
pub enum Motion {
    Prescribed(Kinematics),
    Solved {
        boundary: BoundarySpec,
        flow: FlowConfig,
        /// Driven boundaries ramp up over `[0, ramp_window]`.
        ramp_window: f64,
    },
}

/// Analytic reference attached to a case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Oracle {
    /// Area of `{phi <= 0.5}` (m2).
    IndicatorArea { area: f64 },
    /// `phi(x) = 1 / (1 + exp(-(x - center) / epsilon))`.
    Profile { center: f64, epsilon: f64 },
    /// Plane-channel pressure drop over `length`.
    PressureDrop {
        expected: f64,
        length: f64,
        width: f64,
        rate: f64,
        mu: f64,
    },
    /// `p = rho |g| (surface - y)`.
    Hydrostatic { rho: f64, gravity: f64, surface: f64 },
    /// Ideal strand thickness `q / bed_speed` sampled at `station`.
    Strand {
        ideal_thickness: f64,
        station: f64,
        inlet_rate: f64,
        bed_speed: f64,
    },
}

/// A fully initialised run.
#[derive(Debug, Clone)]
pub struct Case {
    pub name: String,
    pub grid: Grid,
    pub fields: FieldSet,
    /// `None` for single-phase flow cases, which skip transport.
    pub levelset: Option<LevelSetParams>,
    pub props: PhaseProperties,
    pub transport: TransportBoundary,
    pub motion: Motion,
    pub duration: f64,
    pub oracle: Oracle,
}

impl Case {
    /// Checks the self-consistency every built case must satisfy.
    pub fn check(&self) -> Result<()> {
        self.fields.validate(&self.grid)?;
        if self.fields.phi.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Config("initial phi outside [0, 1]".into()));
        }
        for j in 0..self.grid.ny {
            for i in 0..=self.grid.nx {
                if !self.grid.u_face(i, j).is_active() && self.fields.u[self.grid.u_idx(i, j)] != 0.0 {
                    return Err(Error::Config("masked u-face carries velocity".into()));
                }
            }
        }
        for j in 0..=self.grid.ny {
            for i in 0..self.grid.nx {
                if !self.grid.v_face(i, j).is_active() && self.fields.v[self.grid.v_idx(i, j)] != 0.0 {
                    return Err(Error::Config("masked v-face carries velocity".into()));
                }
            }
        }
        if let Motion::Solved { boundary, .. } = &self.motion {
            boundary.check_grid(&self.grid)?;
        }
        Ok(())
    }
}

/// Planar printing setup: a static nozzle slot above a bed moving along +x.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepositionScenario {
    /// Slot width (m).
    pub nozzle_diameter: f64,
    pub nozzle_length: f64,
    /// Nozzle tip to bed distance (m).
    pub gap: f64,
    /// Kept for reference; the planar model has no width direction.
    pub block_width: f64,
    pub block_height: f64,
    pub block_length: f64,
    pub plunger_speed: f64,
    /// Bed speed relative to the nozzle (m/s).
    pub nozzle_speed: f64,
    pub props: PhaseProperties,
    /// Signed vertical acceleration (m/s2).
    pub gravity: f64,
    /// Distance of the nozzle axis from the upstream end of the block (m).
    pub nozzle_axis: f64,
    /// Distance of the measuring station downstream of the nozzle axis (m).
    pub measure_offset: f64,
    /// Simulated time limit (s).
    pub max_time: f64,
}

impl Default for DepositionScenario {
    fn default() -> Self {
        DepositionScenario {
            nozzle_diameter: 0.4e-3,
            nozzle_length: 2e-3,
            gap: 0.32e-3,
            block_width: 1.2e-3,
            block_height: 0.6e-3,
            block_length: 6e-3,
            plunger_speed: 0.02,
            nozzle_speed: 0.02,
            props: PhaseProperties::with_default_air(1000.0, 1000.0),
            gravity: -9.81,
            nozzle_axis: 1.5e-3,
            measure_offset: 2e-3,
            max_time: 0.5,
        }
    }
}

/// Gap-to-diameter ratios of the reference study.
pub const STANDARD_GAP_RATIOS: [f64; 3] = [0.6, 0.8, 1.0];

impl DepositionScenario {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("nozzle_diameter", self.nozzle_diameter),
            ("nozzle_length", self.nozzle_length),
            ("gap", self.gap),
            ("block_height", self.block_height),
            ("block_length", self.block_length),
            ("plunger_speed", self.plunger_speed),
            ("nozzle_speed", self.nozzle_speed),
            ("measure_offset", self.measure_offset),
            ("max_time", self.max_time),
            ("nozzle_axis", self.nozzle_axis),
        ];
        for (name, x) in positive {
            if !(x > 0.0 && x.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {x}")));
            }
        }
        self.props.validate()?;
        if self.gap >= self.block_height {
            return Err(Error::Config("nozzle tip must sit inside the block".into()));
        }
        if self.nozzle_axis - 0.5 * self.nozzle_diameter <= 0.0 {
            return Err(Error::Config("nozzle does not fit upstream of its axis".into()));
        }
        if self.station() >= self.block_length {
            return Err(Error::Config(format!(
                "measuring station at {} m lies outside the {} m block",
                self.station(),
                self.block_length
            )));
        }
        if !self.is_standard_gap() {
            log::warn!(
                "gap/diameter ratio {:.3} is outside the reference study grid",
                self.gap_ratio()
            );
        }
        if self.ideal_thickness() >= self.block_height {
            log::warn!(
                "ideal strand thickness {:.3e} m reaches the block top {:.3e} m",
                self.ideal_thickness(),
                self.block_height
            );
        }
        Ok(())
    }

    pub fn gap_ratio(&self) -> f64 {
        self.gap / self.nozzle_diameter
    }

    pub fn is_standard_gap(&self) -> bool {
        STANDARD_GAP_RATIOS.iter().any(|r| (self.gap_ratio() - r).abs() < 1e-9)
    }

    /// Per-depth inflow `v_p D` (m2/s).
    pub fn inlet_rate(&self) -> f64 {
        self.plunger_speed * self.nozzle_diameter
    }

    /// Volumetric rate through half a circular nozzle, `v_p pi D^2 / 8` (m3/s).
    pub fn half_pipe_rate(&self) -> f64 {
        self.plunger_speed * std::f64::consts::PI * self.nozzle_diameter.powi(2) / 8.0
    }

    /// Steady thickness from the planar mass balance `q = h v_x`.
    pub fn ideal_thickness(&self) -> f64 {
        self.inlet_rate() / self.nozzle_speed
    }

    pub fn station(&self) -> f64 {
        self.nozzle_axis + self.measure_offset
    }

    pub fn boundary(&self) -> Result<BoundarySpec> {
        BoundarySpec::new(
            SideCondition::Open,
            SideCondition::Open,
            SideCondition::MovingWall {
                speed: self.nozzle_speed,
            },
            SideCondition::Inlet {
                rate: self.inlet_rate(),
            },
        )
    }
}

/// Builds the planar deposition case on a grid of roughly `grid_target`
/// cells. The nozzle walls are one cell thick and the slot is snapped to
/// cell faces.
pub fn build_deposition(scenario: &DepositionScenario, grid_target: f64, interface: InterfaceSettings) -> Result<Case> {
    scenario.validate()?;
    let boundary = scenario.boundary()?;
    let extent = [scenario.block_length, scenario.gap + scenario.nozzle_length];
    let grid = build_grid(extent, grid_target)?.with_tags(boundary.tags())?;
    let gap_cells = scenario.gap / grid.dy;
    if gap_cells < 4.0 - 1e-9 {
        return Err(Error::Config(format!(
            "gap spans {gap_cells:.2} cells; at least 4 are needed to resolve the interface"
        )));
    }
    if gap_cells < 8.0 - 1e-9 {
        log::warn!("gap spans only {gap_cells:.2} cells");
    }
    let snap = |x: f64| (x / grid.dx).round() as usize;
    let slot_lo = snap(scenario.nozzle_axis - 0.5 * scenario.nozzle_diameter);
    let slot_hi = snap(scenario.nozzle_axis + 0.5 * scenario.nozzle_diameter);
    let tip = (scenario.gap / grid.dy).round() as usize;
    if slot_lo < 1 || slot_hi + 1 > grid.nx || slot_hi < slot_lo + 2 {
        return Err(Error::Config("nozzle slot does not resolve on this grid".into()));
    }
    let mut cells = Vec::with_capacity(grid.n_cells());
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let y = grid.cell_center(i, j)[1];
            let kind = if j >= tip && (i == slot_lo - 1 || i == slot_hi) {
                CellKind::Solid
            } else if y < scenario.block_height || (j >= tip && (slot_lo..slot_hi).contains(&i)) {
                CellKind::Fluid
            } else {
                CellKind::Void
            };
            cells.push(kind);
        }
    }
    let grid = grid.with_cells(cells)?;
    let params = interface.resolve(&grid)?;
    if !params.meets_bound_criterion(&grid, 0.0) {
        log::warn!("epsilon {:.3e} m is below half a cell", params.epsilon);
    }

    // Ink fills the slot down to the exit plane.
    let (x_lo, x_hi) = (slot_lo as f64 * grid.dx, slot_hi as f64 * grid.dx);
    let y_tip = tip as f64 * grid.dy;
    let mut fields = FieldSet::new(&grid);
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            if !grid.is_fluid(i, j) {
                continue;
            }
            let [x, y] = grid.cell_center(i, j);
            let inside = x > x_lo && x < x_hi && y > y_tip;
            // The walls are not part of the interface, so inside the slot
            // only the exit plane counts.
            let d = if inside {
                -(y - y_tip)
            } else {
                let dx = (x_lo - x).max(0.0).max(x - x_hi);
                let dy = (y_tip - y).max(0.0);
                dx.hypot(dy)
            };
            fields.phi[grid.idx(i, j)] = equilibrium_profile(d, params.epsilon);
        }
    }
    let flow = FlowConfig {
        gravity: [0.0, scenario.gravity],
        ..FlowConfig::default()
    };
    Ok(Case {
        name: "deposition".into(),
        grid,
        fields,
        levelset: Some(params),
        props: scenario.props,
        transport: TransportBoundary::default(),
        motion: Motion::Solved {
            boundary,
            flow,
            ramp_window: 0.05 * scenario.max_time,
        },
        duration: scenario.max_time,
        oracle: Oracle::Strand {
            ideal_thickness: scenario.ideal_thickness(),
            station: scenario.station(),
            inlet_rate: scenario.inlet_rate(),
            bed_speed: scenario.nozzle_speed,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn interface() -> InterfaceSettings {
        InterfaceSettings {
            thickness: Thickness::Factor(1.0),
            gamma: 0.02,
        }
    }

    #[test]
    fn baseline_ideal_thickness() {
        let s = DepositionScenario::default();
        assert_relative_eq!(s.ideal_thickness(), 0.4e-3, max_relative = 1e-12);
        assert_relative_eq!(s.inlet_rate(), 8e-6, max_relative = 1e-12);
        let slow = DepositionScenario {
            nozzle_speed: 0.01,
            ..s
        };
        assert_relative_eq!(slow.ideal_thickness(), 0.8e-3, max_relative = 1e-12);
        // Half-pipe rate of the reference setup, 1.257 mm3/s.
        assert_relative_eq!(s.half_pipe_rate(), 1.2566e-9, max_relative = 1e-4);
    }

    #[test]
    fn baseline_case_layout() {
        let s = DepositionScenario::default();
        let case = build_deposition(&s, s.gap / 12.0, interface()).unwrap();
        let g = &case.grid;
        assert_eq!((g.nx, g.ny), (225, 87));
        case.check().unwrap();
        // Slot of 15 cells between two wall columns.
        let top = g.ny - 1;
        let fluid_top: Vec<usize> = (0..g.nx).filter(|&i| g.is_fluid(i, top)).collect();
        assert_eq!(fluid_top.len(), 15);
        assert_eq!(g.cell(fluid_top[0] - 1, top), CellKind::Solid);
        assert_eq!(g.cell(fluid_top[14] + 1, top), CellKind::Solid);
        // Ink inside the nozzle, air in the block.
        let mid = fluid_top[7];
        assert!(case.fields.phi[g.idx(mid, top)] < 1e-6);
        assert!(case.fields.phi[g.idx(mid, 1)] > 0.99);
        let Oracle::Strand {
            ideal_thickness,
            station,
            ..
        } = case.oracle
        else {
            panic!("wrong oracle")
        };
        assert_relative_eq!(ideal_thickness, 0.4e-3, max_relative = 1e-12);
        assert_relative_eq!(station, 3.5e-3, max_relative = 1e-12);
    }

    #[test]
    fn smallest_gap_resolves() {
        let s = DepositionScenario {
            gap: 0.24e-3,
            ..DepositionScenario::default()
        };
        let case = build_deposition(&s, 0.02e-3, interface()).unwrap();
        assert_relative_eq!(s.gap / case.grid.dy, 12.0, max_relative = 1e-9);
    }

    #[test]
    fn under_resolved_gap_rejected() {
        let s = DepositionScenario::default();
        assert!(matches!(
            build_deposition(&s, s.gap / 3.0, interface()),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn rebuild_is_identical() {
        let s = DepositionScenario::default();
        let a = build_deposition(&s, s.gap / 8.0, interface()).unwrap();
        let b = build_deposition(&s, s.gap / 8.0, interface()).unwrap();
        assert_eq!(a.grid, b.grid);
        assert_eq!(a.fields, b.fields);
    }

    #[test]
    fn gap_ratio_flags() {
        let s = DepositionScenario::default();
        assert!(s.is_standard_gap());
        let odd = DepositionScenario { gap: 0.3e-3, ..s };
        assert!(!odd.is_standard_gap());
        assert!(odd.validate().is_ok());
    }
}
