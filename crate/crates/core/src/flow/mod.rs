//! Variable-density, variable-viscosity incompressible flow on the MAC grid.
//!
//! Two step modes share one discretisation of `div(2 mu D(v))`:
//!
//! * `Stokes`: inertia dropped, the quasi-steady saddle-point system is
//!   solved directly for velocity and pressure together.
//! * `NavierStokes`: explicit flux-form momentum advection, implicit viscous
//!   solve, body force, then a variable-density pressure projection.

mod advection;
mod assembly;
pub mod linalg;
mod solver;

pub use solver::{FlowSolver, FlowStats};

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{BoundaryKind, FaceType, FieldSet, Grid, Side};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FlowMode {
    #[default]
    Stokes,
    NavierStokes,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    pub mode: FlowMode,
    /// Body acceleration (m/s2), `[x, y]`.
    pub gravity: [f64; 2],
    pub pressure_tol: f64,
    pub viscous_tol: f64,
    pub max_iters: usize,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            mode: FlowMode::Stokes,
            gravity: [0.0, -9.81],
            pressure_tol: 1e-10,
            viscous_tol: 1e-10,
            max_iters: 10_000,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, tol) in [("pressure_tol", self.pressure_tol), ("viscous_tol", self.viscous_tol)] {
            if !(tol > 0.0 && tol < 1.0) {
                return Err(Error::Config(format!("{name} must lie in (0, 1), got {tol}")));
            }
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        if self.gravity.iter().any(|g| !g.is_finite()) {
            return Err(Error::Config("gravity must be finite".into()));
        }
        Ok(())
    }
}

/// Condition and data on one domain side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SideCondition {
    NoSlip,
    /// Tangential wall speed (m/s), positive along +x on horizontal sides
    /// and +y on vertical sides.
    MovingWall {
        speed: f64,
    },
    /// Volumetric inflow per unit depth (m2/s) spread over the side's inlet faces.
    Inlet {
        rate: f64,
    },
    Open,
    Symmetry,
    Periodic,
}

impl SideCondition {
    pub fn kind(&self) -> BoundaryKind {
        match self {
            SideCondition::NoSlip => BoundaryKind::NoSlip,
            SideCondition::MovingWall { .. } => BoundaryKind::MovingWall,
            SideCondition::Inlet { .. } => BoundaryKind::Inlet,
            SideCondition::Open => BoundaryKind::Open,
            SideCondition::Symmetry => BoundaryKind::Symmetry,
            SideCondition::Periodic => BoundaryKind::Periodic,
        }
    }
}

/// Conditions for the four sides, indexed by [`Side::index`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundarySpec {
    sides: [SideCondition; 4],
}

impl BoundarySpec {
    pub fn new(
        left: SideCondition,
        right: SideCondition,
        bottom: SideCondition,
        top: SideCondition,
    ) -> Result<BoundarySpec> {
        let spec = BoundarySpec {
            sides: [left, right, bottom, top],
        };
        for side in Side::ALL {
            match spec.side(side) {
                SideCondition::Inlet { rate } if !(rate >= 0.0 && rate.is_finite()) => {
                    return Err(Error::Config(format!(
                        "inlet rate on {side:?} must be non-negative, got {rate}"
                    )));
                }
                SideCondition::MovingWall { speed } if !speed.is_finite() => {
                    return Err(Error::Config(format!("wall speed on {side:?} must be finite")));
                }
                _ => {}
            }
        }
        Ok(spec)
    }

    pub fn side(&self, side: Side) -> SideCondition {
        self.sides[side.index()]
    }

    /// Boundary tags for building a matching grid.
    pub fn tags(&self) -> [(Side, BoundaryKind); 4] {
        Side::ALL.map(|s| (s, self.side(s).kind()))
    }

    /// Errors when the grid was tagged with different kinds.
    pub fn check_grid(&self, grid: &Grid) -> Result<()> {
        for side in Side::ALL {
            if grid.tag(side) != self.side(side).kind() {
                return Err(Error::Config(format!(
                    "{side:?} side is tagged {:?} on the grid but {:?} in the boundary spec",
                    grid.tag(side),
                    self.side(side).kind()
                )));
            }
        }
        Ok(())
    }

    /// Tangential velocity imposed by `side` at the given ramp.
    pub(crate) fn wall_speed(&self, side: Side, ramp: f64) -> f64 {
        match self.side(side) {
            SideCondition::MovingWall { speed } => ramp * speed,
            _ => 0.0,
        }
    }
}

/// Smooth start-up factor: `(1 - cos(pi t / window)) / 2` up to `window`, then 1.
pub fn cosine_ramp(t: f64, window: f64) -> f64 {
    if window <= 0.0 || t >= window {
        1.0
    } else if t <= 0.0 {
        0.0
    } else {
        0.5 * (1.0 - (PI * t / window).cos())
    }
}

/// Inlet faces on one side: (face index into u or v, position along the side).
fn inlet_faces(grid: &Grid, side: Side) -> Vec<(usize, f64)> {
    let mut out = Vec::new();
    match side {
        Side::Left | Side::Right => {
            let i = if side == Side::Left { 0 } else { grid.nx };
            for j in 0..grid.ny {
                if grid.u_face(i, j).ty == FaceType::Inlet {
                    out.push((grid.u_idx(i, j), grid.u_face_center(i, j)[1]));
                }
            }
        }
        Side::Bottom | Side::Top => {
            let j = if side == Side::Bottom { 0 } else { grid.ny };
            for i in 0..grid.nx {
                if grid.v_face(i, j).ty == FaceType::Inlet {
                    out.push((grid.v_idx(i, j), grid.v_face_center(i, j)[0]));
                }
            }
        }
    }
    out
}

/// Parabolic inflow speeds on each contiguous run of inlet faces, scaled so
/// that the discrete flux equals `rate` exactly. Runs share the rate in
/// proportion to their width.
fn inlet_profile(faces: &[(usize, f64)], h: f64, rate: f64) -> Vec<f64> {
    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut start = 0;
    for k in 1..=faces.len() {
        if k == faces.len() || (faces[k].1 - faces[k - 1].1 - h).abs() > 1e-6 * h {
            runs.push((start, k));
            start = k;
        }
    }
    let total = faces.len() as f64 * h;
    let mut speeds = vec![0.0; faces.len()];
    for (a, b) in runs {
        let width = (b - a) as f64 * h;
        let lo = faces[a].1 - 0.5 * h;
        let shape: Vec<f64> = faces[a..b].iter().map(|f| (f.1 - lo) * (lo + width - f.1)).collect();
        let integral: f64 = shape.iter().sum::<f64>() * h;
        let share = rate * width / total;
        for (k, s) in shape.iter().enumerate() {
            speeds[a + k] = share * s / integral;
        }
    }
    speeds
}

/// Writes boundary face values: zero on walls and inactive faces, the ramped
/// inflow profile on inlet faces, and keeps periodic mirror faces in sync.
/// Tangential wall motion enters the viscous operator and is not stored on
/// faces.
pub fn apply_boundaries(grid: &Grid, fields: &mut FieldSet, spec: &BoundarySpec, ramp: f64) -> Result<()> {
    fields.check_layout(grid)?;
    spec.check_grid(grid)?;
    if !(0.0..=1.0).contains(&ramp) {
        return Err(Error::Config(format!("ramp must lie in [0, 1], got {ramp}")));
    }
    for j in 0..grid.ny {
        for i in 0..=grid.nx {
            if matches!(
                grid.u_face(i, j).ty,
                FaceType::Inactive | FaceType::Wall | FaceType::Inlet
            ) {
                fields.u[grid.u_idx(i, j)] = 0.0;
            }
        }
    }
    for j in 0..=grid.ny {
        for i in 0..grid.nx {
            if matches!(
                grid.v_face(i, j).ty,
                FaceType::Inactive | FaceType::Wall | FaceType::Inlet
            ) {
                fields.v[grid.v_idx(i, j)] = 0.0;
            }
        }
    }
    for side in Side::ALL {
        let SideCondition::Inlet { rate } = spec.side(side) else {
            continue;
        };
        let faces = inlet_faces(grid, side);
        if faces.is_empty() {
            return Err(Error::Config(format!("{side:?} inlet has zero area")));
        }
        let h = if matches!(side, Side::Left | Side::Right) {
            grid.dy
        } else {
            grid.dx
        };
        // Inflow points against the outward normal.
        let speeds = inlet_profile(&faces, h, ramp * rate);
        let target = if matches!(side, Side::Left | Side::Right) {
            &mut fields.u
        } else {
            &mut fields.v
        };
        for ((idx, _), s) in faces.iter().zip(speeds) {
            target[*idx] = -side.outward() * s;
        }
    }
    sync_mirrors(grid, fields);
    Ok(())
}

/// Copies face index 0 onto the duplicated upper face of periodic directions.
pub(crate) fn sync_mirrors(grid: &Grid, fields: &mut FieldSet) {
    if grid.u_is_mirror(grid.nx) {
        for j in 0..grid.ny {
            fields.u[grid.u_idx(grid.nx, j)] = fields.u[grid.u_idx(0, j)];
        }
    }
    if grid.v_is_mirror(grid.ny) {
        for i in 0..grid.nx {
            fields.v[grid.v_idx(i, grid.ny)] = fields.v[grid.v_idx(i, 0)];
        }
    }
}

/// Pipe pressure drop `8 mu L Q / (pi R^4)` for a full-pipe volumetric rate.
pub fn hagen_poiseuille_reference(mu: f64, length: f64, flow_rate: f64, radius: f64) -> Result<f64> {
    for (name, x) in [
        ("mu", mu),
        ("length", length),
        ("flow_rate", flow_rate),
        ("radius", radius),
    ] {
        if !(x > 0.0 && x.is_finite()) {
            return Err(Error::Config(format!("{name} must be positive, got {x}")));
        }
    }
    Ok(8.0 * mu * length * flow_rate / (PI * radius.powi(4)))
}

/// Plane-channel pressure drop `12 mu L q / w^3` for a per-depth rate `q`.
pub fn plane_poiseuille_reference(mu: f64, length: f64, rate: f64, width: f64) -> Result<f64> {
    for (name, x) in [("mu", mu), ("length", length), ("rate", rate), ("width", width)] {
        if !(x > 0.0 && x.is_finite()) {
            return Err(Error::Config(format!("{name} must be positive, got {x}")));
        }
    }
    Ok(12.0 * mu * length * rate / width.powi(3))
}

/// Largest pressure over fluid cells (gauge, relative to open boundaries).
pub fn max_pressure(grid: &Grid, fields: &FieldSet) -> f64 {
    (0..grid.ny)
        .flat_map(|j| (0..grid.nx).map(move |i| (i, j)))
        .filter(|&(i, j)| grid.is_fluid(i, j))
        .map(|(i, j)| fields.p[grid.idx(i, j)])
        .fold(f64::NEG_INFINITY, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::CellKind;
    use approx::assert_relative_eq;

    fn slot_grid() -> (Grid, BoundarySpec) {
        // 20 cells of 0.05 mm; the top inlet is open over cells 6..14 (0.4 mm).
        let spec = BoundarySpec::new(
            SideCondition::Open,
            SideCondition::Open,
            SideCondition::MovingWall { speed: 0.02 },
            SideCondition::Inlet { rate: 8e-6 },
        )
        .unwrap();
        let (nx, ny) = (20, 10);
        let mut cells = vec![CellKind::Fluid; nx * ny];
        for i in (0..6).chain(14..20) {
            cells[(ny - 1) * nx + i] = CellKind::Solid;
        }
        let g = Grid::new(nx, ny, 0.05e-3, 0.05e-3)
            .unwrap()
            .with_tags(spec.tags())
            .unwrap()
            .with_cells(cells)
            .unwrap();
        (g, spec)
    }

    #[test]
    fn slot_inlet_mean_speed() {
        let (g, spec) = slot_grid();
        let mut f = FieldSet::new(&g);
        apply_boundaries(&g, &mut f, &spec, 1.0).unwrap();
        let inflow: Vec<f64> = (0..g.nx).map(|i| -f.v[g.v_idx(i, g.ny)]).collect();
        let flux: f64 = inflow.iter().sum::<f64>() * g.dx;
        assert_relative_eq!(flux, 8e-6, max_relative = 1e-14);
        assert_relative_eq!(flux / 0.4e-3, 0.02, max_relative = 1e-12);
        assert!(inflow[..6].iter().chain(&inflow[14..]).all(|v| *v == 0.0));
        // Parabolic: peak in the middle, symmetric.
        assert!(inflow[9] > inflow[6]);
        assert_relative_eq!(inflow[7], inflow[12], max_relative = 1e-12);
    }

    #[test]
    fn zero_ramp_is_rest() {
        let (g, spec) = slot_grid();
        let mut f = FieldSet::new(&g);
        f.v.iter_mut().for_each(|v| *v = 1.0);
        apply_boundaries(&g, &mut f, &spec, 0.0).unwrap();
        assert!((0..g.nx).all(|i| f.v[g.v_idx(i, g.ny)] == 0.0));
        assert_eq!(spec.wall_speed(Side::Bottom, 0.0), 0.0);
    }

    #[test]
    fn symmetry_zeroes_normal_velocity() {
        let spec = BoundarySpec::new(
            SideCondition::Symmetry,
            SideCondition::Open,
            SideCondition::NoSlip,
            SideCondition::NoSlip,
        )
        .unwrap();
        let g = Grid::new(4, 4, 1.0, 1.0).unwrap().with_tags(spec.tags()).unwrap();
        let mut f = FieldSet::new(&g);
        f.u.iter_mut().for_each(|v| *v = 3.0);
        apply_boundaries(&g, &mut f, &spec, 1.0).unwrap();
        for j in 0..4 {
            assert_eq!(f.u[g.u_idx(0, j)], 0.0);
            assert_eq!(f.u[g.u_idx(4, j)], 3.0);
        }
    }

    #[test]
    fn rejects_inlet_without_area() {
        let spec = BoundarySpec::new(
            SideCondition::NoSlip,
            SideCondition::NoSlip,
            SideCondition::NoSlip,
            SideCondition::Inlet { rate: 1.0 },
        )
        .unwrap();
        let cells = (0..16)
            .map(|k| if k >= 12 { CellKind::Solid } else { CellKind::Fluid })
            .collect();
        let g = Grid::new(4, 4, 1.0, 1.0)
            .unwrap()
            .with_tags(spec.tags())
            .unwrap()
            .with_cells(cells)
            .unwrap();
        let mut f = FieldSet::new(&g);
        assert!(matches!(
            apply_boundaries(&g, &mut f, &spec, 1.0),
            Err(Error::Config(_))
        ));
        assert!(BoundarySpec::new(
            SideCondition::NoSlip,
            SideCondition::NoSlip,
            SideCondition::NoSlip,
            SideCondition::Inlet { rate: -1.0 }
        )
        .is_err());
    }

    #[test]
    fn ramp_shape() {
        assert_eq!(cosine_ramp(0.0, 1.0), 0.0);
        assert_relative_eq!(cosine_ramp(0.5, 1.0), 0.5, max_relative = 1e-15);
        assert_eq!(cosine_ramp(2.0, 1.0), 1.0);
        assert_eq!(cosine_ramp(0.0, 0.0), 1.0);
        let mut last = 0.0;
        for k in 0..=100 {
            let r = cosine_ramp(k as f64 / 100.0, 1.0);
            assert!(r >= last);
            last = r;
        }
    }

    #[test]
    fn pipe_reference() {
        let dp = hagen_poiseuille_reference(1000.0, 2e-3, 2.513e-9, 0.2e-3).unwrap();
        assert_relative_eq!(dp, 8.0e6, max_relative = 5e-3);
        let dp2 = hagen_poiseuille_reference(2000.0, 2e-3, 2.513e-9, 0.2e-3).unwrap();
        assert_relative_eq!(dp2, 2.0 * dp, max_relative = 1e-14);
        let dp3 = hagen_poiseuille_reference(1000.0, 2e-3, 2.513e-9, 0.4e-3).unwrap();
        assert_relative_eq!(dp3, dp / 16.0, max_relative = 1e-14);
        assert!(hagen_poiseuille_reference(0.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn max_pressure_of_constant_field() {
        let g = Grid::new(3, 3, 1.0, 1.0).unwrap();
        let mut f = FieldSet::new(&g);
        f.p.iter_mut().for_each(|p| *p = 7.5);
        assert_eq!(max_pressure(&g, &f), 7.5);
    }
}
