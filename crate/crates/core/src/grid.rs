//! Uniform staggered (MAC) grid, cell masks, face classification and field storage.
//!
//! Layout for an `nx × ny` grid with spacing `dx × dy`:
//! - `u` lives on x-normal faces, `(nx+1) × ny` entries, face `(i, j)` at `x = i·dx`.
//! - `v` lives on y-normal faces, `nx × (ny+1)` entries, face `(i, j)` at `y = j·dy`.
//! - `p` and `phi` live at cell centres, `nx × ny` entries.
//!
//! All arrays are row-major with `x` varying fastest. `x` is the print
//! direction and `y` the height above the bed; gravity acts along `-y`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on the number of cells a grid may allocate.
pub const DEFAULT_MAX_CELLS: usize = 20_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
}

/// A side of the rectangular domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Left, Side::Right, Side::Bottom, Side::Top];

    pub fn index(self) -> usize {
        match self {
            Side::Left => 0,
            Side::Right => 1,
            Side::Bottom => 2,
            Side::Top => 3,
        }
    }

    /// Axis normal to this side.
    pub fn normal_axis(self) -> Axis {
        match self {
            Side::Left | Side::Right => Axis::X,
            Side::Bottom | Side::Top => Axis::Y,
        }
    }

    /// Outward normal sign along the normal axis.
    pub fn outward(self) -> f64 {
        match self {
            Side::Left | Side::Bottom => -1.0,
            Side::Right | Side::Top => 1.0,
        }
    }
}

/// Boundary condition kind carried by each domain side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKind {
    NoSlip,
    MovingWall,
    Inlet,
    Open,
    Symmetry,
    Periodic,
}

impl BoundaryKind {
    /// Whether the normal velocity on this kind of side is fixed at zero.
    pub fn is_wall(self) -> bool {
        matches!(
            self,
            BoundaryKind::NoSlip | BoundaryKind::MovingWall | BoundaryKind::Symmetry
        )
    }
}

/// Per-cell material mask. `Solid` cells are no-slip obstacles, `Void` cells
/// lie outside the computational domain and act as open boundaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CellKind {
    Fluid,
    Solid,
    Void,
}

/// Role of a staggered face in the discretisation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceType {
    /// No fluid cell on either side.
    Inactive,
    /// Fluid on both sides.
    Interior,
    /// Zero normal flow: solid cell, no-slip, moving-wall or symmetry side.
    Wall,
    /// Prescribed inflow.
    Inlet,
    /// Traction-free: domain edge tagged open, or a void cell.
    Open,
}

/// Face classification together with the side on which the fluid cell sits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Face {
    pub ty: FaceType,
    /// For boundary faces: true when the fluid cell has the lower index.
    pub fluid_low: bool,
}

impl Face {
    const INACTIVE: Face = Face {
        ty: FaceType::Inactive,
        fluid_low: false,
    };

    pub fn is_active(&self) -> bool {
        self.ty != FaceType::Inactive
    }
}

/// What lies on one side of a face.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Neighbor {
    Cell(usize, usize, CellKind),
    Edge(Side),
}

/// Uniform Cartesian staggered grid. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    pub origin: [f64; 2],
    tags: [BoundaryKind; 4],
    cells: Vec<CellKind>,
    u_faces: Vec<Face>,
    v_faces: Vec<Face>,
}

/// Round a ratio up to an integer, ignoring floating-point noise just above
/// an exact integer.
fn ceil_count(extent: f64, target: f64) -> f64 {
    let ratio = extent / target;
    let nearest = ratio.round();
    if (ratio - nearest).abs() <= 1e-9 * ratio.max(1.0) {
        nearest
    } else {
        ratio.ceil()
    }
}

/// Builds the coarsest uniform grid with cell size `<= target_cell_size`
/// covering `extent`, with the default cell budget.
pub fn build_grid(extent: [f64; 2], target_cell_size: f64) -> Result<Grid> {
    build_grid_with_budget(extent, target_cell_size, DEFAULT_MAX_CELLS)
}

pub fn build_grid_with_budget(extent: [f64; 2], target_cell_size: f64, max_cells: usize) -> Result<Grid> {
    if !(target_cell_size > 0.0 && target_cell_size.is_finite()) {
        return Err(Error::InvalidGrid(format!(
            "target cell size must be positive, got {target_cell_size}"
        )));
    }
    if !extent.iter().all(|e| *e > 0.0 && e.is_finite()) {
        return Err(Error::InvalidGrid(format!("extent must be positive, got {extent:?}")));
    }
    let nx = ceil_count(extent[0], target_cell_size);
    let ny = ceil_count(extent[1], target_cell_size);
    if nx * ny > max_cells as f64 {
        return Err(Error::InvalidGrid(format!(
            "{nx} x {ny} cells exceed the budget of {max_cells}"
        )));
    }
    let (nx, ny) = (nx as usize, ny as usize);
    Grid::new(nx, ny, extent[0] / nx as f64, extent[1] / ny as f64)
}

impl Grid {
    /// All-fluid grid with no-slip walls on every side and origin at zero.
    pub fn new(nx: usize, ny: usize, dx: f64, dy: f64) -> Result<Grid> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidGrid("cell counts must be non-zero".into()));
        }
        if !(dx > 0.0 && dy > 0.0 && dx.is_finite() && dy.is_finite()) {
            return Err(Error::InvalidGrid(format!("spacing must be positive, got {dx} x {dy}")));
        }
        let mut grid = Grid {
            nx,
            ny,
            dx,
            dy,
            origin: [0.0, 0.0],
            tags: [BoundaryKind::NoSlip; 4],
            cells: vec![CellKind::Fluid; nx * ny],
            u_faces: Vec::new(),
            v_faces: Vec::new(),
        };
        grid.classify_faces();
        Ok(grid)
    }

    pub fn with_origin(mut self, origin: [f64; 2]) -> Grid {
        self.origin = origin;
        self
    }

    /// Replaces the per-side boundary tags. Periodic tags must come in
    /// opposite pairs.
    pub fn with_tags(mut self, tags: [(Side, BoundaryKind); 4]) -> Result<Grid> {
        let mut seen = [false; 4];
        for (side, kind) in tags {
            if seen[side.index()] {
                return Err(Error::InvalidGrid(format!("side {side:?} tagged twice")));
            }
            seen[side.index()] = true;
            self.tags[side.index()] = kind;
        }
        let periodic = |s: Side| self.tags[s.index()] == BoundaryKind::Periodic;
        if periodic(Side::Left) != periodic(Side::Right) || periodic(Side::Bottom) != periodic(Side::Top) {
            return Err(Error::InvalidGrid("periodic sides must be paired".into()));
        }
        self.classify_faces();
        Ok(self)
    }

    /// Replaces the cell mask.
    pub fn with_cells(mut self, cells: Vec<CellKind>) -> Result<Grid> {
        if cells.len() != self.nx * self.ny {
            return Err(Error::Layout(format!(
                "mask has {} entries, grid has {} cells",
                cells.len(),
                self.nx * self.ny
            )));
        }
        if !cells.contains(&CellKind::Fluid) {
            return Err(Error::InvalidGrid("mask contains no fluid cell".into()));
        }
        self.cells = cells;
        self.classify_faces();
        Ok(self)
    }

    pub fn tag(&self, side: Side) -> BoundaryKind {
        self.tags[side.index()]
    }

    pub fn tags(&self) -> [BoundaryKind; 4] {
        self.tags
    }

    pub fn periodic(&self, axis: Axis) -> bool {
        match axis {
            Axis::X => self.tags[Side::Left.index()] == BoundaryKind::Periodic,
            Axis::Y => self.tags[Side::Bottom.index()] == BoundaryKind::Periodic,
        }
    }

    pub fn m_max(&self) -> f64 {
        self.dx.max(self.dy)
    }

    pub fn m_min(&self) -> f64 {
        self.dx.min(self.dy)
    }

    pub fn cell_area(&self) -> f64 {
        self.dx * self.dy
    }

    pub fn extent(&self) -> [f64; 2] {
        [self.nx as f64 * self.dx, self.ny as f64 * self.dy]
    }

    pub fn n_cells(&self) -> usize {
        self.nx * self.ny
    }

    pub fn n_u(&self) -> usize {
        (self.nx + 1) * self.ny
    }

    pub fn n_v(&self) -> usize {
        self.nx * (self.ny + 1)
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn u_idx(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    #[inline]
    pub fn v_idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn cells(&self) -> &[CellKind] {
        &self.cells
    }

    #[inline]
    pub fn cell(&self, i: usize, j: usize) -> CellKind {
        self.cells[self.idx(i, j)]
    }

    #[inline]
    pub fn is_fluid(&self, i: usize, j: usize) -> bool {
        self.cells[self.idx(i, j)] == CellKind::Fluid
    }

    pub fn n_fluid(&self) -> usize {
        self.cells.iter().filter(|c| **c == CellKind::Fluid).count()
    }

    pub fn cell_center(&self, i: usize, j: usize) -> [f64; 2] {
        [
            self.origin[0] + (i as f64 + 0.5) * self.dx,
            self.origin[1] + (j as f64 + 0.5) * self.dy,
        ]
    }

    pub fn u_face_center(&self, i: usize, j: usize) -> [f64; 2] {
        [
            self.origin[0] + i as f64 * self.dx,
            self.origin[1] + (j as f64 + 0.5) * self.dy,
        ]
    }

    pub fn v_face_center(&self, i: usize, j: usize) -> [f64; 2] {
        [
            self.origin[0] + (i as f64 + 0.5) * self.dx,
            self.origin[1] + j as f64 * self.dy,
        ]
    }

    /// Cell adjacent to `(i, j)` shifted by `(di, dj)`, honouring periodic
    /// wrap. Returns `None` when the shift leaves a non-periodic domain.
    #[inline]
    pub fn offset(&self, i: usize, j: usize, di: isize, dj: isize) -> Option<(usize, usize)> {
        let wrap = |k: usize, d: isize, n: usize, periodic: bool| -> Option<usize> {
            let t = k as isize + d;
            if t >= 0 && (t as usize) < n {
                Some(t as usize)
            } else if periodic {
                Some(t.rem_euclid(n as isize) as usize)
            } else {
                None
            }
        };
        Some((
            wrap(i, di, self.nx, self.periodic(Axis::X))?,
            wrap(j, dj, self.ny, self.periodic(Axis::Y))?,
        ))
    }

    /// Fluid neighbour of a fluid cell, if any.
    #[inline]
    pub fn fluid_offset(&self, i: usize, j: usize, di: isize, dj: isize) -> Option<(usize, usize)> {
        self.offset(i, j, di, dj).filter(|&(a, b)| self.is_fluid(a, b))
    }

    /// The two sides of u-face `(i, j)`: (low-x, high-x).
    pub fn u_neighbors(&self, i: usize, j: usize) -> (Neighbor, Neighbor) {
        let low = if i > 0 {
            Neighbor::Cell(i - 1, j, self.cell(i - 1, j))
        } else if self.periodic(Axis::X) {
            Neighbor::Cell(self.nx - 1, j, self.cell(self.nx - 1, j))
        } else {
            Neighbor::Edge(Side::Left)
        };
        let high = if i < self.nx {
            Neighbor::Cell(i, j, self.cell(i, j))
        } else if self.periodic(Axis::X) {
            Neighbor::Cell(0, j, self.cell(0, j))
        } else {
            Neighbor::Edge(Side::Right)
        };
        (low, high)
    }

    /// The two sides of v-face `(i, j)`: (low-y, high-y).
    pub fn v_neighbors(&self, i: usize, j: usize) -> (Neighbor, Neighbor) {
        let low = if j > 0 {
            Neighbor::Cell(i, j - 1, self.cell(i, j - 1))
        } else if self.periodic(Axis::Y) {
            Neighbor::Cell(i, self.ny - 1, self.cell(i, self.ny - 1))
        } else {
            Neighbor::Edge(Side::Bottom)
        };
        let high = if j < self.ny {
            Neighbor::Cell(i, j, self.cell(i, j))
        } else if self.periodic(Axis::Y) {
            Neighbor::Cell(i, 0, self.cell(i, 0))
        } else {
            Neighbor::Edge(Side::Top)
        };
        (low, high)
    }

    fn classify(&self, low: Neighbor, high: Neighbor) -> Face {
        let fluid = |n: Neighbor| matches!(n, Neighbor::Cell(_, _, CellKind::Fluid));
        let other_type = |n: Neighbor| match n {
            Neighbor::Cell(_, _, CellKind::Solid) => FaceType::Wall,
            Neighbor::Cell(_, _, CellKind::Void) => FaceType::Open,
            Neighbor::Cell(_, _, CellKind::Fluid) => FaceType::Interior,
            Neighbor::Edge(side) => match self.tag(side) {
                BoundaryKind::Inlet => FaceType::Inlet,
                BoundaryKind::Open => FaceType::Open,
                BoundaryKind::NoSlip | BoundaryKind::MovingWall | BoundaryKind::Symmetry => FaceType::Wall,
                BoundaryKind::Periodic => unreachable!("periodic edges resolve to cells"),
            },
        };
        match (fluid(low), fluid(high)) {
            (true, true) => Face {
                ty: FaceType::Interior,
                fluid_low: false,
            },
            (false, false) => Face::INACTIVE,
            (true, false) => Face {
                ty: other_type(high),
                fluid_low: true,
            },
            (false, true) => Face {
                ty: other_type(low),
                fluid_low: false,
            },
        }
    }

    fn classify_faces(&mut self) {
        let mut u_faces = Vec::with_capacity(self.n_u());
        for j in 0..self.ny {
            for i in 0..=self.nx {
                let (lo, hi) = self.u_neighbors(i, j);
                u_faces.push(self.classify(lo, hi));
            }
        }
        let mut v_faces = Vec::with_capacity(self.n_v());
        for j in 0..=self.ny {
            for i in 0..self.nx {
                let (lo, hi) = self.v_neighbors(i, j);
                v_faces.push(self.classify(lo, hi));
            }
        }
        self.u_faces = u_faces;
        self.v_faces = v_faces;
    }

    #[inline]
    pub fn u_face(&self, i: usize, j: usize) -> Face {
        self.u_faces[self.u_idx(i, j)]
    }

    #[inline]
    pub fn v_face(&self, i: usize, j: usize) -> Face {
        self.v_faces[self.v_idx(i, j)]
    }

    /// True for the duplicated upper face of a periodic direction, which
    /// mirrors face index 0.
    #[inline]
    pub fn u_is_mirror(&self, i: usize) -> bool {
        i == self.nx && self.periodic(Axis::X)
    }

    #[inline]
    pub fn v_is_mirror(&self, j: usize) -> bool {
        j == self.ny && self.periodic(Axis::Y)
    }

    /// Whether any boundary face is traction-free (anchors the pressure level).
    pub fn has_open_face(&self) -> bool {
        self.u_faces.iter().chain(&self.v_faces).any(|f| f.ty == FaceType::Open)
    }
}

/// Discrete fields on the staggered layout.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSet {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub p: Vec<f64>,
    pub phi: Vec<f64>,
}

impl FieldSet {
    /// Zero velocity and pressure, `phi = 1` (air) everywhere.
    pub fn new(grid: &Grid) -> FieldSet {
        FieldSet {
            u: vec![0.0; grid.n_u()],
            v: vec![0.0; grid.n_v()],
            p: vec![0.0; grid.n_cells()],
            phi: vec![1.0; grid.n_cells()],
        }
    }

    pub fn check_layout(&self, grid: &Grid) -> Result<()> {
        let expect = [
            ("u", self.u.len(), grid.n_u()),
            ("v", self.v.len(), grid.n_v()),
            ("p", self.p.len(), grid.n_cells()),
            ("phi", self.phi.len(), grid.n_cells()),
        ];
        for (name, got, want) in expect {
            if got != want {
                return Err(Error::Layout(format!("{name} has {got} entries, expected {want}")));
            }
        }
        Ok(())
    }

    /// Layout check plus the hard `phi` finiteness requirement.
    pub fn validate(&self, grid: &Grid) -> Result<()> {
        self.check_layout(grid)?;
        if self.phi.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("phi"));
        }
        Ok(())
    }

    /// Largest face velocity magnitude over active faces.
    pub fn max_speed(&self, grid: &Grid) -> f64 {
        let mut m: f64 = 0.0;
        for j in 0..grid.ny {
            for i in 0..=grid.nx {
                if grid.u_face(i, j).is_active() {
                    m = m.max(self.u[grid.u_idx(i, j)].abs());
                }
            }
        }
        for j in 0..=grid.ny {
            for i in 0..grid.nx {
                if grid.v_face(i, j).is_active() {
                    m = m.max(self.v[grid.v_idx(i, j)].abs());
                }
            }
        }
        m
    }
}

/// Cell-centred velocity from face averages.
pub fn interpolate_to_cell_center(grid: &Grid, fields: &FieldSet) -> Result<(Vec<f64>, Vec<f64>)> {
    fields.check_layout(grid)?;
    let mut uc = vec![0.0; grid.n_cells()];
    let mut vc = vec![0.0; grid.n_cells()];
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let c = grid.idx(i, j);
            uc[c] = 0.5 * (fields.u[grid.u_idx(i, j)] + fields.u[grid.u_idx(i + 1, j)]);
            vc[c] = 0.5 * (fields.v[grid.v_idx(i, j)] + fields.v[grid.v_idx(i, j + 1)]);
        }
    }
    Ok((uc, vc))
}

/// Discrete divergence per cell (zero outside fluid cells).
pub fn divergence(grid: &Grid, u: &[f64], v: &[f64]) -> Vec<f64> {
    let mut div = vec![0.0; grid.n_cells()];
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            if !grid.is_fluid(i, j) {
                continue;
            }
            div[grid.idx(i, j)] = (u[grid.u_idx(i + 1, j)] - u[grid.u_idx(i, j)]) / grid.dx
                + (v[grid.v_idx(i, j + 1)] - v[grid.v_idx(i, j)]) / grid.dy;
        }
    }
    div
}
