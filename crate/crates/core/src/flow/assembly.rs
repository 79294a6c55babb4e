//! Unknown numbering and operator assembly.
//!
//! The viscous operator is the Hessian of the discrete dissipation
//!
//! ```text
//! E = sum_cells 2 mu (e_xx^2 + e_yy^2) |cell| + sum_nodes mu gamma_xy^2 |node|
//! ```
//!
//! so it is symmetric positive semi-definite by construction, and the full
//! `div(2 mu D)` coupling between components comes out of the shear term.

use crate::error::{Error, Result};
use crate::grid::{Axis, CellKind, FaceType, Grid, Side};

use super::BoundarySpec;

/// Up to two `(pressure dof, coefficient)` entries of one velocity row.
pub type GradientRow = [Option<(usize, f64)>; 2];

/// A face value: either an unknown or a value fixed by the boundary data.
#[derive(Debug, Clone, Copy)]
pub(super) enum Slot {
    Dof(usize),
    Fixed(f64),
}

/// A velocity unknown and the fluid cells on its two sides.
#[derive(Debug, Clone, Copy)]
pub(super) struct DofFace {
    pub axis: Axis,
    pub i: usize,
    pub j: usize,
    /// Index of the face within `u` or `v`.
    pub face: usize,
    pub cells: [Option<usize>; 2],
}

impl DofFace {
    pub fn n_fluid(&self) -> usize {
        self.cells.iter().flatten().count()
    }
}

pub(super) struct DofMap {
    pub u: Vec<Option<usize>>,
    pub v: Vec<Option<usize>>,
    pub p: Vec<Option<usize>>,
    pub faces: Vec<DofFace>,
    pub n_p: usize,
}

impl DofMap {
    pub fn new(grid: &Grid) -> Result<DofMap> {
        if grid.n_fluid() == 0 {
            return Err(Error::InvalidGrid("no fluid cells".into()));
        }
        let fluid_cell = |n| match n {
            crate::grid::Neighbor::Cell(a, b, CellKind::Fluid) => Some(grid.idx(a, b)),
            _ => None,
        };
        let mut faces = Vec::new();
        let mut u = vec![None; grid.n_u()];
        for j in 0..grid.ny {
            for i in 0..grid.nx + 1 {
                if grid.u_is_mirror(i) {
                    continue;
                }
                if matches!(grid.u_face(i, j).ty, FaceType::Interior | FaceType::Open) {
                    let (lo, hi) = grid.u_neighbors(i, j);
                    u[grid.u_idx(i, j)] = Some(faces.len());
                    faces.push(DofFace {
                        axis: Axis::X,
                        i,
                        j,
                        face: grid.u_idx(i, j),
                        cells: [fluid_cell(lo), fluid_cell(hi)],
                    });
                }
            }
            if grid.u_is_mirror(grid.nx) {
                u[grid.u_idx(grid.nx, j)] = u[grid.u_idx(0, j)];
            }
        }
        let mut v = vec![None; grid.n_v()];
        for j in 0..grid.ny + 1 {
            if grid.v_is_mirror(j) {
                for i in 0..grid.nx {
                    v[grid.v_idx(i, j)] = v[grid.v_idx(i, 0)];
                }
                continue;
            }
            for i in 0..grid.nx {
                if matches!(grid.v_face(i, j).ty, FaceType::Interior | FaceType::Open) {
                    let (lo, hi) = grid.v_neighbors(i, j);
                    v[grid.v_idx(i, j)] = Some(faces.len());
                    faces.push(DofFace {
                        axis: Axis::Y,
                        i,
                        j,
                        face: grid.v_idx(i, j),
                        cells: [fluid_cell(lo), fluid_cell(hi)],
                    });
                }
            }
        }
        // Without a traction-free face the pressure level is fixed by
        // pinning the first fluid cell to zero.
        let pin = !grid.has_open_face();
        let mut p = vec![None; grid.n_cells()];
        let mut n_p = 0;
        let mut pinned = false;
        for (c, kind) in grid.cells().iter().enumerate() {
            if *kind != CellKind::Fluid {
                continue;
            }
            if pin && !pinned {
                pinned = true;
                continue;
            }
            p[c] = Some(n_p);
            n_p += 1;
        }
        Ok(DofMap { u, v, p, faces, n_p })
    }

    pub fn n_vel(&self) -> usize {
        self.faces.len()
    }
}

/// Sparse linear form `sum c_k x_k + constant`.
#[derive(Debug, Clone, Copy, Default)]
struct Form {
    terms: [(usize, f64); 4],
    len: usize,
    constant: f64,
}

impl Form {
    fn add(&mut self, slot: Slot, c: f64) {
        match slot {
            Slot::Fixed(val) => self.constant += c * val,
            Slot::Dof(k) => {
                if let Some(t) = self.terms[..self.len].iter_mut().find(|t| t.0 == k) {
                    t.1 += c;
                } else {
                    self.terms[self.len] = (k, c);
                    self.len += 1;
                }
            }
        }
    }
}

/// Tangential data on the far side of a node when a face is missing.
#[derive(Debug, Clone, Copy)]
enum Ghost {
    /// Velocity held at the given tangential speed.
    Wall(f64),
    /// Zero normal derivative.
    Free,
}

pub(super) struct Assembler<'a> {
    pub grid: &'a Grid,
    pub dofs: &'a DofMap,
    pub spec: &'a BoundarySpec,
    pub ramp: f64,
    pub u: &'a [f64],
    pub v: &'a [f64],
}

fn wrap(k: isize, n: usize, periodic: bool) -> Option<usize> {
    if k >= 0 && (k as usize) < n {
        Some(k as usize)
    } else if periodic {
        Some(k.rem_euclid(n as isize) as usize)
    } else {
        None
    }
}

impl Assembler<'_> {
    pub fn u_slot(&self, idx: usize) -> Slot {
        self.dofs.u[idx].map_or(Slot::Fixed(self.u[idx]), Slot::Dof)
    }

    pub fn v_slot(&self, idx: usize) -> Slot {
        self.dofs.v[idx].map_or(Slot::Fixed(self.v[idx]), Slot::Dof)
    }

    /// u-face on column `i`, row `j` (wrapped in y), if active.
    fn u_at(&self, i: usize, j: isize) -> Option<Slot> {
        let g = self.grid;
        let j = wrap(j, g.ny, g.periodic(Axis::Y))?;
        g.u_face(i, j).is_active().then(|| self.u_slot(g.u_idx(i, j)))
    }

    /// v-face on column `i` (wrapped in x), row `j`, if active.
    fn v_at(&self, i: isize, j: usize) -> Option<Slot> {
        let g = self.grid;
        let i = wrap(i, g.nx, g.periodic(Axis::X))?;
        g.v_face(i, j).is_active().then(|| self.v_slot(g.v_idx(i, j)))
    }

    fn edge_ghost(&self, side: Side) -> Ghost {
        use crate::grid::BoundaryKind::*;
        match self.grid.tag(side) {
            NoSlip | Inlet => Ghost::Wall(0.0),
            MovingWall => Ghost::Wall(self.spec.wall_speed(side, self.ramp)),
            Open | Symmetry => Ghost::Free,
            Periodic => unreachable!("periodic sides always have a neighbour"),
        }
    }

    fn cell_ghost(&self, cells: [Option<(usize, usize)>; 2]) -> Ghost {
        if cells
            .iter()
            .flatten()
            .any(|&(a, b)| self.grid.cell(a, b) == CellKind::Solid)
        {
            Ghost::Wall(0.0)
        } else {
            Ghost::Free
        }
    }

    /// What replaces a missing u-face on row `j` next to node column `i`.
    pub(super) fn u_ghost(&self, i: usize, j: isize, edge: Side) -> Option<f64> {
        let g = self.grid;
        let ghost = match wrap(j, g.ny, g.periodic(Axis::Y)) {
            None => self.edge_ghost(edge),
            Some(row) => {
                let left = wrap(i as isize - 1, g.nx, g.periodic(Axis::X)).map(|a| (a, row));
                let right = wrap(i as isize, g.nx, g.periodic(Axis::X)).map(|a| (a, row));
                self.cell_ghost([left, right])
            }
        };
        match ghost {
            Ghost::Wall(w) => Some(w),
            Ghost::Free => None,
        }
    }

    /// What replaces a missing v-face on column `i` next to node row `j`.
    pub(super) fn v_ghost(&self, i: isize, j: usize, edge: Side) -> Option<f64> {
        let g = self.grid;
        let ghost = match wrap(i, g.nx, g.periodic(Axis::X)) {
            None => self.edge_ghost(edge),
            Some(col) => {
                let below = wrap(j as isize - 1, g.ny, g.periodic(Axis::Y)).map(|b| (col, b));
                let above = wrap(j as isize, g.ny, g.periodic(Axis::Y)).map(|b| (col, b));
                self.cell_ghost([below, above])
            }
        };
        match ghost {
            Ghost::Wall(w) => Some(w),
            Ghost::Free => None,
        }
    }

    /// One-sided or central derivative between two face values `h` apart;
    /// a missing face is either a wall ghost (`Some(speed)`) or free.
    fn derivative(
        form: &mut Form,
        low: Option<Slot>,
        high: Option<Slot>,
        h: f64,
        ghost_low: impl Fn() -> Option<f64>,
        ghost_high: impl Fn() -> Option<f64>,
    ) {
        match (low, high) {
            (Some(a), Some(b)) => {
                form.add(b, 1.0 / h);
                form.add(a, -1.0 / h);
            }
            (Some(a), None) => {
                if let Some(w) = ghost_high() {
                    form.add(a, -2.0 / h);
                    form.constant += 2.0 * w / h;
                }
            }
            (None, Some(b)) => {
                if let Some(w) = ghost_low() {
                    form.add(b, 2.0 / h);
                    form.constant -= 2.0 * w / h;
                }
            }
            (None, None) => {}
        }
    }

    /// Viscous matrix entries and the right-hand side from fixed values.
    pub fn viscous(&self, mu: &[f64]) -> (Vec<(usize, usize, f64)>, Vec<f64>) {
        let g = self.grid;
        let mut entries = Vec::with_capacity(12 * self.dofs.n_vel());
        let mut rhs = vec![0.0; self.dofs.n_vel()];
        let mut add = |form: &Form, w: f64| {
            for a in 0..form.len {
                let (r, cr) = form.terms[a];
                for b in 0..form.len {
                    let (c, cc) = form.terms[b];
                    entries.push((r, c, w * cr * cc));
                }
                rhs[r] -= w * cr * form.constant;
            }
        };
        let area = g.cell_area();
        for j in 0..g.ny {
            for i in 0..g.nx {
                if !g.is_fluid(i, j) {
                    continue;
                }
                let w = 2.0 * mu[g.idx(i, j)] * area;
                let mut exx = Form::default();
                exx.add(self.u_slot(g.u_idx(i + 1, j)), 1.0 / g.dx);
                exx.add(self.u_slot(g.u_idx(i, j)), -1.0 / g.dx);
                add(&exx, w);
                let mut eyy = Form::default();
                eyy.add(self.v_slot(g.v_idx(i, j + 1)), 1.0 / g.dy);
                eyy.add(self.v_slot(g.v_idx(i, j)), -1.0 / g.dy);
                add(&eyy, w);
            }
        }
        let ni = if g.periodic(Axis::X) { g.nx } else { g.nx + 1 };
        let nj = if g.periodic(Axis::Y) { g.ny } else { g.ny + 1 };
        for j in 0..nj {
            for i in 0..ni {
                let (mut n, mut mu_sum) = (0usize, 0.0);
                for (di, dj) in [(-1, -1), (0, -1), (-1, 0), (0, 0)] {
                    let (a, b) = (i as isize + di, j as isize + dj);
                    if let (Some(a), Some(b)) = (wrap(a, g.nx, g.periodic(Axis::X)), wrap(b, g.ny, g.periodic(Axis::Y)))
                    {
                        if g.is_fluid(a, b) {
                            n += 1;
                            mu_sum += mu[g.idx(a, b)];
                        }
                    }
                }
                if n == 0 {
                    continue;
                }
                let (ii, jj) = (i as isize, j as isize);
                let mut shear = Form::default();
                Self::derivative(
                    &mut shear,
                    self.u_at(i, jj - 1),
                    self.u_at(i, jj),
                    g.dy,
                    || self.u_ghost(i, jj - 1, Side::Bottom),
                    || self.u_ghost(i, jj, Side::Top),
                );
                Self::derivative(
                    &mut shear,
                    self.v_at(ii - 1, j),
                    self.v_at(ii, j),
                    g.dx,
                    || self.v_ghost(ii - 1, j, Side::Left),
                    || self.v_ghost(ii, j, Side::Right),
                );
                add(&shear, mu_sum * 0.25 * area);
            }
        }
        (entries, rhs)
    }

    /// Pressure-gradient entries `(velocity dof, pressure dof, coefficient)`
    /// and the divergence contributed by fixed faces, per pressure unknown.
    pub fn gradient(&self) -> (Vec<GradientRow>, Vec<f64>) {
        let g = self.grid;
        let mut rows = vec![[None, None]; self.dofs.n_vel()];
        let mut div_fixed = vec![0.0; self.dofs.n_p];
        let mut visit = |slot: Slot, lo: Option<usize>, hi: Option<usize>, area: f64| {
            let plo = lo.and_then(|c| self.dofs.p[c]);
            let phi = hi.and_then(|c| self.dofs.p[c]);
            match slot {
                Slot::Dof(k) => rows[k] = [plo.map(|p| (p, -area)), phi.map(|p| (p, area))],
                Slot::Fixed(val) => {
                    if let Some(p) = plo {
                        div_fixed[p] += area * val;
                    }
                    if let Some(p) = phi {
                        div_fixed[p] -= area * val;
                    }
                }
            }
        };
        let fluid = |n| match n {
            crate::grid::Neighbor::Cell(a, b, CellKind::Fluid) => Some(g.idx(a, b)),
            _ => None,
        };
        for j in 0..g.ny {
            for i in 0..=g.nx {
                if g.u_is_mirror(i) || !g.u_face(i, j).is_active() {
                    continue;
                }
                let (lo, hi) = g.u_neighbors(i, j);
                visit(self.u_slot(g.u_idx(i, j)), fluid(lo), fluid(hi), g.dy);
            }
        }
        for j in 0..=g.ny {
            if g.v_is_mirror(j) {
                continue;
            }
            for i in 0..g.nx {
                if !g.v_face(i, j).is_active() {
                    continue;
                }
                let (lo, hi) = g.v_neighbors(i, j);
                visit(self.v_slot(g.v_idx(i, j)), fluid(lo), fluid(hi), g.dx);
            }
        }
        (rows, div_fixed)
    }
}

/// Control-volume size of a velocity unknown: half a cell per fluid side.
pub(super) fn control_volume(grid: &Grid, face: &DofFace) -> f64 {
    0.5 * face.n_fluid() as f64 * grid.cell_area()
}

/// Face density: mean over the fluid cells on either side.
pub(super) fn face_density(face: &DofFace, rho: &[f64]) -> f64 {
    let (sum, n) = face
        .cells
        .iter()
        .flatten()
        .fold((0.0, 0usize), |(s, n), &c| (s + rho[c], n + 1));
    sum / n as f64
}
