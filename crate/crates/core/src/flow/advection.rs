//! Explicit flux-form momentum advection `-div(v v)` on the staggered
//! control volumes. Interior fluxes are shared by neighbouring volumes, so
//! momentum only changes through boundary faces. Momentum entering through
//! an open face is dropped.

use crate::grid::{Axis, Side};

use super::assembly::{Assembler, DofFace};

fn wrap(k: isize, n: usize, periodic: bool) -> Option<usize> {
    if k >= 0 && (k as usize) < n {
        Some(k as usize)
    } else if periodic {
        Some(k.rem_euclid(n as isize) as usize)
    } else {
        None
    }
}

/// Rate of change of each velocity unknown due to advection.
pub(super) fn advection_rates(asm: &Assembler<'_>) -> Vec<f64> {
    asm.dofs
        .faces
        .iter()
        .map(|f| match f.axis {
            Axis::X => u_rate(asm, f),
            Axis::Y => v_rate(asm, f),
        })
        .collect()
}

fn u_rate(asm: &Assembler<'_>, f: &DofFace) -> f64 {
    let g = asm.grid;
    let (u, v) = (asm.u, asm.v);
    let px = g.periodic(Axis::X);
    let py = g.periodic(Axis::Y);
    let (i, j) = (f.i, f.j);
    let uf = u[f.face];
    let lo = wrap(i as isize - 1, g.nx, px);
    let hi = wrap(i as isize, g.nx, px);

    // Normal fluxes at the cell centres on either side, or at the face
    // itself on an open boundary.
    let east = match f.cells[1] {
        Some(_) => {
            let c = hi.unwrap();
            let uc = 0.5 * (u[g.u_idx(c, j)] + u[g.u_idx(c + 1, j)]);
            uc * uc
        }
        None if uf > 0.0 => uf * uf,
        None => 0.0,
    };
    let west = match f.cells[0] {
        Some(_) => {
            let c = lo.unwrap();
            let uc = 0.5 * (u[g.u_idx(c, j)] + u[g.u_idx(c + 1, j)]);
            uc * uc
        }
        None if uf < 0.0 => uf * uf,
        None => 0.0,
    };

    // Transverse fluxes at the nodes above and below.
    let carrier = |row: usize| {
        let a = lo.map_or(0.0, |c| v[g.v_idx(c, row)]);
        let b = hi.map_or(0.0, |c| v[g.v_idx(c, row)]);
        0.5 * (a + b)
    };
    let neighbour = |dj: isize, edge: Side| -> Option<f64> {
        match wrap(j as isize + dj, g.ny, py) {
            Some(r) if g.u_face(i, r).is_active() => Some(0.5 * (uf + u[g.u_idx(i, r)])),
            _ => asm.u_ghost(i, j as isize + dj, edge),
        }
    };
    let width = 0.5 * f.n_fluid() as f64 * g.dx;
    let vn = carrier(j + 1);
    let north = match neighbour(1, Side::Top) {
        Some(un) => vn * un,
        None if vn > 0.0 => vn * uf,
        None => 0.0,
    };
    let vs = carrier(j);
    let south = match neighbour(-1, Side::Bottom) {
        Some(us) => vs * us,
        None if vs < 0.0 => vs * uf,
        None => 0.0,
    };
    -((east - west) * g.dy + (north - south) * width) / (width * g.dy)
}

fn v_rate(asm: &Assembler<'_>, f: &DofFace) -> f64 {
    let g = asm.grid;
    let (u, v) = (asm.u, asm.v);
    let px = g.periodic(Axis::X);
    let py = g.periodic(Axis::Y);
    let (i, j) = (f.i, f.j);
    let vf = v[f.face];
    let lo = wrap(j as isize - 1, g.ny, py);
    let hi = wrap(j as isize, g.ny, py);

    let north = match f.cells[1] {
        Some(_) => {
            let c = hi.unwrap();
            let vc = 0.5 * (v[g.v_idx(i, c)] + v[g.v_idx(i, c + 1)]);
            vc * vc
        }
        None if vf > 0.0 => vf * vf,
        None => 0.0,
    };
    let south = match f.cells[0] {
        Some(_) => {
            let c = lo.unwrap();
            let vc = 0.5 * (v[g.v_idx(i, c)] + v[g.v_idx(i, c + 1)]);
            vc * vc
        }
        None if vf < 0.0 => vf * vf,
        None => 0.0,
    };

    let carrier = |col: usize| {
        let a = lo.map_or(0.0, |r| u[g.u_idx(col, r)]);
        let b = hi.map_or(0.0, |r| u[g.u_idx(col, r)]);
        0.5 * (a + b)
    };
    let neighbour = |di: isize, edge: Side| -> Option<f64> {
        match wrap(i as isize + di, g.nx, px) {
            Some(c) if g.v_face(c, j).is_active() => Some(0.5 * (vf + v[g.v_idx(c, j)])),
            _ => asm.v_ghost(i as isize + di, j, edge),
        }
    };
    let height = 0.5 * f.n_fluid() as f64 * g.dy;
    let ue = carrier(i + 1);
    let east = match neighbour(1, Side::Right) {
        Some(ve) => ue * ve,
        None if ue > 0.0 => ue * vf,
        None => 0.0,
    };
    let uw = carrier(i);
    let west = match neighbour(-1, Side::Left) {
        Some(vw) => uw * vw,
        None if uw < 0.0 => uw * vf,
        None => 0.0,
    };
    -((north - south) * g.dx + (east - west) * height) / (height * g.dx)
}
