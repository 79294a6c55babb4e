//! Explicit flux-form transport of the conservative level set.
//!
//! Face fluxes (positive along +x / +y):
//! - advective: `v · phi_f`, `phi_f` from a van Leer limited upwind reconstruction;
//! - diffusive: `-gamma eps (phi_R - phi_L) / h`;
//! - compressive: `gamma · (psi_L + psi_R)/2 · n_f` with `psi = phi (1 - phi)`.
//!
//! Time integration is the two-stage SSP Runge-Kutta scheme.

use crate::error::{Error, Result};
use crate::grid::{Axis, FaceType, FieldSet, Grid};

use super::{central_diff, gradient_floor, LevelSetParams};

/// Marker values carried into the domain by inflowing boundary faces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransportBoundary {
    pub inlet_phi: f64,
    pub ambient_phi: f64,
}

impl Default for TransportBoundary {
    fn default() -> Self {
        TransportBoundary {
            inlet_phi: 0.0,
            ambient_phi: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransportStats {
    /// `sum(phi dA)` over fluid cells after the step.
    pub integral: f64,
    pub min: f64,
    pub max: f64,
    /// Time-integrated net outflow of `phi` through boundary faces.
    pub boundary_outflow: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DtBound {
    Advective,
    Diffusive,
    Unbounded,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepLimit {
    pub dt: f64,
    pub bound: DtBound,
}

impl StepLimit {
    pub fn clamped(&self, dt_max: f64) -> f64 {
        self.dt.min(dt_max)
    }
}

/// Largest stable explicit step:
/// `min(cfl_adv dx / (|v|max + gamma), cfl_diff dx^2 / (2 dim gamma eps))`
/// with `dx = m_min`.
pub fn stable_dt(
    fields: &FieldSet,
    params: &LevelSetParams,
    grid: &Grid,
    cfl_adv: f64,
    cfl_diff: f64,
) -> Result<StepLimit> {
    for (name, c) in [("cfl_adv", cfl_adv), ("cfl_diff", cfl_diff)] {
        if !(c > 0.0 && c <= 1.0) {
            return Err(Error::Config(format!("{name} must lie in (0, 1], got {c}")));
        }
    }
    if grid.n_fluid() == 0 {
        return Err(Error::InvalidGrid("no fluid cells".into()));
    }
    let h = grid.m_min();
    let speed = fields.max_speed(grid) + params.gamma;
    let adv = if speed > 0.0 {
        cfl_adv * h / speed
    } else {
        f64::INFINITY
    };
    let diffusivity = params.gamma * params.epsilon;
    let diff = if diffusivity > 0.0 {
        cfl_diff * h * h / (2.0 * 2.0 * diffusivity)
    } else {
        f64::INFINITY
    };
    let (dt, bound) = if adv.is_infinite() && diff.is_infinite() {
        (f64::INFINITY, DtBound::Unbounded)
    } else if adv <= diff {
        (adv, DtBound::Advective)
    } else {
        (diff, DtBound::Diffusive)
    };
    Ok(StepLimit { dt, bound })
}

#[inline]
fn van_leer(a: f64, b: f64) -> f64 {
    if a * b > 0.0 {
        2.0 * a * b / (a + b)
    } else {
        0.0
    }
}

/// Scratch storage for face fluxes.
struct Fluxes {
    fu: Vec<f64>,
    fv: Vec<f64>,
}

struct Operator<'a> {
    grid: &'a Grid,
    u: &'a [f64],
    v: &'a [f64],
    params: &'a LevelSetParams,
    bc: TransportBoundary,
    delta: f64,
}

impl Operator<'_> {
    /// Face-normal flux for a face between `lo` and `hi` cells along `axis`.
    fn interior_flux(&self, phi: &[f64], axis: Axis, lo: (usize, usize), hi: (usize, usize), vel: f64) -> f64 {
        let g = self.grid;
        let (di, dj, h) = match axis {
            Axis::X => (1isize, 0isize, g.dx),
            Axis::Y => (0, 1, g.dy),
        };
        let pl = phi[g.idx(lo.0, lo.1)];
        let pr = phi[g.idx(hi.0, hi.1)];

        let face_phi = if vel >= 0.0 {
            match g.fluid_offset(lo.0, lo.1, -di, -dj) {
                Some((a, b)) => pl + 0.5 * van_leer(pl - phi[g.idx(a, b)], pr - pl),
                None => pl,
            }
        } else {
            match g.fluid_offset(hi.0, hi.1, di, dj) {
                Some((a, b)) => pr - 0.5 * van_leer(phi[g.idx(a, b)] - pr, pr - pl),
                None => pr,
            }
        };
        let mut flux = vel * face_phi;

        let gamma = self.params.gamma;
        if gamma > 0.0 {
            let gn = (pr - pl) / h;
            let gt = 0.5 * (central_diff(g, phi, lo.0, lo.1, dj, di) + central_diff(g, phi, hi.0, hi.1, dj, di));
            let nf = gn / (gn.hypot(gt) + self.delta);
            let psi = 0.5 * (pl * (1.0 - pl) + pr * (1.0 - pr));
            flux += gamma * (psi * nf - self.params.epsilon * gn);
        }
        flux
    }

    /// Advective flux through an inlet/open face; `fluid_phi` is the value in
    /// the adjacent fluid cell.
    #[inline]
    fn boundary_flux(&self, vel: f64, fluid_phi: f64, fluid_low: bool, outside_phi: f64) -> f64 {
        let inflow = if fluid_low { vel < 0.0 } else { vel > 0.0 };
        vel * if inflow { outside_phi } else { fluid_phi }
    }

    fn fluxes(&self, phi: &[f64], out: &mut Fluxes) {
        let g = self.grid;
        for j in 0..g.ny {
            for i in 0..=g.nx {
                let k = g.u_idx(i, j);
                if g.u_is_mirror(i) {
                    out.fu[k] = out.fu[g.u_idx(0, j)];
                    continue;
                }
                let face = g.u_face(i, j);
                let vel = self.u[k];
                out.fu[k] = match face.ty {
                    FaceType::Inactive | FaceType::Wall => 0.0,
                    FaceType::Interior => {
                        let lo = g.offset(i, j, -1, 0).expect("interior face has a low cell");
                        self.interior_flux(phi, Axis::X, lo, (i % g.nx, j), vel)
                    }
                    FaceType::Inlet | FaceType::Open => {
                        let c = if face.fluid_low { (i - 1, j) } else { (i, j) };
                        let outside = if face.ty == FaceType::Inlet {
                            self.bc.inlet_phi
                        } else {
                            self.bc.ambient_phi
                        };
                        self.boundary_flux(vel, phi[g.idx(c.0, c.1)], face.fluid_low, outside)
                    }
                };
            }
        }
        for j in 0..=g.ny {
            for i in 0..g.nx {
                let k = g.v_idx(i, j);
                if g.v_is_mirror(j) {
                    out.fv[k] = out.fv[g.v_idx(i, 0)];
                    continue;
                }
                let face = g.v_face(i, j);
                let vel = self.v[k];
                out.fv[k] = match face.ty {
                    FaceType::Inactive | FaceType::Wall => 0.0,
                    FaceType::Interior => {
                        let lo = g.offset(i, j, 0, -1).expect("interior face has a low cell");
                        self.interior_flux(phi, Axis::Y, lo, (i, j % g.ny), vel)
                    }
                    FaceType::Inlet | FaceType::Open => {
                        let c = if face.fluid_low { (i, j - 1) } else { (i, j) };
                        let outside = if face.ty == FaceType::Inlet {
                            self.bc.inlet_phi
                        } else {
                            self.bc.ambient_phi
                        };
                        self.boundary_flux(vel, phi[g.idx(c.0, c.1)], face.fluid_low, outside)
                    }
                };
            }
        }
    }

    /// Net outflow rate (per unit depth) through boundary faces.
    fn boundary_rate(&self, f: &Fluxes) -> f64 {
        let g = self.grid;
        let mut rate = 0.0;
        if !g.periodic(Axis::X) {
            for j in 0..g.ny {
                rate += (f.fu[g.u_idx(g.nx, j)] - f.fu[g.u_idx(0, j)]) * g.dy;
            }
        }
        if !g.periodic(Axis::Y) {
            for i in 0..g.nx {
                rate += (f.fv[g.v_idx(i, g.ny)] - f.fv[g.v_idx(i, 0)]) * g.dx;
            }
        }
        // Faces against void cells inside the domain.
        for j in 0..g.ny {
            for i in 1..g.nx {
                let face = g.u_face(i, j);
                if face.ty == FaceType::Open || face.ty == FaceType::Inlet {
                    let s = if face.fluid_low { 1.0 } else { -1.0 };
                    rate += s * f.fu[g.u_idx(i, j)] * g.dy;
                }
            }
        }
        for j in 1..g.ny {
            for i in 0..g.nx {
                let face = g.v_face(i, j);
                if face.ty == FaceType::Open || face.ty == FaceType::Inlet {
                    let s = if face.fluid_low { 1.0 } else { -1.0 };
                    rate += s * f.fv[g.v_idx(i, j)] * g.dx;
                }
            }
        }
        rate
    }

    /// `out = base_w * base + w * (phi - dt div F(phi))` on fluid cells.
    fn stage(&self, phi: &[f64], dt: f64, f: &Fluxes, out: &mut [f64], blend: Option<(&[f64], f64)>) {
        let g = self.grid;
        for j in 0..g.ny {
            for i in 0..g.nx {
                let c = g.idx(i, j);
                if !g.is_fluid(i, j) {
                    out[c] = phi[c];
                    continue;
                }
                let div = (f.fu[g.u_idx(i + 1, j)] - f.fu[g.u_idx(i, j)]) / g.dx
                    + (f.fv[g.v_idx(i, j + 1)] - f.fv[g.v_idx(i, j)]) / g.dy;
                let next = phi[c] - dt * div;
                out[c] = match blend {
                    Some((base, w)) => (1.0 - w) * base[c] + w * next,
                    None => next,
                };
            }
        }
    }
}

/// Advances `fields.phi` by one SSP-RK2 step of size `dt` using the face
/// velocities in `fields`.
pub fn advance_levelset(
    grid: &Grid,
    fields: &mut FieldSet,
    params: &LevelSetParams,
    bc: TransportBoundary,
    dt: f64,
) -> Result<TransportStats> {
    fields.validate(grid)?;
    params.validate()?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Config(format!("time step must be positive, got {dt}")));
    }
    let op = Operator {
        grid,
        u: &fields.u,
        v: &fields.v,
        params,
        bc,
        delta: gradient_floor(grid),
    };
    let mut flux = Fluxes {
        fu: vec![0.0; grid.n_u()],
        fv: vec![0.0; grid.n_v()],
    };
    let phi0 = fields.phi.clone();
    let mut stage1 = vec![0.0; phi0.len()];
    op.fluxes(&phi0, &mut flux);
    let rate0 = op.boundary_rate(&flux);
    op.stage(&phi0, dt, &flux, &mut stage1, None);
    op.fluxes(&stage1, &mut flux);
    let rate1 = op.boundary_rate(&flux);
    let mut next = vec![0.0; phi0.len()];
    op.stage(&stage1, dt, &flux, &mut next, Some((&phi0, 0.5)));

    let (mut min, mut max, mut integral) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            if grid.is_fluid(i, j) {
                let x = next[grid.idx(i, j)];
                if !x.is_finite() {
                    return Err(Error::NonFinite("phi"));
                }
                min = min.min(x);
                max = max.max(x);
                integral += x;
            }
        }
    }
    if min < -0.1 || max > 1.1 {
        return Err(Error::LevelSetUnstable { min, max });
    }
    fields.phi = next;
    Ok(TransportStats {
        integral: integral * grid.cell_area(),
        min,
        max,
        boundary_outflow: 0.5 * dt * (rate0 + rate1),
    })
}
