use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{divergence, Axis, FieldSet, Grid};

use super::advection::advection_rates;
use super::assembly::{control_volume, face_density, Assembler, DofMap};
use super::linalg::{pcg, Csr, DirectSolver};
use super::{apply_boundaries, max_pressure, sync_mirrors, BoundarySpec, FlowConfig, FlowMode};

/// Per-step solver report.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct FlowStats {
    pub viscous_iterations: usize,
    pub pressure_iterations: usize,
    /// Largest `|div v|` over fluid cells after the step (1/s).
    pub max_divergence: f64,
    pub max_pressure: f64,
}

/// Flow stepper bound to one grid and boundary set.
pub struct FlowSolver {
    grid: Grid,
    spec: BoundarySpec,
    config: FlowConfig,
    dofs: DofMap,
    direct: DirectSolver,
}

impl FlowSolver {
    pub fn new(grid: &Grid, spec: BoundarySpec, config: FlowConfig) -> Result<FlowSolver> {
        config.validate()?;
        spec.check_grid(grid)?;
        Ok(FlowSolver {
            grid: grid.clone(),
            spec,
            config,
            dofs: DofMap::new(grid)?,
            direct: DirectSolver::default(),
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn config(&self) -> &FlowConfig {
        &self.config
    }

    pub fn spec(&self) -> &BoundarySpec {
        &self.spec
    }

    /// Advances velocity and pressure by `dt` with the driven boundaries at
    /// `ramp` of their full strength.
    pub fn advance(&mut self, fields: &mut FieldSet, rho: &[f64], mu: &[f64], ramp: f64, dt: f64) -> Result<FlowStats> {
        let g = &self.grid;
        fields.check_layout(g)?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Config(format!("time step must be positive, got {dt}")));
        }
        for (name, field) in [("rho", rho), ("mu", mu)] {
            if field.len() != g.n_cells() {
                return Err(Error::Layout(format!(
                    "{name} has {} entries, grid has {} cells",
                    field.len(),
                    g.n_cells()
                )));
            }
            if g.cells()
                .iter()
                .zip(field)
                .any(|(k, x)| *k == crate::grid::CellKind::Fluid && !(*x > 0.0 && x.is_finite()))
            {
                return Err(Error::Config(format!("{name} must be positive in every fluid cell")));
            }
        }
        apply_boundaries(g, fields, &self.spec, ramp)?;
        let mut stats = match self.config.mode {
            FlowMode::Stokes => self.stokes(fields, rho, mu, ramp)?,
            FlowMode::NavierStokes => self.navier_stokes(fields, rho, mu, ramp, dt)?,
        };
        let g = &self.grid;
        sync_mirrors(g, fields);
        let div = divergence(g, &fields.u, &fields.v);
        stats.max_divergence = div.iter().fold(0.0, |m, d| m.max(d.abs()));
        stats.max_pressure = max_pressure(g, fields);
        if fields
            .u
            .iter()
            .chain(&fields.v)
            .chain(&fields.p)
            .any(|x| !x.is_finite())
        {
            return Err(Error::NonFinite("flow fields"));
        }
        Ok(stats)
    }

    fn body_force(&self, rho: &[f64]) -> Vec<f64> {
        let gravity = self.config.gravity;
        self.dofs
            .faces
            .iter()
            .map(|f| {
                let gk = if f.axis == Axis::X { gravity[0] } else { gravity[1] };
                face_density(f, rho) * gk * control_volume(&self.grid, f)
            })
            .collect()
    }

    fn scatter(&self, fields: &mut FieldSet, vel: &[f64], p: &[f64]) {
        for (f, x) in self.dofs.faces.iter().zip(vel) {
            match f.axis {
                Axis::X => fields.u[f.face] = *x,
                Axis::Y => fields.v[f.face] = *x,
            }
        }
        for (c, slot) in self.dofs.p.iter().enumerate() {
            fields.p[c] = slot.map_or(0.0, |k| p[k]);
        }
    }

    fn gather(&self, fields: &FieldSet) -> Vec<f64> {
        self.dofs
            .faces
            .iter()
            .map(|f| match f.axis {
                Axis::X => fields.u[f.face],
                Axis::Y => fields.v[f.face],
            })
            .collect()
    }

    /// Quasi-steady Stokes: `[K G; G^T 0] [v; p] = [f; d]` solved directly.
    /// Momentum rows are scaled by the largest viscosity and the pressure by
    /// `mu_ref / h` so both blocks have unit-order entries.
    fn stokes(&mut self, fields: &mut FieldSet, rho: &[f64], mu: &[f64], ramp: f64) -> Result<FlowStats> {
        let g = &self.grid;
        let asm = Assembler {
            grid: g,
            dofs: &self.dofs,
            spec: &self.spec,
            ramp,
            u: &fields.u,
            v: &fields.v,
        };
        let (visc, visc_rhs) = asm.viscous(mu);
        let (grad, div_fixed) = asm.gradient();
        let body = self.body_force(rho);
        let nv = self.dofs.n_vel();
        let n = nv + self.dofs.n_p;
        let mu_ref = g
            .cells()
            .iter()
            .zip(mu)
            .filter(|(k, _)| **k == crate::grid::CellKind::Fluid)
            .fold(0.0f64, |m, (_, x)| m.max(*x));
        let h = g.m_min();
        let scale = mu_ref / h;
        let mut entries: Vec<(usize, usize, f64)> = visc.into_iter().map(|(r, c, v)| (r, c, v / mu_ref)).collect();
        for (k, row) in grad.iter().enumerate() {
            for &(p, a) in row.iter().flatten() {
                entries.push((k, nv + p, a / h));
                entries.push((nv + p, k, a / h));
            }
        }
        let mut rhs = vec![0.0; n];
        for k in 0..nv {
            rhs[k] = (visc_rhs[k] + body[k]) / mu_ref;
        }
        for (p, d) in div_fixed.iter().enumerate() {
            rhs[nv + p] = d / h;
        }
        let x = self.direct.solve(n, &entries, &rhs)?;
        let p: Vec<f64> = x[nv..].iter().map(|q| q * scale).collect();
        self.scatter(fields, &x[..nv], &p);
        Ok(FlowStats::default())
    }

    fn navier_stokes(
        &mut self,
        fields: &mut FieldSet,
        rho: &[f64],
        mu: &[f64],
        ramp: f64,
        dt: f64,
    ) -> Result<FlowStats> {
        let g = &self.grid;
        let cfg = self.config;
        let asm = Assembler {
            grid: g,
            dofs: &self.dofs,
            spec: &self.spec,
            ramp,
            u: &fields.u,
            v: &fields.v,
        };
        let nv = self.dofs.n_vel();
        let x0 = self.gather(fields);
        let rates = advection_rates(&asm);
        let mass: Vec<f64> = self
            .dofs
            .faces
            .iter()
            .map(|f| face_density(f, rho) * control_volume(g, f) / dt)
            .collect();

        // Implicit viscous step (M + K) v* = M (v - dt adv) + fixed-value terms.
        let (mut visc, visc_rhs) = asm.viscous(mu);
        visc.extend(mass.iter().enumerate().map(|(k, m)| (k, k, *m)));
        let a = Csr::from_triplets(nv, &visc);
        let b: Vec<f64> = (0..nv)
            .map(|k| mass[k] * (x0[k] - dt * rates[k]) + visc_rhs[k])
            .collect();
        let mut vel = x0.clone();
        let visc_report = pcg(&a, &b, &mut vel, cfg.viscous_tol, cfg.max_iters, "viscous")?;

        for (f, x) in self.dofs.faces.iter().zip(vel.iter_mut()) {
            *x += dt
                * if f.axis == Axis::X {
                    cfg.gravity[0]
                } else {
                    cfg.gravity[1]
                };
        }

        // Projection: (G^T M^-1 G) p = G^T v* - d, then v = v* - M^-1 G p.
        let (grad, div_fixed) = asm.gradient();
        let np = self.dofs.n_p;
        let mut lap = Vec::with_capacity(4 * nv);
        let mut rhs = vec![0.0; np];
        for (k, row) in grad.iter().enumerate() {
            for &(pa, ca) in row.iter().flatten() {
                rhs[pa] += ca * vel[k];
                for &(pb, cb) in row.iter().flatten() {
                    lap.push((pa, pb, ca * cb / mass[k]));
                }
            }
        }
        for (r, d) in rhs.iter_mut().zip(&div_fixed) {
            *r -= d;
        }
        let mut p: Vec<f64> = (0..g.n_cells())
            .filter_map(|c| self.dofs.p[c].map(|_| fields.p[c]))
            .collect();
        let mut pressure_iterations = 0;
        if np > 0 {
            let l = Csr::from_triplets(np, &lap);
            pressure_iterations = pcg(&l, &rhs, &mut p, cfg.pressure_tol, cfg.max_iters, "pressure")?.iterations;
        }
        for (k, row) in grad.iter().enumerate() {
            let gp: f64 = row.iter().flatten().map(|&(q, c)| c * p[q]).sum();
            vel[k] -= gp / mass[k];
        }
        self.scatter(fields, &vel, &p);
        Ok(FlowStats {
            viscous_iterations: visc_report.iterations,
            pressure_iterations,
            ..FlowStats::default()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::SideCondition;
    use crate::grid::Side;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn boxed(n: usize, top: SideCondition, periodic: bool) -> (Grid, BoundarySpec) {
        let (side, bottom) = if periodic {
            (SideCondition::Periodic, SideCondition::Periodic)
        } else {
            (SideCondition::NoSlip, SideCondition::NoSlip)
        };
        let top = if periodic { SideCondition::Periodic } else { top };
        let spec = BoundarySpec::new(side, side, bottom, top).unwrap();
        let g = Grid::new(n, n, 1.0 / n as f64, 1.0 / n as f64)
            .unwrap()
            .with_tags(spec.tags())
            .unwrap();
        (g, spec)
    }

    fn config(mode: FlowMode, gravity: [f64; 2]) -> FlowConfig {
        FlowConfig {
            mode,
            gravity,
            pressure_tol: 1e-12,
            viscous_tol: 1e-12,
            max_iters: 5000,
        }
    }

    #[test]
    fn rest_state_is_unchanged() {
        for mode in [FlowMode::Stokes, FlowMode::NavierStokes] {
            let (g, spec) = boxed(8, SideCondition::NoSlip, false);
            let mut s = FlowSolver::new(&g, spec, config(mode, [0.0, 0.0])).unwrap();
            let mut f = FieldSet::new(&g);
            let ones = vec![1.0; g.n_cells()];
            s.advance(&mut f, &ones, &ones, 1.0, 0.01).unwrap();
            assert!(f.u.iter().chain(&f.v).chain(&f.p).all(|x| x.abs() < 1e-14));
        }
    }

    #[test]
    fn hydrostatic_column() {
        for mode in [FlowMode::Stokes, FlowMode::NavierStokes] {
            let (g, spec) = boxed(10, SideCondition::Open, false);
            let mut s = FlowSolver::new(&g, spec, config(mode, [0.0, -9.81])).unwrap();
            let mut f = FieldSet::new(&g);
            let rho = vec![1000.0; g.n_cells()];
            let mu = vec![1.0; g.n_cells()];
            s.advance(&mut f, &rho, &mu, 1.0, 1e-3).unwrap();
            for j in 0..g.ny {
                for i in 0..g.nx {
                    let depth = 1.0 - g.cell_center(i, j)[1];
                    assert_relative_eq!(f.p[g.idx(i, j)], 1000.0 * 9.81 * depth, max_relative = 1e-8);
                }
            }
            assert!(f.max_speed(&g) < 1e-10, "{mode:?}: {}", f.max_speed(&g));
        }
    }

    #[test]
    fn uniform_periodic_flow_is_a_fixed_point() {
        let (g, spec) = boxed(8, SideCondition::NoSlip, true);
        let mut s = FlowSolver::new(&g, spec, config(FlowMode::NavierStokes, [0.0, 0.0])).unwrap();
        let mut f = FieldSet::new(&g);
        f.u.iter_mut().for_each(|x| *x = 0.3);
        f.v.iter_mut().for_each(|x| *x = -0.2);
        let before = f.clone();
        let ones = vec![1.0; g.n_cells()];
        for _ in 0..5 {
            s.advance(&mut f, &ones, &ones, 1.0, 0.01).unwrap();
        }
        for (a, b) in f.u.iter().zip(&before.u).chain(f.v.iter().zip(&before.v)) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    /// Divergence-free periodic field from the streamfunction sin(2 pi x) sin(2 pi y).
    fn vortex(g: &Grid, f: &mut FieldSet, base: [f64; 2]) {
        let psi = |x: f64, y: f64| (2.0 * PI * x).sin() * (2.0 * PI * y).sin() / (2.0 * PI);
        for j in 0..g.ny {
            for i in 0..=g.nx {
                let y0 = j as f64 * g.dy;
                let x = i as f64 * g.dx;
                f.u[g.u_idx(i, j)] = base[0] + (psi(x, y0 + g.dy) - psi(x, y0)) / g.dy;
            }
        }
        for j in 0..=g.ny {
            for i in 0..g.nx {
                let x0 = i as f64 * g.dx;
                let y = j as f64 * g.dy;
                f.v[g.v_idx(i, j)] = base[1] - (psi(x0 + g.dx, y) - psi(x0, y)) / g.dx;
            }
        }
    }

    #[test]
    fn periodic_momentum_is_conserved_and_divergence_free() {
        let (g, spec) = boxed(16, SideCondition::NoSlip, true);
        let mut s = FlowSolver::new(&g, spec, config(FlowMode::NavierStokes, [0.0, 0.0])).unwrap();
        let mut f = FieldSet::new(&g);
        vortex(&g, &mut f, [0.5, 0.25]);
        let momentum = |f: &FieldSet| {
            let mx: f64 = (0..g.ny)
                .flat_map(|j| (0..g.nx).map(move |i| (i, j)))
                .map(|(i, j)| f.u[g.u_idx(i, j)])
                .sum();
            let my: f64 = (0..g.ny)
                .flat_map(|j| (0..g.nx).map(move |i| (i, j)))
                .map(|(i, j)| f.v[g.v_idx(i, j)])
                .sum();
            [mx, my]
        };
        let m0 = momentum(&f);
        let ones = vec![1.0; g.n_cells()];
        for _ in 0..10 {
            let st = s.advance(&mut f, &ones, &vec![0.01; g.n_cells()], 1.0, 0.005).unwrap();
            let limit = 10.0 * 1e-12 * f.max_speed(&g) / g.dx;
            assert!(
                st.max_divergence <= limit.max(1e-12),
                "div {} > {limit}",
                st.max_divergence
            );
        }
        let m1 = momentum(&f);
        for k in 0..2 {
            assert!(((m1[k] - m0[k]) / m0[k]).abs() < 1e-10, "{k}: {} -> {}", m0[k], m1[k]);
        }
    }

    #[test]
    fn moving_lid_drives_flow_along_the_lid() {
        let spec = BoundarySpec::new(
            SideCondition::NoSlip,
            SideCondition::NoSlip,
            SideCondition::NoSlip,
            SideCondition::MovingWall { speed: 1.0 },
        )
        .unwrap();
        let g = Grid::new(12, 12, 1.0 / 12.0, 1.0 / 12.0)
            .unwrap()
            .with_tags(spec.tags())
            .unwrap();
        let mut s = FlowSolver::new(&g, spec, config(FlowMode::Stokes, [0.0, 0.0])).unwrap();
        let mut f = FieldSet::new(&g);
        let ones = vec![1.0; g.n_cells()];
        let st = s.advance(&mut f, &ones, &ones, 1.0, 1.0).unwrap();
        assert!(f.u[g.u_idx(6, 11)] > 0.3);
        assert!(f.u[g.u_idx(6, 2)] < 0.0);
        assert!(st.max_divergence < 1e-9);
        assert_eq!(g.tag(Side::Top), crate::grid::BoundaryKind::MovingWall);
    }
}
