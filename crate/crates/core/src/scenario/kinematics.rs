//! Prescribed velocity fields for pure transport cases. Face velocities are
//! differences of a streamfunction sampled at grid nodes, so every fluid
//! cell is divergence-free to round-off.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::grid::{FieldSet, Grid};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Kinematics {
    Still,
    Uniform {
        velocity: [f64; 2],
    },
    /// Solid-body rotation at `omega` rad/s about `center`.
    Rotation {
        center: [f64; 2],
        omega: f64,
    },
    /// Time-reversing deformation on the unit-scaled box `extent`, reversing
    /// after half of `period`.
    SingleVortex {
        extent: [f64; 2],
        period: f64,
    },
}

impl Kinematics {
    pub fn is_time_dependent(&self) -> bool {
        matches!(self, Kinematics::SingleVortex { .. })
    }

    fn streamfunction(&self, x: f64, y: f64, t: f64) -> f64 {
        match *self {
            Kinematics::Still => 0.0,
            Kinematics::Uniform { velocity: [a, b] } => a * y - b * x,
            Kinematics::Rotation { center, omega } => {
                let (dx, dy) = (x - center[0], y - center[1]);
                -0.5 * omega * (dx * dx + dy * dy)
            }
            Kinematics::SingleVortex { extent, period } => {
                let (sx, sy) = ((PI * x / extent[0]).sin(), (PI * y / extent[1]).sin());
                extent[0] * sx * sx * sy * sy / PI * (PI * t / period).cos()
            }
        }
    }

    /// Writes face velocities at time `t`. Faces on a periodic seam use the
    /// uniform part only, which is the only periodic-compatible case.
    pub fn apply(&self, grid: &Grid, fields: &mut FieldSet, t: f64) {
        if let Kinematics::Uniform { velocity } = *self {
            fields.u.iter_mut().for_each(|u| *u = velocity[0]);
            fields.v.iter_mut().for_each(|v| *v = velocity[1]);
            return;
        }
        let node = |i: usize, j: usize| {
            let x = grid.origin[0] + i as f64 * grid.dx;
            let y = grid.origin[1] + j as f64 * grid.dy;
            self.streamfunction(x, y, t)
        };
        for j in 0..grid.ny {
            for i in 0..=grid.nx {
                fields.u[grid.u_idx(i, j)] = (node(i, j + 1) - node(i, j)) / grid.dy;
            }
        }
        for j in 0..=grid.ny {
            for i in 0..grid.nx {
                fields.v[grid.v_idx(i, j)] = -(node(i + 1, j) - node(i, j)) / grid.dx;
            }
        }
    }

    /// Largest speed the field can reach on `grid` over its lifetime.
    pub fn peak_speed(&self, grid: &Grid) -> f64 {
        let mut f = FieldSet::new(grid);
        self.apply(grid, &mut f, 0.0);
        f.max_speed(grid)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::divergence;

    #[test]
    fn discrete_divergence_vanishes() {
        let g = Grid::new(20, 16, 0.05, 1.0 / 16.0).unwrap();
        for k in [
            Kinematics::Rotation {
                center: [0.5, 0.5],
                omega: 2.0,
            },
            Kinematics::SingleVortex {
                extent: [1.0, 1.0],
                period: 8.0,
            },
            Kinematics::Uniform { velocity: [1.0, -2.0] },
        ] {
            let mut f = FieldSet::new(&g);
            k.apply(&g, &mut f, 0.3);
            let div = divergence(&g, &f.u, &f.v);
            assert!(div.iter().all(|d| d.abs() < 1e-11), "{k:?}");
        }
    }

    #[test]
    fn rotation_speed_grows_with_radius() {
        let g = Grid::new(10, 10, 0.1, 0.1).unwrap();
        let k = Kinematics::Rotation {
            center: [0.5, 0.5],
            omega: 1.0,
        };
        let mut f = FieldSet::new(&g);
        k.apply(&g, &mut f, 0.0);
        // u = -omega (y - yc) at the face centre (x = 0.5, y = 0.95).
        assert!((f.u[g.u_idx(5, 9)] + 0.45).abs() < 1e-12);
        assert!(k.peak_speed(&g) <= 0.5f64.hypot(0.5) + 1e-12);
    }
}
