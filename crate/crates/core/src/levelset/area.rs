//! Area of the ink indicator `{phi <= 0.5}`.

use serde::{Deserialize, Serialize};

use crate::grid::Grid;

/// Threshold separating ink from air.
pub const INDICATOR_LEVEL: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    /// Whole cells with `phi <= 0.5`.
    CellCount,
    /// Piecewise-bilinear reconstruction with marching-squares cell fractions.
    #[default]
    SubCell,
}

/// Fraction of the unit square where the edge-linear interpolant of the
/// corner values is `<= level`. Corners are ordered (0,0), (1,0), (1,1), (0,1).
pub fn square_fraction_below(corners: [f64; 4], level: f64) -> f64 {
    const P: [[f64; 2]; 4] = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
    let inside = corners.map(|c| c <= level);
    if inside.iter().all(|b| *b) {
        return 1.0;
    }
    if !inside.iter().any(|b| *b) {
        return 0.0;
    }
    let mut poly: Vec<[f64; 2]> = Vec::with_capacity(8);
    for k in 0..4 {
        let n = (k + 1) % 4;
        if inside[k] {
            poly.push(P[k]);
        }
        if inside[k] != inside[n] {
            let t = (level - corners[k]) / (corners[n] - corners[k]);
            poly.push([P[k][0] + t * (P[n][0] - P[k][0]), P[k][1] + t * (P[n][1] - P[k][1])]);
        }
    }
    let mut twice = 0.0;
    for k in 0..poly.len() {
        let a = poly[k];
        let b = poly[(k + 1) % poly.len()];
        twice += a[0] * b[1] - b[0] * a[1];
    }
    (0.5 * twice.abs()).clamp(0.0, 1.0)
}

/// Area of `{phi <= 0.5}` over the fluid cells of `grid`.
pub fn area_of_indicator(phi: &[f64], grid: &Grid, estimator: Estimator) -> f64 {
    match estimator {
        Estimator::CellCount => {
            let n = (0..grid.ny)
                .flat_map(|j| (0..grid.nx).map(move |i| (i, j)))
                .filter(|&(i, j)| grid.is_fluid(i, j) && phi[grid.idx(i, j)] <= INDICATOR_LEVEL)
                .count();
            n as f64 * grid.cell_area()
        }
        Estimator::SubCell => sub_cell_area(phi, grid),
    }
}

/// Each fluid cell is split into four quadrants. A quadrant spans a quarter
/// of the dual cell formed with the three neighbouring centres; its corner
/// values come from bilinear interpolation of those four centres, with
/// missing neighbours replaced by zero-gradient ghosts.
fn sub_cell_area(phi: &[f64], grid: &Grid) -> f64 {
    let quarter = 0.25 * grid.cell_area();
    let mut total = 0.0;
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            if !grid.is_fluid(i, j) {
                continue;
            }
            let a = phi[grid.idx(i, j)];
            for (sx, sy) in [(-1isize, -1isize), (1, -1), (1, 1), (-1, 1)] {
                let nb = |di: isize, dj: isize| grid.fluid_offset(i, j, di, dj).map(|(p, q)| phi[grid.idx(p, q)]);
                let bx = nb(sx, 0);
                let cy = nb(0, sy);
                let b = bx.unwrap_or(a);
                let c = cy.unwrap_or(a);
                let d = match nb(sx, sy) {
                    Some(d) => d,
                    None => match (bx, cy) {
                        (Some(_), Some(_)) => b + c - a,
                        (Some(_), None) => b,
                        (None, Some(_)) => c,
                        (None, None) => a,
                    },
                };
                let corners = [a, 0.5 * (a + b), 0.25 * (a + b + c + d), 0.5 * (a + c)];
                total += quarter * square_fraction_below(corners, INDICATOR_LEVEL);
            }
        }
    }
    total
}

/// Length of `{f <= level}` along a polyline sampled at increasing
/// `positions`, extended with constant values to `[lo, hi]`.
pub fn length_below(positions: &[f64], values: &[f64], level: f64, lo: f64, hi: f64) -> f64 {
    assert_eq!(positions.len(), values.len());
    if positions.is_empty() {
        return 0.0;
    }
    let n = positions.len();
    let mut len = 0.0;
    if values[0] <= level {
        len += positions[0] - lo;
    }
    if values[n - 1] <= level {
        len += hi - positions[n - 1];
    }
    for k in 0..n - 1 {
        len += segment_below(positions[k], positions[k + 1], values[k], values[k + 1], level);
    }
    len
}

#[inline]
fn segment_below(x0: f64, x1: f64, f0: f64, f1: f64, level: f64) -> f64 {
    let h = x1 - x0;
    match (f0 <= level, f1 <= level) {
        (true, true) => h,
        (false, false) => 0.0,
        (true, false) => h * (level - f0) / (f1 - f0),
        (false, true) => h * (f0 - level) / (f0 - f1),
    }
}
