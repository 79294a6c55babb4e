//! Verification quantities: reference and measured strand sections, the
//! percent conservation error, extents and the global ink audit.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{CellKind, Grid};
use crate::levelset::{area_of_indicator, length_below, smooth_heaviside, Estimator, INDICATOR_LEVEL};

/// One measurement row. Field order is the CSV column order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub time: f64,
    #[serde(rename = "A_s")]
    pub a_s: f64,
    #[serde(rename = "A_f")]
    pub a_f: f64,
    #[serde(rename = "delta_A_pct")]
    pub delta_a_pct: f64,
    #[serde(rename = "P_max")]
    pub p_max: f64,
    pub ink_volume: f64,
    #[serde(rename = "W")]
    pub w: Option<f64>,
    #[serde(rename = "H")]
    pub h: Option<f64>,
    #[serde(rename = "WH_ratio")]
    pub wh_ratio: Option<f64>,
}

pub const CSV_COLUMNS: [&str; 9] = [
    "time",
    "A_s",
    "A_f",
    "delta_A_pct",
    "P_max",
    "ink_volume",
    "W",
    "H",
    "WH_ratio",
];

/// Ideal section from the steady mass balance `rate = A v_x`.
pub fn reference_area(rate: f64, bed_speed: f64) -> Result<f64> {
    if !(bed_speed > 0.0 && bed_speed.is_finite()) {
        return Err(Error::Config(format!("nozzle speed must be positive, got {bed_speed}")));
    }
    Ok(rate / bed_speed)
}

/// `|A_s - A_f| / A_f * 100`.
pub fn conservation_error(a_s: f64, a_f: f64) -> f64 {
    (a_s - a_f).abs() / a_f * 100.0
}

pub fn aspect_ratio(width: f64, height: f64) -> Result<f64> {
    if height.is_nan() || height <= 0.0 {
        return Err(Error::Config(format!(
            "aspect ratio needs a positive height, got {height}"
        )));
    }
    Ok(width / height)
}

/// Measured strand section.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Section {
    /// Thickness (m) in the planar model, area (m2) for a slice.
    pub size: f64,
    /// Lateral extent of the 0.5 contour; absent in the planar model.
    pub width: Option<f64>,
    /// Highest point of the 0.5 contour above the bed.
    pub height: f64,
}

/// Ink thickness and top height along one grid column.
fn column_profile(phi: &[f64], grid: &Grid, i: usize) -> (f64, f64) {
    let mut pos = Vec::new();
    let mut val = Vec::new();
    for j in 0..grid.ny {
        if !grid.is_fluid(i, j) {
            if pos.is_empty() {
                continue;
            }
            break;
        }
        pos.push(grid.cell_center(i, j)[1]);
        val.push(phi[grid.idx(i, j)]);
    }
    if pos.is_empty() {
        return (0.0, 0.0);
    }
    let lo = pos[0] - 0.5 * grid.dy;
    let hi = pos[pos.len() - 1] + 0.5 * grid.dy;
    let thickness = length_below(&pos, &val, INDICATOR_LEVEL, lo, hi);
    let mut top = lo;
    if val[val.len() - 1] <= INDICATOR_LEVEL {
        top = hi;
    } else {
        for k in (0..pos.len() - 1).rev() {
            if val[k] <= INDICATOR_LEVEL {
                let t = (INDICATOR_LEVEL - val[k]) / (val[k + 1] - val[k]);
                top = pos[k] + t * (pos[k + 1] - pos[k]);
                break;
            }
        }
    }
    (thickness, top - grid.origin[1])
}

/// Planar strand section at `station_x`: the length of `{phi <= 0.5}` on
/// the vertical line through the station and its top height, both linearly
/// interpolated between the neighbouring cell columns.
pub fn strand_cross_section(phi: &[f64], grid: &Grid, station_x: f64) -> Result<Section> {
    let [x0, _] = grid.origin;
    let [lx, _] = grid.extent();
    if !(station_x >= x0 && station_x <= x0 + lx) {
        return Err(Error::Config(format!("station {station_x} m lies outside the domain")));
    }
    let s = ((station_x - x0) / grid.dx - 0.5).clamp(0.0, (grid.nx - 1) as f64);
    let i0 = (s.floor() as usize).min(grid.nx - 1);
    let i1 = (i0 + 1).min(grid.nx - 1);
    let t = s - i0 as f64;
    let (h0, top0) = column_profile(phi, grid, i0);
    let (h1, top1) = column_profile(phi, grid, i1);
    Ok(Section {
        size: (1.0 - t) * h0 + t * h1,
        width: None,
        height: (1.0 - t) * top0 + t * top1,
    })
}

/// Section of a strand sampled on a transverse slice of `nw x nh` cells
/// (lateral index fastest, bed at row 0). With `symmetric`, the slice holds
/// half the strand with the symmetry plane at lateral index 0; the width is
/// doubled but the area is that of the slice.
pub fn slice_cross_section(phi: &[f64], nw: usize, nh: usize, cell: [f64; 2], symmetric: bool) -> Result<Section> {
    if phi.len() != nw * nh {
        return Err(Error::Layout(format!(
            "slice has {} values, expected {}",
            phi.len(),
            nw * nh
        )));
    }
    let grid = Grid::new(nw, nh, cell[0], cell[1])?;
    let area = area_of_indicator(phi, &grid, Estimator::SubCell);
    let mut width: f64 = 0.0;
    for j in 0..nh {
        let pos: Vec<f64> = (0..nw).map(|i| grid.cell_center(i, j)[0]).collect();
        let val: Vec<f64> = (0..nw).map(|i| phi[grid.idx(i, j)]).collect();
        width = width.max(outermost_crossing(&pos, &val, nw as f64 * cell[0]));
    }
    let mut height: f64 = 0.0;
    for i in 0..nw {
        let (_, top) = column_profile(phi, &grid, i);
        height = height.max(top);
    }
    Ok(Section {
        size: area,
        width: Some(if symmetric { 2.0 * width } else { width }),
        height,
    })
}

/// Largest coordinate still inside `{f <= 0.5}`, with constant extension
/// to `[0, end]`.
fn outermost_crossing(pos: &[f64], val: &[f64], end: f64) -> f64 {
    let n = pos.len();
    if val[n - 1] <= INDICATOR_LEVEL {
        return end;
    }
    for k in (0..n - 1).rev() {
        if val[k] <= INDICATOR_LEVEL {
            let t = (INDICATOR_LEVEL - val[k]) / (val[k + 1] - val[k]);
            return pos[k] + t * (pos[k + 1] - pos[k]);
        }
    }
    0.0
}

/// `sum (1 - H(phi)) dA` over fluid cells.
pub fn global_ink_volume(phi: &[f64], grid: &Grid) -> f64 {
    grid.cells()
        .iter()
        .zip(phi)
        .filter(|(k, _)| **k == CellKind::Fluid)
        .map(|(_, p)| 1.0 - smooth_heaviside(*p))
        .sum::<f64>()
        * grid.cell_area()
}

/// Flags a steady signal once its spread over the trailing `window` falls
/// below `tolerance` relative to the latest value.
#[derive(Debug, Clone)]
pub struct SteadyStateDetector {
    window: f64,
    tolerance: f64,
    samples: VecDeque<(f64, f64)>,
}

impl SteadyStateDetector {
    pub fn new(window: f64, tolerance: f64) -> SteadyStateDetector {
        SteadyStateDetector {
            window,
            tolerance,
            samples: VecDeque::new(),
        }
    }

    /// Default sampling rule: under 0.1 % change across 0.05 s.
    pub fn standard() -> SteadyStateDetector {
        SteadyStateDetector::new(0.05, 1e-3)
    }

    pub fn push(&mut self, time: f64, value: f64) -> bool {
        self.samples.push_back((time, value));
        while self.samples.len() > 2 && time - self.samples[1].0 >= self.window {
            self.samples.pop_front();
        }
        let first = self.samples[0].0;
        if time - first < self.window || value == 0.0 {
            return false;
        }
        let (lo, hi) = self
            .samples
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
                (lo.min(s.1), hi.max(s.1))
            });
        (hi - lo) / value.abs() < self.tolerance
    }
}
