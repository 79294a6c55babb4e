//! Single-step conservative level set: `phi = 0` in ink, `phi = 1` in air.
//!
//! Transport and embedded reinitialisation are advanced together,
//!
//! ```text
//! dphi/dt + div(v phi) = gamma div(eps grad phi - phi (1 - phi) grad phi / |grad phi|)
//! ```
//!
//! with every flux assembled on faces so the discrete integral of `phi`
//! changes only through boundary faces.

mod area;
mod transport;

pub use area::{area_of_indicator, length_below, square_fraction_below, Estimator, INDICATOR_LEVEL};
pub use transport::{advance_levelset, stable_dt, DtBound, StepLimit, TransportBoundary, TransportStats};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Interface half-thickness `epsilon` (m), reinitialisation rate `gamma`
/// (m/s) and the factor `epsilon_f = epsilon / epsilon_ref` when a reference
/// thickness is known.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelSetParams {
    pub epsilon: f64,
    pub gamma: f64,
    pub epsilon_f: Option<f64>,
}

impl LevelSetParams {
    pub fn new(epsilon: f64, gamma: f64) -> Result<LevelSetParams> {
        let params = LevelSetParams {
            epsilon,
            gamma,
            epsilon_f: None,
        };
        params.validate()?;
        Ok(params)
    }

    /// `epsilon = epsilon_f * epsilon_ref(grid)`.
    pub fn from_factor(grid: &Grid, epsilon_f: f64, gamma: f64) -> Result<LevelSetParams> {
        let mut params = LevelSetParams::new(epsilon_f * epsilon_ref(grid), gamma)?;
        params.epsilon_f = Some(epsilon_f);
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Config(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::Config(format!("gamma must be non-negative, got {}", self.gamma)));
        }
        Ok(())
    }

    /// Whether the boundedness criterion `gamma >= |v|max`, `epsilon >= dx/2`
    /// holds on `grid` for the given peak speed.
    pub fn meets_bound_criterion(&self, grid: &Grid, max_speed: f64) -> bool {
        self.gamma >= max_speed && self.epsilon >= 0.5 * grid.m_max()
    }
}

/// Ink (1) and air (2) material pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseProperties {
    pub rho1: f64,
    pub rho2: f64,
    pub mu1: f64,
    pub mu2: f64,
}

impl PhaseProperties {
    /// Air side uses `rho = 1 kg/m3`, `mu = 1 Pa s`.
    pub fn with_default_air(rho_ink: f64, mu_ink: f64) -> PhaseProperties {
        PhaseProperties {
            rho1: rho_ink,
            rho2: 1.0,
            mu1: mu_ink,
            mu2: 1.0,
        }
    }

    pub fn single_phase(rho: f64, mu: f64) -> PhaseProperties {
        PhaseProperties {
            rho1: rho,
            rho2: rho,
            mu1: mu,
            mu2: mu,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, x) in [
            ("rho1", self.rho1),
            ("rho2", self.rho2),
            ("mu1", self.mu1),
            ("mu2", self.mu2),
        ] {
            if !(x > 0.0 && x.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {x}")));
            }
        }
        Ok(())
    }
}

/// Recommended interface thickness from the largest and smallest element
/// sizes around the interface.
pub fn epsilon_ref_for_sizes(m_max: f64, m_min: f64) -> f64 {
    if m_max > 1.3 * m_min {
        m_max
    } else {
        2.0 * m_max
    }
}

pub fn epsilon_ref(grid: &Grid) -> f64 {
    epsilon_ref_for_sizes(grid.m_max(), grid.m_min())
}

/// Equilibrium profile `1 / (1 + exp(-d / epsilon))` for a signed distance
/// `d` that is negative inside the ink.
#[inline]
pub fn equilibrium_profile(distance: f64, epsilon: f64) -> f64 {
    let z = -distance / epsilon;
    if z > 0.0 {
        let e = (-z).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + z.exp())
    }
}

/// Maps a per-cell signed distance to the equilibrium `phi` profile.
pub fn init_levelset(grid: &Grid, signed_distance: &[f64], params: &LevelSetParams) -> Result<Vec<f64>> {
    params.validate()?;
    if signed_distance.len() != grid.n_cells() {
        return Err(Error::Layout(format!(
            "signed distance has {} entries, grid has {} cells",
            signed_distance.len(),
            grid.n_cells()
        )));
    }
    if signed_distance.iter().any(|d| d.is_nan()) {
        return Err(Error::NonFinite("signed distance"));
    }
    Ok(signed_distance
        .iter()
        .map(|&d| equilibrium_profile(d, params.epsilon))
        .collect())
}

/// Identity Heaviside on the clamped marker: `phi` is already a regularised
/// step in this formulation.
#[inline]
pub fn smooth_heaviside(phi: f64) -> f64 {
    phi.clamp(0.0, 1.0)
}

/// Density and viscosity fields from the marker.
pub fn blend_properties(phi: &[f64], props: &PhaseProperties) -> (Vec<f64>, Vec<f64>) {
    let mut rho = Vec::with_capacity(phi.len());
    let mut mu = Vec::with_capacity(phi.len());
    for &p in phi {
        let h = smooth_heaviside(p);
        rho.push(props.rho1 + (props.rho2 - props.rho1) * h);
        mu.push(props.mu1 + (props.mu2 - props.mu1) * h);
    }
    (rho, mu)
}

/// Regularisation floor for `|grad phi|`.
#[inline]
pub(crate) fn gradient_floor(grid: &Grid) -> f64 {
    1e-6 / grid.m_min()
}

/// Central difference of `phi` at a fluid cell along (di, dj), treating
/// missing neighbours as zero-gradient ghosts.
#[inline]
pub(crate) fn central_diff(grid: &Grid, phi: &[f64], i: usize, j: usize, di: isize, dj: isize) -> f64 {
    let here = phi[grid.idx(i, j)];
    let plus = grid
        .fluid_offset(i, j, di, dj)
        .map_or(here, |(a, b)| phi[grid.idx(a, b)]);
    let minus = grid
        .fluid_offset(i, j, -di, -dj)
        .map_or(here, |(a, b)| phi[grid.idx(a, b)]);
    let h = if di != 0 { grid.dx } else { grid.dy };
    (plus - minus) / (2.0 * h)
}

/// Cell-centred unit normal `grad phi / (|grad phi| + delta)`, pointing from
/// ink into air. Non-fluid cells get a zero normal.
pub fn interface_normal(grid: &Grid, phi: &[f64]) -> Vec<[f64; 2]> {
    let delta = gradient_floor(grid);
    let mut n = vec![[0.0, 0.0]; grid.n_cells()];
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            if !grid.is_fluid(i, j) {
                continue;
            }
            let gx = central_diff(grid, phi, i, j, 1, 0);
            let gy = central_diff(grid, phi, i, j, 0, 1);
            let mag = gx.hypot(gy);
            n[grid.idx(i, j)] = [gx / (mag + delta), gy / (mag + delta)];
        }
    }
    n
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn epsilon_ref_uniform_branch() {
        let g = Grid::new(10, 10, 0.02e-3, 0.02e-3).unwrap();
        assert_relative_eq!(epsilon_ref(&g), 0.04e-3, max_relative = 1e-15);
    }

    #[test]
    fn epsilon_ref_graded_branch() {
        // A graded mesh whose largest element is 0.043 mm.
        let eps_ref = epsilon_ref_for_sizes(0.043, 0.01);
        assert_eq!(eps_ref, 0.043);
        assert_relative_eq!(0.6 * eps_ref, 0.0258, max_relative = 1e-12);
        assert_relative_eq!(0.4 * epsilon_ref_for_sizes(0.069, 0.01), 0.0276, max_relative = 1e-12);
    }

    #[test]
    fn profile_values() {
        assert_eq!(equilibrium_profile(0.0, 1e-5), 0.5);
        assert_relative_eq!(
            equilibrium_profile(1e-5, 1e-5),
            0.731_058_578_630_004_9,
            max_relative = 1e-14
        );
        assert!(equilibrium_profile(-1.0, 1e-5) < 1e-300);
        assert_eq!(equilibrium_profile(1.0, 1e-5), 1.0);
    }

    #[test]
    fn profile_slope_at_interface() {
        let eps = 0.3;
        let h = 1e-6;
        let slope = (equilibrium_profile(h, eps) - equilibrium_profile(-h, eps)) / (2.0 * h);
        assert_relative_eq!(slope, 1.0 / (4.0 * eps), max_relative = 1e-8);
    }

    #[test]
    fn init_rejects_bad_epsilon() {
        let g = Grid::new(2, 2, 1.0, 1.0).unwrap();
        let d = vec![0.0; 4];
        let p = LevelSetParams {
            epsilon: 0.0,
            gamma: 1.0,
            epsilon_f: None,
        };
        assert!(init_levelset(&g, &d, &p).is_err());
        let p = LevelSetParams::new(0.5, 1.0).unwrap();
        let phi = init_levelset(&g, &d, &p).unwrap();
        assert!(phi.iter().all(|x| *x == 0.5));
    }

    #[test]
    fn heaviside_endpoints_and_clamp() {
        assert_eq!(smooth_heaviside(0.0), 0.0);
        assert_eq!(smooth_heaviside(1.0), 1.0);
        assert_eq!(smooth_heaviside(0.5), 0.5);
        assert_eq!(smooth_heaviside(-0.2), 0.0);
        assert_eq!(smooth_heaviside(1.3), 1.0);
    }

    #[test]
    fn blend_table_values() {
        let props = PhaseProperties::with_default_air(1000.0, 1000.0);
        let (rho, mu) = blend_properties(&[0.0, 1.0, 0.5], &props);
        assert_eq!((rho[0], mu[0]), (1000.0, 1000.0));
        assert_eq!((rho[1], mu[1]), (1.0, 1.0));
        assert_eq!(rho[2], 500.5);
    }

    #[test]
    fn normal_of_uniform_field_is_zero() {
        let g = Grid::new(8, 8, 0.1, 0.1).unwrap();
        let n = interface_normal(&g, &vec![0.3; 64]);
        assert!(n.iter().all(|v| v[0] == 0.0 && v[1] == 0.0));
    }

    #[test]
    fn normal_of_monotone_profile_points_along_x() {
        let g = Grid::new(32, 4, 1.0 / 32.0, 1.0 / 32.0).unwrap();
        let mut phi = vec![0.0; g.n_cells()];
        for j in 0..g.ny {
            for i in 0..g.nx {
                phi[g.idx(i, j)] = equilibrium_profile(g.cell_center(i, j)[0] - 0.5, 2.0 / 32.0);
            }
        }
        let n = interface_normal(&g, &phi);
        for j in 0..g.ny {
            for i in 8..24 {
                let v = n[g.idx(i, j)];
                assert_relative_eq!(v[0], 1.0, max_relative = 1e-4);
                assert_eq!(v[1], 0.0);
            }
        }
    }

    #[test]
    fn param_validation() {
        assert!(LevelSetParams::new(1e-5, -1.0).is_err());
        assert!(LevelSetParams::new(-1e-5, 1.0).is_err());
        assert!(LevelSetParams::new(1e-5, 0.0).is_ok());
        let props = PhaseProperties {
            rho1: 0.0,
            rho2: 1.0,
            mu1: 1.0,
            mu2: 1.0,
        };
        assert!(props.validate().is_err());
    }
}
