//! Weighted `L^2` inequality with weight `exp(2 phi / h)` on a rectangle,
//! evaluated on manufactured data.
//!
//! ```text
//! h |e^{phi/h} u|^2 + h^3 |e^{phi/h} grad u|^2
//!     <= C ( h^4 |e^{phi/h} f|^2 + h |e^{phi/h} u|^2_{dU \ gamma}
//!            + h^3 |e^{phi/h} d_nu u|^2_{dU \ gamma} ),   f = Laplacian u
//! ```

use serde::{Deserialize, Serialize};

use super::poly::dot;
use super::subellipticity::verify_subellipticity;
use super::weight::WeightFunction;
use crate::error::{validation, Error, Result};
use crate::mesh::Grid2D;

/// Side of the rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Left, Side::Right, Side::Bottom, Side::Top];

    pub fn outward_normal(self) -> [f64; 2] {
        match self {
            Side::Left => [-1.0, 0.0],
            Side::Right => [1.0, 0.0],
            Side::Bottom => [0.0, -1.0],
            Side::Top => [0.0, 1.0],
        }
    }

    /// Distance from `x` to the line carrying this side.
    pub fn distance(self, grid: &Grid2D, x: [f64; 2]) -> f64 {
        match self {
            Side::Left => x[0] - grid.bounds[0][0],
            Side::Right => grid.bounds[0][1] - x[0],
            Side::Bottom => x[1] - grid.bounds[1][0],
            Side::Top => grid.bounds[1][1] - x[1],
        }
    }

    /// Sample points along the side, with trapezoid weights.
    pub fn samples(self, grid: &Grid2D) -> Vec<([f64; 2], f64)> {
        let (n, fixed_axis_index, step) = match self {
            Side::Left | Side::Right => (grid.ny, if self == Side::Left { 0 } else { grid.nx - 1 }, grid.dy()),
            Side::Bottom | Side::Top => (grid.nx, if self == Side::Bottom { 0 } else { grid.ny - 1 }, grid.dx()),
        };
        (0..n)
            .map(|k| {
                let p = match self {
                    Side::Left | Side::Right => grid.point(fixed_axis_index, k),
                    Side::Bottom | Side::Top => grid.point(k, fixed_axis_index),
                };
                let w = if k == 0 || k + 1 == n { 0.5 * step } else { step };
                (p, w)
            })
            .collect()
    }
}

/// Manufactured field with closed-form gradient and Laplacian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Manufactured {
    Zero,
    /// `u = eta * exp(-|x - center|^2 / (2 width^2))`, `eta` the distance
    /// to the side `gamma`, so `u = 0` on `gamma`.
    GaussianBump { center: [f64; 2], width: f64 },
}

/// Value, gradient and Laplacian at a point.
#[derive(Debug, Clone, Copy)]
pub struct FieldSample {
    pub u: f64,
    pub grad: [f64; 2],
    pub lap: f64,
}

impl Manufactured {
    pub fn sample(&self, gamma: Side, grid: &Grid2D, x: [f64; 2]) -> FieldSample {
        match *self {
            Manufactured::Zero => FieldSample {
                u: 0.0,
                grad: [0.0; 2],
                lap: 0.0,
            },
            Manufactured::GaussianBump { center, width } => {
                let s2 = width * width;
                let r = [x[0] - center[0], x[1] - center[1]];
                let g = (-dot(r, r) / (2.0 * s2)).exp();
                let gg = [-r[0] / s2 * g, -r[1] / s2 * g];
                let lap_g = (dot(r, r) / (s2 * s2) - 2.0 / s2) * g;
                let eta = gamma.distance(grid, x);
                let n = gamma.outward_normal();
                // grad eta = -outward normal of gamma
                let de = [-n[0], -n[1]];
                FieldSample {
                    u: eta * g,
                    grad: [de[0] * g + eta * gg[0], de[1] * g + eta * gg[1]],
                    lap: eta * lap_g + 2.0 * dot(de, gg),
                }
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CarlemanRow {
    pub h: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    /// Weights are evaluated as `exp(2 (phi - log_scale) / h)`; multiply by
    /// `exp(2 log_scale / h)` for absolute values.
    pub log_scale: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CarlemanReport {
    pub gamma: Side,
    pub rows: Vec<CarlemanRow>,
    pub max_ratio: f64,
    pub min_ratio: f64,
    /// `max_ratio / min_ratio` over rows with a positive ratio.
    pub spread: f64,
    pub subellipticity_min_bracket: f64,
}

/// Directions sampled on the characteristic set when certifying the weight.
pub const CERTIFY_DIRECTIONS: usize = 8;

pub fn carleman_inequality_check(
    w: &WeightFunction,
    field: &Manufactured,
    gamma: Side,
    grid: &Grid2D,
    h_values: &[f64],
) -> Result<CarlemanReport> {
    if h_values.is_empty() || h_values.iter().any(|&h| !(h.is_finite() && h > 0.0)) {
        return Err(validation("carleman.h_values", "need a nonempty list of positive values"));
    }
    if h_values.windows(2).any(|p| p[1] >= p[0]) {
        return Err(validation("carleman.h_values", "must be strictly decreasing"));
    }
    if let Manufactured::GaussianBump { width, .. } = field {
        if !(width.is_finite() && *width > 0.0) {
            return Err(validation("carleman.width", "must be positive"));
        }
    }
    let gamma_pts = gamma.samples(grid);
    let n = gamma.outward_normal();
    for &(p, _) in &gamma_pts {
        let dn = dot(w.psi.grad(p), n);
        if dn >= 0.0 {
            return Err(Error::Trace(format!(
                "d_nu psi = {dn} >= 0 at ({}, {}) on gamma; the weight must decrease outward across gamma",
                p[0], p[1]
            )));
        }
        let u = field.sample(gamma, grid, p).u;
        if u.abs() > 1e-12 {
            return Err(Error::Trace(format!("u = {u:e} on gamma at ({}, {})", p[0], p[1])));
        }
    }
    let coarse = Grid2D::new(grid.bounds, 33, 33)?;
    let cert = verify_subellipticity(w, &coarse, CERTIFY_DIRECTIONS)?;
    if !cert.certified {
        return Err(Error::NotSubelliptic(format!(
            "{}; run verify_subellipticity on this weight for details",
            cert.reason
        )));
    }

    let points = grid.points();
    let (dx, dy) = (grid.dx(), grid.dy());
    let area_weight = |i: usize, j: usize| {
        let wx = if i == 0 || i + 1 == grid.nx { 0.5 } else { 1.0 };
        let wy = if j == 0 || j + 1 == grid.ny { 0.5 } else { 1.0 };
        wx * wy * dx * dy
    };
    let interior: Vec<(f64, FieldSample, f64)> = points
        .iter()
        .enumerate()
        .map(|(k, &p)| (w.phi(p), field.sample(gamma, grid, p), area_weight(k % grid.nx, k / grid.nx)))
        .collect();
    let boundary: Vec<(f64, FieldSample, f64, [f64; 2])> = Side::ALL
        .iter()
        .filter(|&&s| s != gamma)
        .flat_map(|&s| {
            s.samples(grid)
                .into_iter()
                .map(move |(p, q)| (w.phi(p), field.sample(gamma, grid, p), q, s.outward_normal()))
        })
        .collect();
    let phi_max = interior.iter().map(|t| t.0).fold(f64::NEG_INFINITY, f64::max);

    let mut rows = Vec::with_capacity(h_values.len());
    for &h in h_values {
        let wt = |phi: f64| (2.0 * (phi - phi_max) / h).exp();
        let (mut u2, mut g2, mut f2) = (0.0, 0.0, 0.0);
        for (phi, s, q) in &interior {
            let e = wt(*phi) * q;
            u2 += e * s.u * s.u;
            g2 += e * dot(s.grad, s.grad);
            f2 += e * s.lap * s.lap;
        }
        let (mut bu2, mut bn2) = (0.0, 0.0);
        for (phi, s, q, n) in &boundary {
            let e = wt(*phi) * q;
            bu2 += e * s.u * s.u;
            bn2 += e * dot(s.grad, *n).powi(2);
        }
        let lhs = h * u2 + h.powi(3) * g2;
        let rhs = h.powi(4) * f2 + h * bu2 + h.powi(3) * bn2;
        let ratio = if rhs > 0.0 {
            lhs / rhs
        } else if lhs == 0.0 {
            0.0
        } else {
            return Err(Error::Trace(format!("lhs = {lhs:e} with vanishing rhs at h = {h}")));
        };
        rows.push(CarlemanRow {
            h,
            lhs,
            rhs,
            ratio,
            log_scale: phi_max,
        });
    }
    let positive: Vec<f64> = rows.iter().map(|r| r.ratio).filter(|&r| r > 0.0).collect();
    let max_ratio = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let min_ratio = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    let spread = if positive.is_empty() {
        1.0
    } else {
        positive.iter().cloned().fold(0.0, f64::max) / positive.iter().cloned().fold(f64::INFINITY, f64::min)
    };
    Ok(CarlemanReport {
        gamma,
        rows,
        max_ratio,
        min_ratio,
        spread,
        subellipticity_min_bracket: cert.min_bracket,
    })
}

/// Linear weight `psi = x1`, `gamma` the left side, Gaussian bump at the
/// center of the unit square.
pub fn gaussian_example(n: usize) -> Result<(WeightFunction, Manufactured, Side, Grid2D)> {
    let psi = super::poly::Poly2::from_triples(&[(1, 0, 1.0)])?;
    Ok((
        WeightFunction::new(psi, 1.0)?,
        Manufactured::GaussianBump {
            center: [0.5, 0.5],
            width: 0.1,
        },
        Side::Left,
        Grid2D::unit_square(n)?,
    ))
}

pub const DEFAULT_H_VALUES: [f64; 4] = [0.2, 0.1, 0.05, 0.025];
