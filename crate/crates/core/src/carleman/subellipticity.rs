use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::poly::{norm, Poly2};
use super::weight::{characteristic_covectors, poisson_bracket, WeightFunction};
use crate::error::{validation, Result};
use crate::mesh::Grid2D;

/// Gradient tolerance for accepting a Newton iterate as a critical point.
pub const CRITICAL_TOL: f64 = 1e-10;

/// Critical points of `psi` inside `region`: Newton iterations started from
/// grid local minima of `|grad psi|` that are small enough to possibly hide
/// a zero within the cell.
pub fn find_critical_points(psi: &Poly2, region: &Grid2D) -> Vec<[f64; 2]> {
    let (nx, ny) = (region.nx, region.ny);
    let gn: Vec<f64> = region.points().iter().map(|&p| norm(psi.grad(p))).collect();
    let at = |i: usize, j: usize| gn[j * nx + i];
    let diag = region.cell_diagonal();
    let mut found: Vec<[f64; 2]> = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let v = at(i, j);
            let mut is_min = true;
            for dj in -1i64..=1 {
                for di in -1i64..=1 {
                    let (ii, jj) = (i as i64 + di, j as i64 + dj);
                    if (di, dj) == (0, 0) || ii < 0 || jj < 0 || ii >= nx as i64 || jj >= ny as i64 {
                        continue;
                    }
                    if at(ii as usize, jj as usize) < v {
                        is_min = false;
                    }
                }
            }
            if !is_min {
                continue;
            }
            let p = region.point(i, j);
            let h = psi.hess(p);
            let hn = (h[0][0].powi(2) + 2.0 * h[0][1].powi(2) + h[1][1].powi(2)).sqrt();
            if v > 2.0 * hn * diag && v > CRITICAL_TOL {
                continue;
            }
            if let Some(c) = newton(psi, p) {
                if region.contains(c) && !found.iter().any(|q| norm([q[0] - c[0], q[1] - c[1]]) < 1e-8) {
                    found.push(c);
                }
            }
        }
    }
    found
}

fn newton(psi: &Poly2, mut x: [f64; 2]) -> Option<[f64; 2]> {
    for _ in 0..100 {
        let g = psi.grad(x);
        if norm(g) <= CRITICAL_TOL {
            return Some(x);
        }
        let h = psi.hess(x);
        let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let dx = [
            (h[1][1] * g[0] - h[0][1] * g[1]) / det,
            (-h[1][0] * g[0] + h[0][0] * g[1]) / det,
        ];
        x = [x[0] - dx[0], x[1] - dx[1]];
        if !(x[0].is_finite() && x[1].is_finite()) {
            return None;
        }
    }
    (norm(psi.grad(x)) <= CRITICAL_TOL).then_some(x)
}

/// Minimum bracket on the sampled characteristic set at one grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BracketSample {
    pub x: [f64; 2],
    pub min_bracket: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubellipticityReport {
    pub certified: bool,
    pub min_bracket: f64,
    /// Arg-min of the bracket, or the offending critical point.
    pub witness: [f64; 2],
    pub critical_points: Vec<[f64; 2]>,
    pub samples: Vec<BracketSample>,
    pub reason: String,
}

/// Samples `{Re p_phi, Im p_phi}` on the characteristic set over `region`.
/// A critical point of `psi` inside the region (where `grad phi = 0`) is a
/// failure with that point as witness.
pub fn verify_subellipticity(w: &WeightFunction, region: &Grid2D, n_xi: usize) -> Result<SubellipticityReport> {
    if n_xi < 8 {
        return Err(validation("n_xi", format!("need at least 8 directions, got {n_xi}")));
    }
    let critical_points = find_critical_points(&w.psi, region);
    if let Some(&c) = critical_points.first() {
        return Ok(SubellipticityReport {
            certified: false,
            min_bracket: 0.0,
            witness: c,
            critical_points,
            samples: Vec::new(),
            reason: format!("grad psi vanishes at ({:.6}, {:.6}) inside the region", c[0], c[1]),
        });
    }
    let samples: Vec<BracketSample> = region
        .points()
        .par_iter()
        .map(|&x| {
            let xs = characteristic_covectors(w, x, n_xi);
            let min_bracket = if xs.is_empty() {
                0.0
            } else {
                xs.iter().map(|&xi| poisson_bracket(w, x, xi)).fold(f64::INFINITY, f64::min)
            };
            BracketSample { x, min_bracket }
        })
        .collect();
    let worst = samples
        .iter()
        .min_by(|a, b| a.min_bracket.total_cmp(&b.min_bracket))
        .copied()
        .expect("grid is nonempty");
    let certified = worst.min_bracket > 0.0;
    Ok(SubellipticityReport {
        certified,
        min_bracket: worst.min_bracket,
        witness: worst.x,
        critical_points,
        reason: if certified {
            "bracket positive on all sampled characteristic points".into()
        } else {
            format!(
                "bracket {:e} <= 0 at ({:.6}, {:.6})",
                worst.min_bracket, worst.x[0], worst.x[1]
            )
        },
        samples,
    })
}
