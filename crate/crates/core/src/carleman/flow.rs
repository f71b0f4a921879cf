//! Weight-pair construction by a compactly supported flow.
//!
//! Each critical point `c` of `psi1` carries a straight arc
//! `gamma(t) = c + t d`, `t in [-1, 1]`. The vector field equals `d` on the
//! arcs and is cut off smoothly across a tube of radius `R` and beyond the
//! arc ends, so the time-one flow pushes `c` to `gamma(1)` and
//! `psi2 = psi1 o flow_1` exceeds `psi1` at `c`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::poly::{dot, norm, Poly2};
use super::subellipticity::find_critical_points;
use crate::error::{validation, Error, Result};
use crate::mesh::Grid2D;

pub const RK4_STEP: f64 = 1e-3;
pub const MORSE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Arc {
    pub center: [f64; 2],
    pub direction: [f64; 2],
}

impl Arc {
    pub fn at(&self, t: f64) -> [f64; 2] {
        [self.center[0] + t * self.direction[0], self.center[1] + t * self.direction[1]]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowSpec {
    pub arcs: Vec<Arc>,
    pub tube_radius: f64,
    /// Length of the taper beyond `t = +-1`, in arc-parameter units.
    pub margin: f64,
}

/// `exp(1 - 1 / (1 - s^2))` on `|s| < 1`, zero outside; equals 1 at 0.
pub fn bump(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - s * s)).exp()
    }
}

impl FlowSpec {
    pub fn vector_field(&self, x: [f64; 2]) -> [f64; 2] {
        let mut out = [0.0; 2];
        for arc in &self.arcs {
            let d = arc.direction;
            let rel = [x[0] - arc.center[0], x[1] - arc.center[1]];
            let t = dot(rel, d) / dot(d, d);
            let taper = if t.abs() <= 1.0 {
                1.0
            } else {
                bump((t.abs() - 1.0) / self.margin)
            };
            if taper == 0.0 {
                continue;
            }
            let perp = norm([rel[0] - t * d[0], rel[1] - t * d[1]]);
            let s = bump(perp / self.tube_radius) * taper;
            out[0] += s * d[0];
            out[1] += s * d[1];
        }
        out
    }

    fn in_support(&self, x: [f64; 2]) -> bool {
        self.arcs.iter().any(|arc| {
            let a = arc.at(-1.0 - self.margin);
            let b = arc.at(1.0 + self.margin);
            point_segment_distance(x, a, b) < self.tube_radius
        })
    }

    /// Time-one flow (`sign = 1`) or its inverse (`sign = -1`) by RK4.
    pub fn flow(&self, x: [f64; 2], sign: f64, region: &Grid2D) -> Result<[f64; 2]> {
        if !self.in_support(x) {
            return Ok(x);
        }
        let steps = (1.0 / RK4_STEP).round() as usize;
        let h = sign * RK4_STEP;
        let f = |p: [f64; 2]| self.vector_field(p);
        let mut p = x;
        for _ in 0..steps {
            let k1 = f(p);
            let k2 = f([p[0] + 0.5 * h * k1[0], p[1] + 0.5 * h * k1[1]]);
            let k3 = f([p[0] + 0.5 * h * k2[0], p[1] + 0.5 * h * k2[1]]);
            let k4 = f([p[0] + h * k3[0], p[1] + h * k3[1]]);
            for k in 0..2 {
                p[k] += h / 6.0 * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k]);
            }
            if !(p[0].is_finite() && p[1].is_finite()) || !region.contains(p) {
                return Err(Error::Integration(format!(
                    "RK4 step rejected: trajectory from ({}, {}) reached ({}, {})",
                    x[0], x[1], p[0], p[1]
                )));
            }
        }
        Ok(p)
    }
}

fn point_segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ap = [p[0] - a[0], p[1] - a[1]];
    let t = (dot(ap, ab) / dot(ab, ab)).clamp(0.0, 1.0);
    norm([ap[0] - t * ab[0], ap[1] - t * ab[1]])
}

fn segment_distance(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> f64 {
    let cross = |o: [f64; 2], p: [f64; 2], q: [f64; 2]| (p[0] - o[0]) * (q[1] - o[1]) - (p[1] - o[1]) * (q[0] - o[0]);
    let d1 = cross(c, d, a);
    let d2 = cross(c, d, b);
    let d3 = cross(a, b, c);
    let d4 = cross(a, b, d);
    if d1 * d2 < 0.0 && d3 * d4 < 0.0 {
        return 0.0;
    }
    point_segment_distance(a, c, d)
        .min(point_segment_distance(b, c, d))
        .min(point_segment_distance(c, a, b))
        .min(point_segment_distance(d, a, b))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowReport {
    pub critical_psi1: Vec<[f64; 2]>,
    pub critical_psi2: Vec<[f64; 2]>,
    /// `psi2(c) - psi1(c)` at critical points of `psi1` (must be > 0).
    pub lift_at_psi1_critical: Vec<f64>,
    /// `psi1(c') - psi2(c')` at critical points of `psi2` (must be > 0).
    pub drop_at_psi2_critical: Vec<f64>,
    /// `|grad psi2|` at critical points of `psi1` and `|grad psi1|` at those
    /// of `psi2`.
    pub cross_gradients: Vec<f64>,
    pub psi2_gradient_residual: Vec<f64>,
    pub band_max_difference: f64,
    pub round_trip_max_error: f64,
    pub psi1: Vec<f64>,
    pub psi2: Vec<f64>,
    pub passed: bool,
}

/// Checks the geometric preconditions and returns the critical points of
/// `psi1` in the region.
pub fn validate_flow(psi1: &Poly2, spec: &FlowSpec, region: &Grid2D) -> Result<Vec<[f64; 2]>> {
    let r = spec.tube_radius;
    if !(r.is_finite() && r > 0.0) {
        return Err(validation("carleman.flow.tube_radius", format!("must be positive, got {r}")));
    }
    if !(spec.margin.is_finite() && spec.margin > 0.0) {
        return Err(validation("carleman.flow.margin", format!("must be positive, got {}", spec.margin)));
    }
    let crit = find_critical_points(psi1, region);
    for &c in &crit {
        let h = psi1.hess(c);
        let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
        if det.abs() < MORSE_TOL {
            return Err(Error::Geometry(format!(
                "critical point ({}, {}) is degenerate: |det psi''| = {:e}",
                c[0],
                c[1],
                det.abs()
            )));
        }
    }
    let ends: Vec<([f64; 2], [f64; 2])> = spec
        .arcs
        .iter()
        .map(|a| (a.at(-1.0 - spec.margin), a.at(1.0 + spec.margin)))
        .collect();
    for (k, arc) in spec.arcs.iter().enumerate() {
        if norm(arc.direction) == 0.0 {
            return Err(Error::Geometry(format!("arc {k} has zero direction")));
        }
        for p in [ends[k].0, ends[k].1] {
            if !region.contains(p) || region.distance_to_boundary(p) < 2.0 * r {
                return Err(Error::Geometry(format!(
                    "arc {k} comes within 2R = {} of the boundary at ({}, {})",
                    2.0 * r,
                    p[0],
                    p[1]
                )));
            }
        }
        if !crit.iter().any(|c| norm([c[0] - arc.center[0], c[1] - arc.center[1]]) <= 1e-6) {
            return Err(Error::Geometry(format!(
                "arc {k} centered at ({}, {}) is not attached to a critical point",
                arc.center[0], arc.center[1]
            )));
        }
        let (lo, hi, mid) = (psi1.eval(arc.at(-1.0)), psi1.eval(arc.at(1.0)), psi1.eval(arc.center));
        if (lo - hi).abs() > 1e-8 || hi <= mid {
            return Err(Error::Geometry(format!(
                "arc {k}: psi1 at the ends ({lo}, {hi}) must agree and exceed psi1(c) = {mid}"
            )));
        }
        for l in 0..k {
            let d = segment_distance(ends[k].0, ends[k].1, ends[l].0, ends[l].1);
            if d < 2.0 * r {
                return Err(Error::Geometry(format!("arcs {l} and {k} are {d} apart, need >= {}", 2.0 * r)));
            }
        }
    }
    Ok(crit)
}

fn psi2_at(psi1: &Poly2, spec: &FlowSpec, region: &Grid2D, x: [f64; 2]) -> Result<f64> {
    Ok(psi1.eval(spec.flow(x, 1.0, region)?))
}

fn psi2_grad(psi1: &Poly2, spec: &FlowSpec, region: &Grid2D, x: [f64; 2], e: f64) -> Result<[f64; 2]> {
    let f = |p| psi2_at(psi1, spec, region, p);
    Ok([
        (f([x[0] + e, x[1]])? - f([x[0] - e, x[1]])?) / (2.0 * e),
        (f([x[0], x[1] + e])? - f([x[0], x[1] - e])?) / (2.0 * e),
    ])
}

/// Refines a critical point of `psi2` by Newton steps with difference
/// derivatives; returns the point and its gradient residual.
fn refine_psi2_critical(psi1: &Poly2, spec: &FlowSpec, region: &Grid2D, mut x: [f64; 2]) -> Result<([f64; 2], f64)> {
    let e = 1e-5;
    let mut g = psi2_grad(psi1, spec, region, x, e)?;
    for _ in 0..5 {
        let gx = psi2_grad(psi1, spec, region, [x[0] + 1e-4, x[1]], e)?;
        let gxm = psi2_grad(psi1, spec, region, [x[0] - 1e-4, x[1]], e)?;
        let gy = psi2_grad(psi1, spec, region, [x[0], x[1] + 1e-4], e)?;
        let gym = psi2_grad(psi1, spec, region, [x[0], x[1] - 1e-4], e)?;
        let h = [
            [(gx[0] - gxm[0]) / 2e-4, (gy[0] - gym[0]) / 2e-4],
            [(gx[1] - gxm[1]) / 2e-4, (gy[1] - gym[1]) / 2e-4],
        ];
        let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
        if det == 0.0 {
            break;
        }
        let next = [
            x[0] - (h[1][1] * g[0] - h[0][1] * g[1]) / det,
            x[1] - (-h[1][0] * g[0] + h[0][0] * g[1]) / det,
        ];
        let gn = psi2_grad(psi1, spec, region, next, e)?;
        if norm(gn) >= norm(g) {
            break;
        }
        x = next;
        g = gn;
    }
    Ok((x, norm(g)))
}

pub fn flow_deform(psi1: &Poly2, spec: &FlowSpec, region: &Grid2D) -> Result<FlowReport> {
    let crit = validate_flow(psi1, spec, region)?;
    let points = region.points();
    let psi1_vals: Vec<f64> = points.iter().map(|&p| psi1.eval(p)).collect();
    let images: Vec<[f64; 2]> = points
        .par_iter()
        .map(|&p| spec.flow(p, 1.0, region))
        .collect::<Result<_>>()?;
    let psi2_vals: Vec<f64> = images.iter().map(|&q| psi1.eval(q)).collect();
    let round_trip_max_error = images
        .par_iter()
        .zip(points.par_iter())
        .map(|(&q, &p)| spec.flow(q, -1.0, region).map(|b| norm([b[0] - p[0], b[1] - p[1]])))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let band_max_difference = points
        .iter()
        .zip(psi1_vals.iter().zip(&psi2_vals))
        .filter(|(&p, _)| region.distance_to_boundary(p) <= spec.tube_radius)
        .map(|(_, (a, b))| (a - b).abs())
        .fold(0.0, f64::max);

    let mut lift = Vec::new();
    let mut cross = Vec::new();
    for &c in &crit {
        lift.push(psi2_at(psi1, spec, region, c)? - psi1.eval(c));
        cross.push(norm(psi2_grad(psi1, spec, region, c, 1e-5)?));
    }
    let mut crit2 = Vec::new();
    let mut drop = Vec::new();
    let mut residual = Vec::new();
    for &c in &crit {
        let (c2, res) = refine_psi2_critical(psi1, spec, region, spec.flow(c, -1.0, region)?)?;
        drop.push(psi1.eval(c2) - psi2_at(psi1, spec, region, c2)?);
        cross.push(norm(psi1.grad(c2)));
        crit2.push(c2);
        residual.push(res);
    }
    let passed = lift.iter().all(|&v| v > 0.0)
        && drop.iter().all(|&v| v > 0.0)
        && cross.iter().all(|&v| v > 0.0)
        && band_max_difference <= 1e-12
        && round_trip_max_error <= 1e-6;
    Ok(FlowReport {
        critical_psi1: crit,
        critical_psi2: crit2,
        lift_at_psi1_critical: lift,
        drop_at_psi2_critical: drop,
        cross_gradients: cross,
        psi2_gradient_residual: residual,
        band_max_difference,
        round_trip_max_error,
        psi1: psi1_vals,
        psi2: psi2_vals,
        passed,
    })
}

/// `psi1 = x2^2 - x1^2 + (x1^4 + x2^4) / 10` on `[-1, 1]^2` with one arc
/// through the saddle at the origin.
pub fn saddle_example() -> (Poly2, FlowSpec, Grid2D) {
    let psi = Poly2::from_triples(&[(0, 2, 1.0), (2, 0, -1.0), (4, 0, 0.1), (0, 4, 0.1)]).expect("degree 4");
    let spec = FlowSpec {
        arcs: vec![Arc {
            center: [0.0, 0.0],
            direction: [0.0, 0.5],
        }],
        tube_radius: 0.15,
        margin: 0.2,
    };
    let grid = Grid2D::new([[-1.0, 1.0], [-1.0, 1.0]], 41, 41).expect("valid grid");
    (psi, spec, grid)
}
