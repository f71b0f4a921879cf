//! One-dimensional two-phase mesh and the 2D sampling lattices used by the
//! weight checks.
//!
//! The 1D domain is `[0, L]` with the clamped end `x = 0` (where `u = 0` and
//! the moment vanishes), the interface node `x0` separating the two materials,
//! and the feedback end `x = L`.

use serde::{Deserialize, Serialize};

use crate::error::{validation, Error, Result};

/// Relative tolerance for the interface alignment precondition.
const ALIGN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mesh1D {
    pub length: f64,
    pub x0: f64,
    pub n: usize,
    pub h: f64,
    pub c1: f64,
    pub c2: f64,
    /// Wave speed per node: `c1` on `[0, x0]`, `c2` on `(x0, L]`. The interface
    /// node itself is shared; see [`Mesh1D::metric_weight`].
    pub alpha: Vec<f64>,
    pub interface_index: usize,
}

pub fn build_mesh(length: f64, x0: f64, c1: f64, c2: f64, n: usize) -> Result<Mesh1D> {
    if !(length.is_finite() && length > 0.0) {
        return Err(validation("L", format!("must be positive, got {length}")));
    }
    if !(c1.is_finite() && c1 > 0.0) {
        return Err(validation("c1", format!("must be positive, got {c1}")));
    }
    if !(c2.is_finite() && c2 > 0.0) {
        return Err(validation("c2", format!("must be positive, got {c2}")));
    }
    if n < 8 {
        return Err(validation("N", format!("need at least 8 nodes, got {n}")));
    }
    if !(x0 > 0.0 && x0 < length) {
        return Err(validation("x0", format!("must lie in (0, {length}), got {x0}")));
    }
    let cells = (n - 1) as f64;
    let pos = x0 / length * cells;
    let nearest_index = pos.round();
    if (pos - nearest_index).abs() > ALIGN_TOL
        || nearest_index < 1.0
        || nearest_index > cells - 1.0
    {
        let clamped = nearest_index.clamp(1.0, cells - 1.0);
        return Err(Error::Alignment {
            x0,
            n,
            nearest: clamped * length / cells,
        });
    }
    let interface_index = nearest_index as usize;
    let h = length / cells;
    let alpha = (0..n)
        .map(|j| if j <= interface_index { c1 } else { c2 })
        .collect();
    Ok(Mesh1D {
        length,
        x0,
        n,
        h,
        c1,
        c2,
        alpha,
        interface_index,
    })
}

/// Nearest grid-aligned interface position for `n` nodes.
pub fn snap_interface(length: f64, x0: f64, n: usize) -> f64 {
    let cells = (n.max(2) - 1) as f64;
    let idx = (x0 / length * cells).round().clamp(1.0, (cells - 1.0).max(1.0));
    idx * length / cells
}

impl Mesh1D {
    pub fn x(&self, j: usize) -> f64 {
        if j + 1 == self.n {
            self.length
        } else {
            j as f64 * self.h
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.x(j)).collect()
    }

    pub fn last(&self) -> usize {
        self.n - 1
    }

    pub fn is_interface(&self, j: usize) -> bool {
        j == self.interface_index
    }

    /// Trapezoid weight of node `j` (h inside, h/2 at both ends).
    pub fn trapezoid_weight(&self, j: usize) -> f64 {
        if j == 0 || j + 1 == self.n {
            0.5 * self.h
        } else {
            self.h
        }
    }

    /// Weight of node `j` in the discrete `L^2(alpha^{-1} dx)` inner product.
    ///
    /// The interface node splits its cell between the two materials.
    pub fn metric_weight(&self, j: usize) -> f64 {
        if self.is_interface(j) {
            0.5 * self.h * (1.0 / self.c1 + 1.0 / self.c2)
        } else {
            self.trapezoid_weight(j) / self.alpha[j]
        }
    }

    /// Speed used in front of the second difference at node `j`, chosen so
    /// that `metric_weight(j) * effective_alpha(j) = trapezoid_weight(j)`.
    /// Equal to `alpha[j]` away from the interface and to the harmonic mean
    /// `2 c1 c2 / (c1 + c2)` on it.
    pub fn effective_alpha(&self, j: usize) -> f64 {
        if self.is_interface(j) {
            2.0 * self.c1 * self.c2 / (self.c1 + self.c2)
        } else {
            self.alpha[j]
        }
    }

    pub fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n {
            return Err(Error::Shape {
                expected: self.n,
                got: len,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    /// `[[a1, b1], [a2, b2]]`.
    pub bounds: [[f64; 2]; 2],
    pub nx: usize,
    pub ny: usize,
}

impl Grid2D {
    pub fn new(bounds: [[f64; 2]; 2], nx: usize, ny: usize) -> Result<Self> {
        if nx < 16 || ny < 16 {
            return Err(validation("grid", format!("need nx, ny >= 16, got {nx}x{ny}")));
        }
        for (axis, [lo, hi]) in bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && hi > lo) {
                return Err(validation(
                    "grid.bounds",
                    format!("axis {axis}: empty interval [{lo}, {hi}]"),
                ));
            }
        }
        Ok(Self { bounds, nx, ny })
    }

    pub fn unit_square(n: usize) -> Result<Self> {
        Self::new([[0.0, 1.0], [0.0, 1.0]], n, n)
    }

    pub fn dx(&self) -> f64 {
        (self.bounds[0][1] - self.bounds[0][0]) / (self.nx - 1) as f64
    }

    pub fn dy(&self) -> f64 {
        (self.bounds[1][1] - self.bounds[1][0]) / (self.ny - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        if i + 1 == self.nx {
            self.bounds[0][1]
        } else {
            self.bounds[0][0] + i as f64 * self.dx()
        }
    }

    pub fn y(&self, j: usize) -> f64 {
        if j + 1 == self.ny {
            self.bounds[1][1]
        } else {
            self.bounds[1][0] + j as f64 * self.dy()
        }
    }

    pub fn point(&self, i: usize, j: usize) -> [f64; 2] {
        [self.x(i), self.y(j)]
    }

    /// Row-major (`j` outer, `i` inner) list of all sample points.
    pub fn points(&self) -> Vec<[f64; 2]> {
        let mut out = Vec::with_capacity(self.nx * self.ny);
        for j in 0..self.ny {
            for i in 0..self.nx {
                out.push(self.point(i, j));
            }
        }
        out
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        (0..2).all(|k| p[k] >= self.bounds[k][0] && p[k] <= self.bounds[k][1])
    }

    /// Euclidean distance from `p` (inside the rectangle) to its boundary.
    pub fn distance_to_boundary(&self, p: [f64; 2]) -> f64 {
        let mut d = f64::INFINITY;
        for k in 0..2 {
            d = d.min(p[k] - self.bounds[k][0]).min(self.bounds[k][1] - p[k]);
        }
        d
    }

    pub fn cell_diagonal(&self) -> f64 {
        self.dx().hypot(self.dy())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_single_phase() {
        let m = build_mesh(1.0, 0.5, 1.0, 1.0, 9).unwrap();
        assert_eq!(m.h, 0.125);
        assert_eq!(m.interface_index, 4);
        assert!(m.alpha.iter().all(|&a| a == 1.0));
    }

    #[test]
    fn piecewise_alpha() {
        let m = build_mesh(1.0, 0.5, 1.0, 2.0, 101).unwrap();
        assert_eq!(m.interface_index, 50);
        assert!(m.alpha[..50].iter().all(|&a| a == 1.0));
        assert!(m.alpha[51..].iter().all(|&a| a == 2.0));
        assert!((m.interface_index as f64 * m.h - m.x0).abs() <= 1e-12);
        assert!((m.effective_alpha(50) - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn misaligned_interface_names_nearest() {
        let err = build_mesh(1.0, 0.3, 1.0, 1.0, 10).unwrap_err();
        match err {
            Error::Alignment { nearest, .. } => {
                assert!((nearest - 3.0 / 9.0).abs() < 1e-15, "nearest = {nearest}")
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(build_mesh(0.0, 0.5, 1.0, 1.0, 9).is_err());
        assert!(build_mesh(1.0, 0.5, -1.0, 1.0, 9).is_err());
        assert!(build_mesh(1.0, 0.5, 1.0, 0.0, 9).is_err());
        assert!(build_mesh(1.0, 0.5, 1.0, 1.0, 7).is_err());
        assert!(build_mesh(1.0, 1.0, 1.0, 1.0, 9).is_err());
    }

    #[test]
    fn refinement_halves_spacing() {
        let coarse = build_mesh(1.0, 0.25, 1.0, 3.0, 41).unwrap();
        let fine = build_mesh(1.0, 0.25, 1.0, 3.0, 81).unwrap();
        assert_eq!(fine.h * 2.0, coarse.h);
        assert_eq!(fine.interface_index, 2 * coarse.interface_index);
    }

    #[test]
    fn build_is_deterministic() {
        let a = build_mesh(2.0, 0.5, 1.5, 0.7, 33).unwrap();
        let b = build_mesh(2.0, 0.5, 1.5, 0.7, 33).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn metric_weights_integrate_inverse_speed() {
        let m = build_mesh(1.0, 0.5, 1.0, 2.0, 21).unwrap();
        let total: f64 = (0..m.n).map(|j| m.metric_weight(j)).sum();
        assert!((total - (0.5 / 1.0 + 0.5 / 2.0)).abs() < 1e-14);
    }

    #[test]
    fn grid_covers_bounds() {
        let g = Grid2D::new([[-1.0, 2.0], [0.0, 1.0]], 16, 20).unwrap();
        let pts = g.points();
        assert_eq!(pts.len(), 320);
        assert_eq!(pts[0], [-1.0, 0.0]);
        assert_eq!(*pts.last().unwrap(), [2.0, 1.0]);
        assert!(Grid2D::unit_square(8).is_err());
    }
}
