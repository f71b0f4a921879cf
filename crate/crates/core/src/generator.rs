//! Discrete generator of the damped two-phase beam in mixed form.
//!
//! The fourth-order operator `alpha^2 d^4/dx^4` is split through the moment
//! `w = G u = -alpha u''`, so the evolution `(u, v) -> (v, -alpha^2 u'''')`
//! becomes the first-order pair
//!
//! ```text
//!     w_t = -alpha v'',     v_t = alpha w''
//! ```
//!
//! on the nodes of a [`Mesh1D`]. Both fields are `C^1` across the interface,
//! so the plain 3-point stencil is used everywhere; the interface node uses
//! the harmonic mean speed so that the metric-weighted stencil stays
//! symmetric.
//!
//! The matrix is assembled in energy coordinates `(w, v)`. In these
//! coordinates the energy is `1/2 (|w|_H^2 + |v|_H^2)` with a diagonal
//! metric, and the rigid rotation `u = x` (which carries no energy) is not a
//! degree of freedom.
//!
//! Boundary closure at `x = L` (ghost nodes eliminated with centered
//! differences):
//!
//! * `w(L) = c2 a v_x(L)`  fixes the velocity ghost,
//! * `w_x(L) = -c2 b v(L)` fixes the moment ghost,
//!
//! which gives the exact discrete identity
//! `Re <A z, z> = -c2 (a |d_nu v(L)|^2 + b |v(L)|^2)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{validation, Error, Result};
use crate::linalg;
use crate::mesh::Mesh1D;

type C64 = Complex64;

/// Boundary treatment at the far end `x = L`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EndCondition {
    /// Moment and force feedback with coefficients `a` and `b`. `a = b = 0`
    /// is the conservative free end.
    Feedback { a: f64, b: f64 },
    /// `u = w = 0`; the undamped reference configuration.
    Hinged,
}

impl EndCondition {
    pub fn damping(&self) -> (f64, f64) {
        match *self {
            EndCondition::Feedback { a, b } => (a, b),
            EndCondition::Hinged => (0.0, 0.0),
        }
    }

    pub fn is_damped(&self) -> bool {
        let (a, b) = self.damping();
        a > 0.0 || b > 0.0
    }
}

/// Nodal displacement/velocity pair.
///
/// `slope` is the displacement slope `u_x(L)` that closes the second
/// difference at the last node (the eliminated ghost value).
#[derive(Debug, Clone, PartialEq)]
pub struct PlateState {
    pub u: Vec<C64>,
    pub v: Vec<C64>,
    pub slope: C64,
}

impl PlateState {
    pub fn zeros(mesh: &Mesh1D) -> Self {
        Self {
            u: vec![C64::new(0.0, 0.0); mesh.n],
            v: vec![C64::new(0.0, 0.0); mesh.n],
            slope: C64::new(0.0, 0.0),
        }
    }

    /// Builds a state from nodal values; the boundary slope is estimated with
    /// the one-sided 3-point difference.
    pub fn new(mesh: &Mesh1D, u: Vec<C64>, v: Vec<C64>) -> Result<Self> {
        mesh.check_len(u.len())?;
        mesh.check_len(v.len())?;
        check_dirichlet(&u)?;
        let slope = one_sided_slope(mesh, &u);
        Ok(Self { u, v, slope })
    }

    pub fn from_real(mesh: &Mesh1D, u: &[f64], v: &[f64]) -> Result<Self> {
        Self::new(
            mesh,
            u.iter().map(|&x| C64::new(x, 0.0)).collect(),
            v.iter().map(|&x| C64::new(x, 0.0)).collect(),
        )
    }

    pub fn from_fn(mesh: &Mesh1D, u: impl Fn(f64) -> f64, v: impl Fn(f64) -> f64) -> Result<Self> {
        let x = mesh.nodes();
        let uu: Vec<f64> = x.iter().map(|&x| u(x)).collect();
        let vv: Vec<f64> = x.iter().map(|&x| v(x)).collect();
        Self::from_real(mesh, &uu, &vv)
    }

    /// Builds the state whose moment is `w` (nodal, `w[0]` ignored).
    ///
    /// `G u = w` determines `u` up to the zero-energy rotation `c x`; the
    /// representative with no `x` component in the metric is returned.
    pub fn from_moment(mesh: &Mesh1D, w: &[C64], v: Vec<C64>) -> Result<Self> {
        mesh.check_len(w.len())?;
        mesh.check_len(v.len())?;
        let n = mesh.n;
        let h2 = mesh.h * mesh.h;
        let zero = C64::new(0.0, 0.0);
        let mut u = vec![zero; n];
        // -alpha_eff (u[j-1] - 2u[j] + u[j+1]) / h^2 = w[j]
        for j in 1..n - 1 {
            u[j + 1] = u[j] * 2.0 - u[j - 1] - w[j] * (h2 / mesh.effective_alpha(j));
        }
        let x = mesh.nodes();
        let (mut num, mut den) = (zero, 0.0);
        for j in 0..n {
            num += u[j] * (mesh.metric_weight(j) * x[j]);
            den += mesh.metric_weight(j) * x[j] * x[j];
        }
        let c = num / den;
        for j in 0..n {
            u[j] -= c * x[j];
        }
        let slope = slope_for_end_moment(mesh, &u, w[n - 1]);
        Ok(Self { u, v, slope })
    }

    pub fn norm_sqr(&self) -> f64 {
        self.u.iter().chain(self.v.iter()).map(|z| z.norm_sqr()).sum::<f64>() + self.slope.norm_sqr()
    }
}

fn check_dirichlet(u: &[C64]) -> Result<()> {
    let scale = u.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
    if u[0].norm() > 1e-12 * scale {
        return Err(Error::Trace(format!("u(0) = {} but the clamped end requires u(0) = 0", u[0])));
    }
    Ok(())
}

/// One-sided second-order estimate of `u_x(L)`.
pub fn one_sided_slope(mesh: &Mesh1D, u: &[C64]) -> C64 {
    let n = mesh.n;
    (u[n - 1] * 3.0 - u[n - 2] * 4.0 + u[n - 3]) / (2.0 * mesh.h)
}

/// Slope `s` such that the moment at the last node equals `w_end`.
fn slope_for_end_moment(mesh: &Mesh1D, u: &[C64], w_end: C64) -> C64 {
    let n = mesh.n;
    let h = mesh.h;
    // w_end = -c2 (2 u[n-2] - 2 u[n-1] + 2 h s) / h^2
    (-w_end * (h * h / mesh.c2) - u[n - 2] * 2.0 + u[n - 1] * 2.0) / (2.0 * h)
}

/// Standard 3-point second difference on a uniform mesh.
#[derive(Debug, Clone, Copy)]
pub struct DiscreteLaplacian {
    pub h: f64,
    pub n: usize,
}

pub fn discrete_laplacian(mesh: &Mesh1D) -> DiscreteLaplacian {
    DiscreteLaplacian { h: mesh.h, n: mesh.n }
}

impl DiscreteLaplacian {
    /// Values at the interior nodes `1..n-1` (length `n - 2`).
    pub fn apply_interior<T>(&self, f: &[T]) -> Vec<T>
    where
        T: nalgebra::ComplexField<RealField = f64> + Copy,
    {
        let inv = 1.0 / (self.h * self.h);
        (1..self.n - 1)
            .map(|j| (f[j - 1] + f[j + 1] - f[j] - f[j]).scale(inv))
            .collect()
    }

    /// Values at all nodes, closing the end rows with the given ghost values.
    pub fn apply_with_ghosts<T>(&self, f: &[T], left: T, right: T) -> Vec<T>
    where
        T: nalgebra::ComplexField<RealField = f64> + Copy,
    {
        let inv = 1.0 / (self.h * self.h);
        let n = self.n;
        (0..n)
            .map(|j| {
                let l = if j == 0 { left } else { f[j - 1] };
                let r = if j + 1 == n { right } else { f[j + 1] };
                (l + r - f[j] - f[j]).scale(inv)
            })
            .collect()
    }
}

/// `G_h u = -alpha Laplacian_h u` with the one-sided slope closure at `L`.
pub fn apply_g(mesh: &Mesh1D, u: &[C64]) -> Result<Vec<C64>> {
    mesh.check_len(u.len())?;
    check_dirichlet(u)?;
    Ok(apply_g_with_slope(mesh, u, one_sided_slope(mesh, u)))
}

/// Moment field `w = G_h u` for a given end slope. `w[0] = 0` (the moment
/// vanishes at the clamped end).
pub fn apply_g_with_slope(mesh: &Mesh1D, u: &[C64], slope: C64) -> Vec<C64> {
    let n = mesh.n;
    let lap = discrete_laplacian(mesh);
    let ghost = u[n - 2] + slope * (2.0 * mesh.h);
    let mut w = lap.apply_with_ghosts(u, C64::new(0.0, 0.0), ghost);
    w[0] = C64::new(0.0, 0.0);
    for j in 1..n {
        w[j] *= -mesh.effective_alpha(j);
    }
    w
}

/// Weighted inner product `<f, g>_H` over all nodes.
pub fn inner_h(mesh: &Mesh1D, f: &[C64], g: &[C64]) -> C64 {
    (0..mesh.n)
        .map(|j| f[j] * g[j].conj() * mesh.metric_weight(j))
        .sum()
}

pub fn norm_h(mesh: &Mesh1D, f: &[C64]) -> f64 {
    inner_h(mesh, f, f).re.max(0.0).sqrt()
}

/// Discrete energy `1/2 sum (|v|^2 + |w|^2) alpha^{-1}` with `w = G_h u`.
pub fn energy(mesh: &Mesh1D, state: &PlateState) -> f64 {
    let w = apply_g_with_slope(mesh, &state.u, state.slope);
    0.5 * (0..mesh.n)
        .map(|j| mesh.metric_weight(j) * (state.v[j].norm_sqr() + w[j].norm_sqr()))
        .sum::<f64>()
}

/// Random smooth complex field vanishing at `x = 0`: a sine series with
/// `1/k^2` decay.
pub fn random_smooth_field<R: Rng>(mesh: &Mesh1D, rng: &mut R, modes: usize) -> Vec<C64> {
    let coeffs: Vec<C64> = (1..=modes)
        .map(|k| {
            let s = 1.0 / (k * k) as f64;
            C64::new(rng.gen_range(-1.0..1.0) * s, rng.gen_range(-1.0..1.0) * s)
        })
        .collect();
    mesh.nodes()
        .iter()
        .map(|&x| {
            coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| c * (((k as f64) + 0.5) * std::f64::consts::PI * x / mesh.length).sin())
                .sum()
        })
        .collect()
}

/// The assembled discrete generator in energy coordinates `(w, v)`.
#[derive(Debug, Clone)]
pub struct GeneratorMatrix {
    pub mesh: Mesh1D,
    pub end: EndCondition,
    /// Real matrix of order `nw + nv`, moments first.
    pub a: DMatrix<f64>,
    /// Diagonal of the energy metric.
    pub metric: DVector<f64>,
    /// Moment unknowns sit at nodes `1..=nw`.
    pub nw: usize,
    /// Velocity unknowns sit at nodes `1..=nv`.
    pub nv: usize,
    pub bc_map: String,
}

pub fn assemble_generator(mesh: &Mesh1D, a: f64, b: f64) -> Result<GeneratorMatrix> {
    if !(a.is_finite() && a >= 0.0) {
        return Err(validation("a", format!("must be nonnegative, got {a}")));
    }
    if !(b.is_finite() && b >= 0.0) {
        return Err(validation("b", format!("must be nonnegative, got {b}")));
    }
    Ok(assemble(mesh, EndCondition::Feedback { a, b }))
}

pub fn assemble_hinged(mesh: &Mesh1D) -> GeneratorMatrix {
    assemble(mesh, EndCondition::Hinged)
}

pub fn assemble_with(mesh: &Mesh1D, end: EndCondition) -> Result<GeneratorMatrix> {
    match end {
        EndCondition::Feedback { a, b } => assemble_generator(mesh, a, b),
        EndCondition::Hinged => Ok(assemble_hinged(mesh)),
    }
}

fn assemble(mesh: &Mesh1D, end: EndCondition) -> GeneratorMatrix {
    let n = mesh.n;
    let last = n - 1;
    let h = mesh.h;
    let h2 = h * h;
    let (nw, nv, bc_map) = match end {
        EndCondition::Feedback { a, b } if a > 0.0 => (
            last,
            last,
            format!(
                "u(0)=v(0)=w(0)=0; ghost v(L+h) = v(L-h) + 2h w(L)/(c2 a); \
                 ghost w(L+h) = w(L-h) - 2h c2 b v(L); a={a}, b={b}"
            ),
        ),
        EndCondition::Feedback { b, .. } => (
            last - 1,
            last,
            format!("u(0)=v(0)=w(0)=0; w(L)=0; ghost w(L+h) = w(L-h) - 2h c2 b v(L); a=0, b={b}"),
        ),
        EndCondition::Hinged => (
            last - 1,
            last - 1,
            "u(0)=v(0)=w(0)=0; u(L)=v(L)=w(L)=0".to_string(),
        ),
    };
    let (a_coef, b_coef) = end.damping();
    let dim = nw + nv;
    let wi = |j: usize| j - 1;
    let vi = |j: usize| nw + j - 1;
    let mut mat = DMatrix::<f64>::zeros(dim, dim);

    // w_t = -alpha v''
    for j in 1..=nw {
        let s = -mesh.effective_alpha(j) / h2;
        let r = wi(j);
        if j == last {
            // velocity ghost from w(L) = c2 a v_x(L)
            let c2 = mesh.c2;
            mat[(r, vi(j - 1))] += 2.0 * s;
            mat[(r, vi(j))] += -2.0 * s;
            mat[(r, wi(j))] += s * 2.0 * h / (c2 * a_coef);
            continue;
        }
        if j > 1 {
            mat[(r, vi(j - 1))] += s;
        }
        mat[(r, vi(j))] += -2.0 * s;
        if j + 1 <= nv {
            mat[(r, vi(j + 1))] += s;
        }
    }
    // v_t = alpha w''
    for j in 1..=nv {
        let s = mesh.effective_alpha(j) / h2;
        let r = vi(j);
        if j == last {
            // moment ghost from w_x(L) = -c2 b v(L)
            let c2 = mesh.c2;
            mat[(r, wi(j - 1))] += 2.0 * s;
            if nw == last {
                mat[(r, wi(j))] += -2.0 * s;
            }
            mat[(r, vi(j))] += -s * 2.0 * h * c2 * b_coef;
            continue;
        }
        if j > 1 {
            mat[(r, wi(j - 1))] += s;
        }
        if j <= nw {
            mat[(r, wi(j))] += -2.0 * s;
        }
        if j + 1 <= nw {
            mat[(r, wi(j + 1))] += s;
        }
    }
    let metric = DVector::from_iterator(
        dim,
        (1..=nw).chain(1..=nv).map(|j| mesh.metric_weight(j)),
    );
    GeneratorMatrix {
        mesh: mesh.clone(),
        end,
        a: mat,
        metric,
        nw,
        nv,
        bc_map,
    }
}

/// Boundary traces at `x = L` read off energy coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EndTraces {
    pub v: C64,
    /// `d_nu v(L) = -v_x(L)` (inner normal).
    pub dnu_v: C64,
}

impl GeneratorMatrix {
    pub fn dim(&self) -> usize {
        self.nw + self.nv
    }

    pub fn damping(&self) -> (f64, f64) {
        self.end.damping()
    }

    /// Projects a state onto the discrete domain and returns its energy
    /// coordinates. The clamped-end values `u(0)`, `v(0)` are treated as zero
    /// and the moment/velocity at `L` are dropped when the end condition
    /// pins them.
    pub fn energy_coords(&self, state: &PlateState) -> Result<DVector<C64>> {
        let mesh = &self.mesh;
        mesh.check_len(state.u.len())?;
        mesh.check_len(state.v.len())?;
        let mut u = state.u.clone();
        u[0] = C64::new(0.0, 0.0);
        if self.end == EndCondition::Hinged {
            u[mesh.n - 1] = C64::new(0.0, 0.0);
        }
        let w = apply_g_with_slope(mesh, &u, state.slope);
        Ok(DVector::from_iterator(
            self.dim(),
            (1..=self.nw).map(|j| w[j]).chain((1..=self.nv).map(|j| state.v[j])),
        ))
    }

    /// Rebuilds a nodal state from energy coordinates and a displacement
    /// field consistent with them.
    pub fn state_from(&self, mut u: Vec<C64>, z: &DVector<C64>) -> PlateState {
        let n = self.mesh.n;
        let zero = C64::new(0.0, 0.0);
        u[0] = zero;
        let mut v = vec![zero; n];
        for j in 1..=self.nv {
            v[j] = z[self.nw + j - 1];
        }
        let w_end = if self.nw == n - 1 { z[self.nw - 1] } else { zero };
        let slope = slope_for_end_moment(&self.mesh, &u, w_end);
        PlateState { u, v, slope }
    }

    pub fn moment_part(&self, z: &DVector<C64>) -> Vec<C64> {
        let mut w = vec![C64::new(0.0, 0.0); self.mesh.n];
        for j in 1..=self.nw {
            w[j] = z[j - 1];
        }
        w
    }

    pub fn velocity_part(&self, z: &DVector<C64>) -> Vec<C64> {
        let mut v = vec![C64::new(0.0, 0.0); self.mesh.n];
        for j in 1..=self.nv {
            v[j] = z[self.nw + j - 1];
        }
        v
    }

    pub fn inner(&self, x: &DVector<C64>, y: &DVector<C64>) -> C64 {
        x.iter()
            .zip(y.iter())
            .zip(self.metric.iter())
            .map(|((a, b), m)| a * b.conj() * *m)
            .sum()
    }

    pub fn norm(&self, x: &DVector<C64>) -> f64 {
        self.inner(x, x).re.max(0.0).sqrt()
    }

    /// Energy `1/2 |z|^2` in the metric.
    pub fn energy_of(&self, z: &DVector<C64>) -> f64 {
        0.5 * self.inner(z, z).re
    }

    pub fn apply(&self, z: &DVector<C64>) -> DVector<C64> {
        linalg::real_times_complex(&self.a, z)
    }

    pub fn end_traces(&self, z: &DVector<C64>) -> EndTraces {
        let n = self.mesh.n;
        let zero = C64::new(0.0, 0.0);
        let v = if self.nv == n - 1 { z[self.dim() - 1] } else { zero };
        let dnu_v = match self.end {
            EndCondition::Feedback { a, .. } if a > 0.0 => -z[self.nw - 1] / (self.mesh.c2 * a),
            _ => zero,
        };
        EndTraces { v, dnu_v }
    }

    /// `c2 (a |d_nu v(L)|^2 + b |v(L)|^2)`.
    pub fn boundary_dissipation(&self, z: &DVector<C64>) -> f64 {
        let (a, b) = self.damping();
        let t = self.end_traces(z);
        self.mesh.c2 * (a * t.dnu_v.norm_sqr() + b * t.v.norm_sqr())
    }

    /// `sqrt(metric)`, the symmetric scaling that turns the energy norm into
    /// the Euclidean one.
    pub fn metric_sqrt(&self) -> DVector<f64> {
        self.metric.map(f64::sqrt)
    }
}

/// Solves `(I - A) z = f` and returns the nodal state. The displacement
/// follows from the first row, `u = f_u + v`.
pub fn solve_identity_minus_a(gen: &GeneratorMatrix, f: &PlateState) -> Result<PlateState> {
    let rhs = gen.energy_coords(f)?;
    let m = DMatrix::<f64>::identity(gen.dim(), gen.dim()) - &gen.a;
    let z = linalg::solve_real_complex(&m, &rhs)?;
    let residual = &rhs - (&z - gen.apply(&z));
    let scale = rhs.norm();
    if residual.norm() > 1e-10 * scale.max(f64::MIN_POSITIVE) && scale > 0.0 {
        return Err(Error::Singular(format!(
            "(I - A) residual {:e} exceeds 1e-10 |f| = {:e}",
            residual.norm(),
            1e-10 * scale
        )));
    }
    let v = gen.velocity_part(&z);
    let u: Vec<C64> = f.u.iter().zip(v.iter()).map(|(a, b)| a + b).collect();
    Ok(gen.state_from(u, &z))
}
