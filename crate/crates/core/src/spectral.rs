//! Spectrum, resolvent norms and the factorized resolvent solve.
//!
//! Eigenvalues `mu` belong to the generator `A`; resolvent quantities are
//! phrased for `lambda I + i A`, whose singular points are the images
//! `lambda = -i mu` (so `Re lambda = Im mu` and `Im lambda = -Re mu`).
//! Norms are taken in the energy metric through the similarity
//! `S = diag(sqrt(metric))`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{validation, Error, Result};
use crate::generator::{apply_g_with_slope, EndCondition, GeneratorMatrix, PlateState};
use crate::linalg::{self, BandedLu};
use crate::mesh::Mesh1D;

type C64 = Complex64;

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Dense eigensolve budget.
pub const MAX_DENSE_ORDER: usize = 2000;

/// Constants of the eigenvalue-free region
/// `{|Im lambda| <= c1 exp(-c2 |Re lambda|), |lambda| > c3}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionFit {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    /// Raw least-squares slope of `ln|Re mu|` against `|Im mu|`.
    pub slope: f64,
    pub modes_used: usize,
}

impl RegionFit {
    pub fn contains(&self, lambda: C64) -> bool {
        lambda.norm() > self.c3 && lambda.im.abs() <= self.c1 * (-self.c2 * lambda.re.abs()).exp()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralReport {
    /// Eigenvalues of `A`, sorted by imaginary then real part.
    #[serde(with = "complex_list")]
    pub eigenvalues: Vec<C64>,
    pub spectral_abscissa: f64,
    /// `(Im mu, Re mu)` sorted by `|Im mu|`.
    pub mode_table: Vec<(f64, f64)>,
    pub fitted_region: RegionFit,
}

impl SpectralReport {
    /// Images `lambda = -i mu` of the eigenvalues.
    pub fn lambda_images(&self) -> Vec<C64> {
        self.eigenvalues.iter().map(|&mu| -I * mu).collect()
    }

    /// Largest distance from a conjugated eigenvalue to the nearest
    /// eigenvalue.
    pub fn conjugation_defect(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|mu| {
                let c = mu.conj();
                self.eigenvalues.iter().map(|nu| (nu - c).norm()).fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    }

    /// Eigenvalue images strictly inside the fitted region (should be empty).
    pub fn region_violations(&self) -> Vec<C64> {
        self.lambda_images()
            .into_iter()
            .filter(|&l| self.fitted_region.contains(l))
            .collect()
    }
}

mod complex_list {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[Complex64], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Complex64>, D::Error> {
        let v = Vec::<[f64; 2]>::deserialize(d)?;
        Ok(v.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
    }
}

pub fn compute_spectrum(gen: &GeneratorMatrix) -> Result<SpectralReport> {
    compute_spectrum_with_cutoff(gen, 1.0)
}

pub fn compute_spectrum_with_cutoff(gen: &GeneratorMatrix, c3: f64) -> Result<SpectralReport> {
    let n = gen.dim();
    if n > MAX_DENSE_ORDER {
        return Err(validation(
            "N",
            format!("generator order {n} exceeds the dense eigensolve budget {MAX_DENSE_ORDER}"),
        ));
    }
    if !(c3.is_finite() && c3 >= 0.0) {
        return Err(validation("C3", format!("must be nonnegative, got {c3}")));
    }
    let schur = nalgebra::linalg::Schur::try_new(gen.a.clone(), 1e-15, 100 * n.max(10)).ok_or(Error::Eigensolver(n))?;
    let mut eigenvalues: Vec<C64> = schur.complex_eigenvalues().iter().copied().collect();
    if eigenvalues.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Eigensolver(n));
    }
    eigenvalues.sort_by(|a, b| a.im.total_cmp(&b.im).then(a.re.total_cmp(&b.re)));
    let spectral_abscissa = eigenvalues.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    let mut mode_table: Vec<(f64, f64)> = eigenvalues.iter().map(|z| (z.im, z.re)).collect();
    mode_table.sort_by(|a, b| a.0.abs().total_cmp(&b.0.abs()).then(a.0.total_cmp(&b.0)));
    let fitted_region = fit_region(&eigenvalues, c3);
    Ok(SpectralReport {
        eigenvalues,
        spectral_abscissa,
        mode_table,
        fitted_region,
    })
}

/// Least squares of `ln|Re mu|` against `|Im mu|` over modes with
/// `|Im mu| > c3`; `c2 = max(-slope, 0)` and `c1` is half the smallest
/// `|Re mu| exp(c2 |Im mu|)` over all modes with `|mu| > c3`.
fn fit_region(eigs: &[C64], c3: f64) -> RegionFit {
    let pts: Vec<(f64, f64)> = eigs
        .iter()
        .filter(|z| z.im.abs() > c3 && z.re.abs() > 0.0)
        .map(|z| (z.im.abs(), z.re.abs().ln()))
        .collect();
    let slope = if pts.len() >= 2 {
        let m = pts.len() as f64;
        let xm = pts.iter().map(|p| p.0).sum::<f64>() / m;
        let ym = pts.iter().map(|p| p.1).sum::<f64>() / m;
        let sxx: f64 = pts.iter().map(|p| (p.0 - xm).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - xm) * (p.1 - ym)).sum();
        if sxx > 0.0 {
            sxy / sxx
        } else {
            0.0
        }
    } else {
        0.0
    };
    let c2 = (-slope).max(0.0);
    let c1 = 0.5
        * eigs
            .iter()
            .filter(|z| z.norm() > c3)
            .map(|z| z.re.abs() * (c2 * z.im.abs()).exp())
            .fold(f64::INFINITY, f64::min);
    RegionFit {
        c1: if c1.is_finite() { c1 } else { 0.0 },
        c2,
        c3,
        slope,
        modes_used: pts.len(),
    }
}

/// `S (lambda I + i A) S^{-1}` in node-interleaved order as band entries.
fn scaled_shifted_entries(gen: &GeneratorMatrix, lambda: C64) -> (Vec<usize>, Vec<(usize, usize, C64)>, usize, usize) {
    let dim = gen.dim();
    let mut perm = Vec::with_capacity(dim);
    for j in 1..gen.mesh.n {
        if j <= gen.nw {
            perm.push(j - 1);
        }
        if j <= gen.nv {
            perm.push(gen.nw + j - 1);
        }
    }
    let s = gen.metric_sqrt();
    let mut entries = Vec::new();
    let (mut kl, mut ku) = (0, 0);
    for (r, &i) in perm.iter().enumerate() {
        for (c, &j) in perm.iter().enumerate() {
            let a = gen.a[(i, j)];
            let mut v = I * (a * s[i] / s[j]);
            if i == j {
                v += lambda;
            }
            if v != C64::new(0.0, 0.0) {
                if c < r {
                    kl = kl.max(r - c);
                } else {
                    ku = ku.max(c - r);
                }
                entries.push((r, c, v));
            }
        }
    }
    (perm, entries, kl, ku)
}

/// `||(lambda I + i A)^{-1}||` in the energy norm, `f64::INFINITY` when the
/// shifted matrix is numerically singular.
///
/// The smallest singular value is found by block inverse iteration on
/// `(M^H M)^{-1}` with banded factorizations of `M` and `M^H`; the dense
/// SVD is used when the iteration stalls.
pub fn resolvent_norm(gen: &GeneratorMatrix, lambda: C64) -> f64 {
    let dim = gen.dim();
    let (_, entries, kl, ku) = scaled_shifted_entries(gen, lambda);
    let row_norm = {
        let mut rows = vec![0.0; dim];
        for &(r, _, v) in &entries {
            rows[r] += v.norm();
        }
        rows.into_iter().fold(0.0, f64::max)
    };
    let lu = match BandedLu::factor(dim, kl, ku, entries.iter().copied()) {
        Ok(lu) => lu,
        Err(_) => return f64::INFINITY,
    };
    let lu_h = match BandedLu::factor(dim, ku, kl, entries.iter().map(|&(r, c, v)| (c, r, v.conj()))) {
        Ok(lu) => lu,
        Err(_) => return f64::INFINITY,
    };
    match inverse_norm_iteration(&lu, &lu_h, dim) {
        Some(inv_norm) => {
            if !inv_norm.is_finite() || 1.0 / inv_norm <= 1e-14 * row_norm {
                f64::INFINITY
            } else {
                inv_norm
            }
        }
        None => dense_resolvent_norm(gen, lambda),
    }
}

fn inverse_norm_iteration(lu: &BandedLu<C64>, lu_h: &BandedLu<C64>, dim: usize) -> Option<f64> {
    let p = dim.min(8);
    let mut x = DMatrix::<C64>::from_fn(dim, p, |i, k| {
        let t = (i as f64 + 1.0) * (k as f64 + 1.0);
        C64::new((0.37 * t).sin() + 0.1 * k as f64, (0.71 * t).cos())
    });
    x = x.qr().q();
    let mut prev = 0.0;
    for _ in 0..2000 {
        let mut y = x.clone();
        for mut col in y.column_iter_mut() {
            lu.solve_in_place(col.as_mut_slice());
        }
        let est = y.clone().singular_values().max();
        if !est.is_finite() {
            return Some(f64::INFINITY);
        }
        if (est - prev).abs() <= 1e-13 * est {
            return Some(est);
        }
        prev = est;
        for mut col in y.column_iter_mut() {
            lu_h.solve_in_place(col.as_mut_slice());
        }
        if y.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Some(f64::INFINITY);
        }
        x = y.qr().q();
    }
    None
}

/// Reference value from a dense SVD.
pub fn dense_resolvent_norm(gen: &GeneratorMatrix, lambda: C64) -> f64 {
    let m = scaled_shifted_dense(gen, lambda);
    let s = m.singular_values();
    let (min, max) = (s.min(), s.max());
    if min <= 1e-14 * max {
        f64::INFINITY
    } else {
        1.0 / min
    }
}

/// Dense `S (lambda I + i A) S^{-1}` in the original ordering.
pub fn scaled_shifted_dense(gen: &GeneratorMatrix, lambda: C64) -> DMatrix<C64> {
    let s = gen.metric_sqrt();
    DMatrix::from_fn(gen.dim(), gen.dim(), |i, j| {
        let v = I * (gen.a[(i, j)] * s[i] / s[j]);
        if i == j {
            v + lambda
        } else {
            v
        }
    })
}

/// Rectangular scan window in the lambda plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanSpec {
    pub re_range: [f64; 2],
    pub im_range: [f64; 2],
    /// Points along the real and imaginary directions.
    pub resolution: [usize; 2],
}

pub const MAX_SCAN_POINTS: usize = 10_000;

impl ScanSpec {
    fn axis(range: [f64; 2], n: usize) -> Vec<f64> {
        if n == 1 {
            return vec![0.5 * (range[0] + range[1])];
        }
        (0..n)
            .map(|k| range[0] + (range[1] - range[0]) * k as f64 / (n - 1) as f64)
            .collect()
    }

    pub fn re_axis(&self) -> Vec<f64> {
        Self::axis(self.re_range, self.resolution[0])
    }

    pub fn im_axis(&self) -> Vec<f64> {
        Self::axis(self.im_range, self.resolution[1])
    }

    pub fn validate(&self) -> Result<()> {
        let [nr, ni] = self.resolution;
        if nr == 0 || ni == 0 {
            return Err(validation("scan.resolution", "must be positive"));
        }
        if nr * ni > MAX_SCAN_POINTS {
            return Err(validation(
                "scan.resolution",
                format!("{} points exceed the budget of {MAX_SCAN_POINTS}", nr * ni),
            ));
        }
        for (name, r) in [("scan.re_range", self.re_range), ("scan.im_range", self.im_range)] {
            if !(r[0].is_finite() && r[1].is_finite() && r[0] <= r[1]) {
                return Err(validation(name, format!("invalid interval {r:?}")));
            }
        }
        Ok(())
    }
}

/// `ln ||R(lambda)|| <= c + c_prime |Re lambda|` along the real axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub c: f64,
    pub c_prime: f64,
    pub raw_slope: f64,
    pub finite_points: usize,
    pub singular_points: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResolventScan {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
    /// Row-major, imaginary index outer: `norms[j * re.len() + i]`.
    pub norms: Vec<f64>,
    /// Norms along `Im lambda = 0` at the `re` abscissae.
    pub real_axis: Vec<f64>,
    pub growth_fit: GrowthFit,
}

impl ResolventScan {
    pub fn norm_at(&self, i: usize, j: usize) -> f64 {
        self.norms[j * self.re.len() + i]
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.im
            .iter()
            .enumerate()
            .flat_map(move |(j, &y)| self.re.iter().enumerate().map(move |(i, &x)| (x, y, self.norm_at(i, j))))
    }

    /// Grid points with infinite norm inside the region.
    pub fn region_violations(&self, region: &RegionFit) -> Vec<(f64, f64)> {
        self.points()
            .filter(|&(x, y, n)| n.is_infinite() && region.contains(C64::new(x, y)))
            .map(|(x, y, _)| (x, y))
            .collect()
    }

    /// Interior local maxima of the real-axis profile.
    pub fn real_axis_peaks(&self) -> Vec<f64> {
        let r = &self.real_axis;
        (1..r.len().saturating_sub(1))
            .filter(|&k| r[k] >= r[k - 1] && r[k] >= r[k + 1] && (r[k] > r[k - 1] || r[k] > r[k + 1]))
            .map(|k| self.re[k])
            .collect()
    }
}

pub fn scan_resolvent(gen: &GeneratorMatrix, spec: &ScanSpec) -> Result<ResolventScan> {
    spec.validate()?;
    let re = spec.re_axis();
    let im = spec.im_axis();
    let grid: Vec<C64> = im.iter().flat_map(|&y| re.iter().map(move |&x| C64::new(x, y))).collect();
    let norms: Vec<f64> = grid.par_iter().map(|&l| resolvent_norm(gen, l)).collect();
    let real_axis: Vec<f64> = re.par_iter().map(|&x| resolvent_norm(gen, C64::new(x, 0.0))).collect();
    let growth_fit = fit_growth(&re, &real_axis);
    Ok(ResolventScan {
        re,
        im,
        norms,
        real_axis,
        growth_fit,
    })
}

fn fit_growth(re: &[f64], norms: &[f64]) -> GrowthFit {
    let pts: Vec<(f64, f64)> = re
        .iter()
        .zip(norms)
        .filter(|(_, n)| n.is_finite() && **n > 0.0)
        .map(|(x, n)| (x.abs(), n.ln()))
        .collect();
    let singular_points = norms.len() - pts.len();
    let raw_slope = if pts.len() >= 2 {
        let m = pts.len() as f64;
        let xm = pts.iter().map(|p| p.0).sum::<f64>() / m;
        let ym = pts.iter().map(|p| p.1).sum::<f64>() / m;
        let sxx: f64 = pts.iter().map(|p| (p.0 - xm).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - xm) * (p.1 - ym)).sum();
        if sxx > 0.0 {
            sxy / sxx
        } else {
            0.0
        }
    } else {
        0.0
    };
    let c_prime = raw_slope.max(0.0);
    let c = pts.iter().map(|p| p.1 - c_prime * p.0).fold(f64::NEG_INFINITY, f64::max);
    GrowthFit {
        c: if c.is_finite() { c } else { 0.0 },
        c_prime,
        raw_slope,
        finite_points: pts.len(),
        singular_points,
    }
}

/// `Phi = i G - lambda F` at every node.
pub fn forcing(lambda: C64, data: &PlateState) -> Vec<C64> {
    data.u.iter().zip(&data.v).map(|(f, g)| I * g - lambda * f).collect()
}

fn require_feedback(gen: &GeneratorMatrix) -> Result<(f64, f64)> {
    match gen.end {
        EndCondition::Feedback { a, b } => Ok((a, b)),
        EndCondition::Hinged => Err(Error::Unsupported(
            "the factorized resolvent is implemented for the feedback end only".into(),
        )),
    }
}

/// Solves `(lambda I + i A) z = (F, G)` through the factorization
/// `alpha^2 D^4 - lambda^2 = (alpha D2 + s lambda)(alpha D2 - s lambda)`,
/// `s = sign(Re lambda)`.
///
/// `data.u` holds `F` (with its end slope in `data.slope`) and `data.v`
/// holds `G`. The unknowns are `u_1..u_N` and `q = alpha D2 u - s lambda u`
/// at `1..N`, where index `N` is the ghost node beyond `L`; the two
/// boundary rows carry the moment and force feedback conditions.
pub fn factorized_resolvent_solve(gen: &GeneratorMatrix, lambda: C64, data: &PlateState) -> Result<PlateState> {
    let (a, b) = require_feedback(gen)?;
    let mesh = &gen.mesh;
    mesh.check_len(data.u.len())?;
    mesh.check_len(data.v.len())?;
    if lambda.re == 0.0 || !lambda.re.is_finite() || !lambda.im.is_finite() {
        return Err(validation("lambda", format!("needs a finite nonzero real part, got {lambda}")));
    }
    let sigma = lambda.re.signum();
    let sl = lambda * sigma;
    let n = mesh.n;
    let big = n; // ghost node index; unknowns live at 1..=big
    let h = mesh.h;
    let h2 = h * h;
    let c2 = mesh.c2;
    let dim = 2 * big;
    let ui = |j: usize| j - 1;
    let qi = |j: usize| big + j - 1;
    let phi = forcing(lambda, data);
    let mut m = DMatrix::<C64>::zeros(dim, dim);
    let mut rhs = DVector::<C64>::zeros(dim);
    let mut row = 0;
    for j in 1..n {
        let s = mesh.effective_alpha(j) / h2;
        // alpha D2 u - s lambda u - q = 0
        if j > 1 {
            m[(row, ui(j - 1))] += C64::from(s);
        }
        m[(row, ui(j))] += C64::from(-2.0 * s) - sl;
        m[(row, ui(j + 1))] += C64::from(s);
        m[(row, qi(j))] -= C64::from(1.0);
        row += 1;
        // alpha D2 q + s lambda q = Phi
        if j > 1 {
            m[(row, qi(j - 1))] += C64::from(s);
        }
        m[(row, qi(j))] += C64::from(-2.0 * s) + sl;
        m[(row, qi(j + 1))] += C64::from(s);
        rhs[row] = phi[j];
        row += 1;
    }
    let l = big - 1;
    // w(L) = c2 a v_x(L) with w = -(q + s lambda u), v = i lambda u - i F
    m[(row, qi(l))] += C64::from(-1.0);
    m[(row, ui(l))] += -sl;
    m[(row, ui(big))] += -c2 * a * I * lambda / (2.0 * h);
    if l >= 2 {
        m[(row, ui(l - 1))] += c2 * a * I * lambda / (2.0 * h);
    }
    rhs[row] = -c2 * a * I * data.slope;
    row += 1;
    // w_x(L) = -c2 b v(L)
    m[(row, qi(big))] += C64::from(-1.0);
    m[(row, ui(big))] += -sl;
    if l >= 2 {
        m[(row, qi(l - 1))] += C64::from(1.0);
        m[(row, ui(l - 1))] += sl;
    }
    m[(row, ui(l))] += 2.0 * h * c2 * b * I * lambda;
    rhs[row] = 2.0 * h * c2 * b * I * data.u[n - 1];
    row += 1;
    debug_assert_eq!(row, dim);

    let x = linalg::solve_complex(m, &rhs)
        .map_err(|_| Error::Singular(format!("lambda = {lambda} is in the discrete spectrum")))?;
    let zero = C64::new(0.0, 0.0);
    let mut u = vec![zero; n];
    for j in 1..n {
        u[j] = x[ui(j)];
    }
    let ghost = x[ui(big)];
    let slope = (ghost - u[n - 2]) / (2.0 * h);
    let mut v: Vec<C64> = u.iter().zip(&data.u).map(|(u, f)| I * lambda * u - I * f).collect();
    v[0] = zero;
    if a == 0.0 && gen.nv < n - 1 {
        v[n - 1] = zero;
    }
    Ok(PlateState { u, v, slope })
}

/// Reference path: solves `(lambda I + i A) zeta = (G_h F, G)` in energy
/// coordinates and recovers `u = (F - i v) / lambda`.
pub fn direct_resolvent_solve(gen: &GeneratorMatrix, lambda: C64, data: &PlateState) -> Result<PlateState> {
    let mesh = &gen.mesh;
    mesh.check_len(data.u.len())?;
    mesh.check_len(data.v.len())?;
    if lambda == C64::new(0.0, 0.0) {
        return Err(validation("lambda", "must be nonzero to recover the displacement"));
    }
    let rhs = gen.energy_coords(data)?;
    let dim = gen.dim();
    let m = DMatrix::<C64>::from_fn(dim, dim, |i, j| {
        let v = I * gen.a[(i, j)];
        if i == j {
            v + lambda
        } else {
            v
        }
    });
    let z = linalg::solve_complex(m, &rhs)
        .map_err(|_| Error::Singular(format!("lambda = {lambda} is in the discrete spectrum")))?;
    let v = gen.velocity_part(&z);
    let u: Vec<C64> = data.u.iter().zip(&v).map(|(f, v)| (f - I * v) / lambda).collect();
    Ok(gen.state_from(u, &z))
}

/// Relative distance between two solutions over `u`, `v` and the end slope.
pub fn relative_difference(x: &PlateState, y: &PlateState) -> f64 {
    let diff: f64 = x
        .u
        .iter()
        .zip(&y.u)
        .chain(x.v.iter().zip(&y.v))
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        + (x.slope - y.slope).norm_sqr();
    let scale = y.norm_sqr();
    if scale == 0.0 {
        diff.sqrt()
    } else {
        (diff / scale).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceReport {
    pub lambda_re: f64,
    pub lambda_im: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

/// Discrete `H^2` norm over the nodes of the second phase.
pub fn h2_norm_phase2(mesh: &Mesh1D, f: &[C64], slope: C64) -> f64 {
    let n = mesh.n;
    let p = mesh.interface_index;
    let h = mesh.h;
    let w = apply_g_with_slope(mesh, f, slope);
    let mut s = 0.0;
    for j in p..n {
        let d1 = if j + 1 < n {
            (f[j + 1] - f[j - 1]) / (2.0 * h)
        } else {
            slope
        };
        let d2 = w[j] / mesh.effective_alpha(j);
        let wt = if j == p || j == n - 1 { 0.5 * h } else { h };
        s += wt * (f[j].norm_sqr() + d1.norm_sqr() + d2.norm_sqr());
    }
    s.sqrt()
}

/// Evaluates both sides of the boundary trace estimate on the solved
/// resolvent problem:
///
/// `|Re l| (a |d_nu u(L)|^2 + b |u(L)|^2)` against
/// `|Phi|_H |u|_H + 2 |Re l Im l|^2 |u|_H^2 + |F|_{H^2} |u|_{H^2}`.
pub fn trace_estimate_check(gen: &GeneratorMatrix, lambda: C64, data: &PlateState) -> Result<TraceReport> {
    let (a, b) = require_feedback(gen)?;
    let sol = factorized_resolvent_solve(gen, lambda, data)?;
    Ok(trace_report(gen, lambda, data, &sol, a, b)?)
}

fn trace_report(gen: &GeneratorMatrix, lambda: C64, data: &PlateState, sol: &PlateState, a: f64, b: f64) -> Result<TraceReport> {
    let mesh = &gen.mesh;
    let n = mesh.n;
    let lhs = lambda.re.abs() * (a * sol.slope.norm_sqr() + b * sol.u[n - 1].norm_sqr());
    let phi = forcing(lambda, data);
    let nu = crate::generator::norm_h(mesh, &sol.u);
    let rhs = crate::generator::norm_h(mesh, &phi) * nu
        + 2.0 * (lambda.re * lambda.im).powi(2) * nu * nu
        + h2_norm_phase2(mesh, &data.u, data.slope) * h2_norm_phase2(mesh, &sol.u, sol.slope);
    let ratio = if rhs > 0.0 {
        lhs / rhs
    } else if lhs == 0.0 {
        0.0
    } else {
        return Err(Error::Trace(format!(
            "trace estimate violated at lambda = {lambda}: lhs = {lhs:e} with vanishing rhs"
        )));
    };
    Ok(TraceReport {
        lambda_re: lambda.re,
        lambda_im: lambda.im,
        lhs,
        rhs,
        ratio,
    })
}
