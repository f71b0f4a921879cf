//! Crank-Nicolson time stepping, the boundary dissipation ledger and decay
//! fits.
//!
//! The stepper advances the energy coordinates `z = (w, v)` with
//! `(I - dt/2 A) z+ = (I + dt/2 A) z` and carries the displacement along
//! with the trapezoid rule `u+ = u + dt/2 (v + v+)`, which keeps
//! `w = G_h u` at every step.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{validation, Error, Result};
use crate::generator::{GeneratorMatrix, PlateState};
use crate::linalg::{BandedLu, SparseRows};
use crate::mesh::Mesh1D;

type C64 = Complex64;

/// Factored Crank-Nicolson step for one `(generator, dt)` pair.
#[derive(Debug, Clone)]
pub struct CrankNicolson {
    dt: f64,
    perm: Vec<usize>,
    explicit: SparseRows,
    implicit: BandedLu,
    dim: usize,
}

/// Orders unknowns node by node, `(w_1, v_1, w_2, v_2, ...)`, which makes
/// the generator banded.
fn interleave(gen: &GeneratorMatrix) -> Vec<usize> {
    let mut perm = Vec::with_capacity(gen.dim());
    for j in 1..gen.mesh.n {
        if j <= gen.nw {
            perm.push(j - 1);
        }
        if j <= gen.nv {
            perm.push(gen.nw + j - 1);
        }
    }
    perm
}

impl CrankNicolson {
    pub fn new(gen: &GeneratorMatrix, dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt != 0.0) {
            return Err(validation("dt", format!("must be finite and nonzero, got {dt}")));
        }
        let dim = gen.dim();
        let perm = interleave(gen);
        let mut inv = vec![0; dim];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut plus = nalgebra::DMatrix::<f64>::identity(dim, dim);
        let mut minus = nalgebra::DMatrix::<f64>::identity(dim, dim);
        for i in 0..dim {
            for j in 0..dim {
                let a = gen.a[(perm[i], perm[j])];
                if a != 0.0 {
                    plus[(i, j)] += 0.5 * dt * a;
                    minus[(i, j)] -= 0.5 * dt * a;
                }
            }
        }
        let explicit = SparseRows::from_dense(&plus);
        let identity: Vec<usize> = (0..dim).collect();
        let minus_rows = SparseRows::from_dense(&minus);
        let (kl, ku) = minus_rows.bandwidths(&identity);
        let implicit = BandedLu::factor(dim, kl, ku, minus_rows.entries())?;
        Ok(Self {
            dt,
            perm,
            explicit,
            implicit,
            dim,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Advances permuted real coordinates in place.
    fn advance(&self, x: &mut [f64], scratch: &mut [f64]) {
        self.explicit.mul(x, scratch);
        self.implicit.solve_in_place(scratch);
        x.copy_from_slice(scratch);
    }

    fn split(&self, z: &nalgebra::DVector<C64>) -> (Vec<f64>, Vec<f64>) {
        let re = self.perm.iter().map(|&k| z[k].re).collect();
        let im = self.perm.iter().map(|&k| z[k].im).collect();
        (re, im)
    }

    fn join(&self, re: &[f64], im: &[f64]) -> nalgebra::DVector<C64> {
        let mut z = nalgebra::DVector::from_element(self.dim, C64::new(0.0, 0.0));
        for (new, &old) in self.perm.iter().enumerate() {
            z[old] = C64::new(re[new], im[new]);
        }
        z
    }

    /// One step in energy coordinates.
    pub fn step_coords(&self, z: &nalgebra::DVector<C64>) -> nalgebra::DVector<C64> {
        let (mut re, mut im) = self.split(z);
        let mut scratch = vec![0.0; self.dim];
        self.advance(&mut re, &mut scratch);
        self.advance(&mut im, &mut scratch);
        self.join(&re, &im)
    }
}

/// Single Crank-Nicolson step of a nodal state. Factors the implicit matrix
/// on every call; use [`CrankNicolson`] for repeated steps.
pub fn step_crank_nicolson(gen: &GeneratorMatrix, z: &PlateState, dt: f64) -> Result<PlateState> {
    let cn = CrankNicolson::new(gen, dt)?;
    let zeta = gen.energy_coords(z)?;
    let next = cn.step_coords(&zeta);
    Ok(advance_displacement(gen, z, &zeta, &next, dt))
}

fn advance_displacement(
    gen: &GeneratorMatrix,
    state: &PlateState,
    zeta: &nalgebra::DVector<C64>,
    next: &nalgebra::DVector<C64>,
    dt: f64,
) -> PlateState {
    let v0 = gen.velocity_part(zeta);
    let v1 = gen.velocity_part(next);
    let u: Vec<C64> = state
        .u
        .iter()
        .zip(v0.iter().zip(v1.iter()))
        .map(|(u, (a, b))| u + (a + b) * (0.5 * dt))
        .collect();
    gen.state_from(u, next)
}

/// Energy history of one run.
///
/// `boundary_dissipation[n]` is the trapezoid-in-time integral of
/// `c2 (a |d_nu v(L)|^2 + b |v(L)|^2)` over `[t_{n-1}, t_n]` (zero for
/// `n = 0`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub dt: f64,
    pub times: Vec<f64>,
    pub energies: Vec<f64>,
    pub boundary_dissipation: Vec<f64>,
    pub u_trace_l: Vec<f64>,
    pub v_trace_l: Vec<f64>,
    #[serde(skip)]
    pub snapshots: Vec<(f64, PlateState)>,
}

impl TrajectoryRecord {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn total_dissipation(&self) -> f64 {
        self.boundary_dissipation.iter().sum()
    }

    /// `|E(0) - E(T) - sum of dissipation| / E(0)`.
    pub fn ledger_defect(&self) -> f64 {
        let e0 = self.energies[0];
        let et = *self.energies.last().unwrap();
        if e0 == 0.0 {
            return 0.0;
        }
        (e0 - et - self.total_dissipation()).abs() / e0
    }

    /// Largest `|E(t_n) - E(0)| / E(0)`.
    pub fn max_energy_drift(&self) -> f64 {
        let e0 = self.energies[0];
        if e0 == 0.0 {
            return 0.0;
        }
        self.energies.iter().map(|e| (e - e0).abs()).fold(0.0, f64::max) / e0
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct TrajectoryOptions {
    /// Keep a nodal snapshot every `snapshot_stride` steps (0 disables).
    pub snapshot_stride: usize,
}

pub fn run_trajectory(gen: &GeneratorMatrix, z0: &PlateState, dt: f64, horizon: f64) -> Result<TrajectoryRecord> {
    run_trajectory_with(gen, z0, dt, horizon, TrajectoryOptions::default())
}

/// Runs `round(T / dt)` steps; the step is adjusted to land exactly on `T`.
pub fn run_trajectory_with(
    gen: &GeneratorMatrix,
    z0: &PlateState,
    dt: f64,
    horizon: f64,
    opts: TrajectoryOptions,
) -> Result<TrajectoryRecord> {
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(validation("T", format!("must be positive, got {horizon}")));
    }
    if !(dt.is_finite() && dt > 0.0 && dt <= horizon) {
        return Err(validation("dt", format!("must lie in (0, T], got {dt}")));
    }
    let steps = (horizon / dt).round().max(1.0) as usize;
    let dt = horizon / steps as f64;
    let cn = CrankNicolson::new(gen, dt)?;
    let n = gen.mesh.n;

    let zeta0 = gen.energy_coords(z0)?;
    let (mut re, mut im) = cn.split(&zeta0);
    let mut u = z0.u.clone();
    u[0] = C64::new(0.0, 0.0);
    if gen.nv < n - 1 {
        u[n - 1] = C64::new(0.0, 0.0);
    }

    // positions of v_j inside the permuted vector
    let mut v_pos = vec![usize::MAX; n];
    let mut w_end_pos = None;
    let mut metric = vec![0.0; cn.dim];
    for (new, &old) in cn.perm.iter().enumerate() {
        metric[new] = gen.metric[old];
        if old >= gen.nw {
            v_pos[old - gen.nw + 1] = new;
        } else if old + 1 == n - 1 {
            w_end_pos = Some(new);
        }
    }
    let (a, b) = gen.damping();
    let c2 = gen.mesh.c2;
    let last_v = v_pos[n - 1];
    let dissipation = |re: &[f64], im: &[f64]| -> f64 {
        let mut d = 0.0;
        if last_v != usize::MAX {
            d += b * (re[last_v] * re[last_v] + im[last_v] * im[last_v]);
        }
        if let (Some(k), true) = (w_end_pos, a > 0.0) {
            let s = 1.0 / (c2 * a);
            d += a * s * s * (re[k] * re[k] + im[k] * im[k]);
        }
        c2 * d
    };
    let energy = |re: &[f64], im: &[f64]| -> f64 {
        0.5 * metric
            .iter()
            .zip(re.iter().zip(im.iter()))
            .map(|(m, (r, i))| m * (r * r + i * i))
            .sum::<f64>()
    };
    let v_at = |re: &[f64], j: usize| if v_pos[j] == usize::MAX { 0.0 } else { re[v_pos[j]] };

    let mut rec = TrajectoryRecord {
        dt,
        times: Vec::with_capacity(steps + 1),
        energies: Vec::with_capacity(steps + 1),
        boundary_dissipation: Vec::with_capacity(steps + 1),
        u_trace_l: Vec::with_capacity(steps + 1),
        v_trace_l: Vec::with_capacity(steps + 1),
        snapshots: Vec::new(),
    };
    let e0 = energy(&re, &im);
    rec.times.push(0.0);
    rec.energies.push(e0);
    rec.boundary_dissipation.push(0.0);
    rec.u_trace_l.push(u[n - 1].re);
    rec.v_trace_l.push(v_at(&re, n - 1));
    if opts.snapshot_stride > 0 {
        rec.snapshots.push((0.0, gen.state_from(u.clone(), &zeta0)));
    }

    let mut scratch = vec![0.0; cn.dim];
    let mut d_prev = dissipation(&re, &im);
    let (mut re_old, mut im_old) = (re.clone(), im.clone());
    for step in 1..=steps {
        re_old.copy_from_slice(&re);
        im_old.copy_from_slice(&im);
        cn.advance(&mut re, &mut scratch);
        cn.advance(&mut im, &mut scratch);
        for j in 1..n {
            let p = v_pos[j];
            if p != usize::MAX {
                u[j] += C64::new(re_old[p] + re[p], im_old[p] + im[p]) * (0.5 * dt);
            }
        }
        let e = energy(&re, &im);
        if e0 > 0.0 && e > 2.0 * e0 || !e.is_finite() {
            return Err(Error::Instability {
                dt,
                energy: e,
                limit: 2.0 * e0,
            });
        }
        let d = dissipation(&re, &im);
        let t = step as f64 * dt;
        rec.times.push(t);
        rec.energies.push(e);
        rec.boundary_dissipation.push(0.5 * dt * (d_prev + d));
        rec.u_trace_l.push(u[n - 1].re);
        rec.v_trace_l.push(v_at(&re, n - 1));
        d_prev = d;
        if opts.snapshot_stride > 0 && step % opts.snapshot_stride == 0 {
            rec.snapshots.push((t, gen.state_from(u.clone(), &cn.join(&re, &im))));
        }
    }
    Ok(rec)
}

/// Smooth initial state compatible with every boundary and interface
/// condition: moment `w = s (1 - s) sin(pi s)` with `s = x / L`, zero
/// velocity.
pub fn default_initial_state(mesh: &Mesh1D) -> Result<PlateState> {
    let w: Vec<C64> = mesh
        .nodes()
        .iter()
        .map(|&x| {
            let s = x / mesh.length;
            C64::new(s * (1.0 - s) * (std::f64::consts::PI * s).sin(), 0.0)
        })
        .collect();
    PlateState::from_moment(mesh, &w, vec![C64::new(0.0, 0.0); mesh.n])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TighterBound {
    Logarithmic,
    Exponential,
}

/// Fitted upper bounds `E <= C_log / ln(2 + t)^{2k}` and
/// `E <= C_exp e^{-omega t}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayFit {
    pub k: u32,
    pub c_log: f64,
    pub c_exp: f64,
    pub omega: f64,
    /// RMS of `ln(bound) - ln(E)` over samples with `E > 0`.
    pub log_residual: f64,
    pub exp_residual: f64,
    pub tighter_at_t: TighterBound,
    pub samples: usize,
}

pub fn fit_decay(record: &TrajectoryRecord, k: u32) -> Result<DecayFit> {
    if k == 0 {
        return Err(validation("k", "must be a positive integer"));
    }
    let (t, e) = (&record.times, &record.energies);
    if t.len() < 3 || t.len() != e.len() {
        return Err(Error::Data(format!(
            "need at least 3 consistent samples, got {} times and {} energies",
            t.len(),
            e.len()
        )));
    }
    let t_first = t.iter().copied().find(|&x| x > 0.0).unwrap_or(0.0);
    let t_end = *t.last().unwrap();
    if !(t_first > 0.0 && t_end / t_first >= 100.0 * (1.0 - 1e-12)) {
        return Err(Error::Data(format!(
            "record spans [{t_first}, {t_end}], fewer than two decades of time"
        )));
    }
    let slack = 1e-10 * e[0];
    for n in 1..e.len() {
        if t[n] <= t[n - 1] {
            return Err(Error::Data(format!("times not increasing at sample {n}")));
        }
        if e[n] > e[n - 1] + slack {
            return Err(Error::Data(format!(
                "energy increases at t = {}: {:e} -> {:e}",
                t[n],
                e[n - 1],
                e[n]
            )));
        }
    }
    let log_factor = |t: f64| (2.0 + t).ln().powi(2 * k as i32);
    let c_log = t.iter().zip(e).map(|(&t, &e)| e * log_factor(t)).fold(0.0, f64::max);

    let tail: Vec<(f64, f64)> = t
        .iter()
        .zip(e)
        .filter(|(&t, &e)| t >= 0.5 * t_end && e > 0.0)
        .map(|(&t, &e)| (t, e.ln()))
        .collect();
    let omega = if tail.len() >= 2 {
        let m = tail.len() as f64;
        let tm = tail.iter().map(|p| p.0).sum::<f64>() / m;
        let ym = tail.iter().map(|p| p.1).sum::<f64>() / m;
        let sxy: f64 = tail.iter().map(|p| (p.0 - tm) * (p.1 - ym)).sum();
        let sxx: f64 = tail.iter().map(|p| (p.0 - tm).powi(2)).sum();
        if sxx > 0.0 {
            -sxy / sxx
        } else {
            0.0
        }
    } else {
        0.0
    };
    let c_exp = t.iter().zip(e).map(|(&t, &e)| e * (omega * t).exp()).fold(0.0, f64::max);

    let rms = |bound: &dyn Fn(f64) -> f64| -> f64 {
        let (mut s, mut m) = (0.0, 0usize);
        for (&t, &e) in t.iter().zip(e) {
            if e > 0.0 {
                s += (bound(t).ln() - e.ln()).powi(2);
                m += 1;
            }
        }
        if m == 0 {
            0.0
        } else {
            (s / m as f64).sqrt()
        }
    };
    let log_residual = rms(&|t| c_log / log_factor(t));
    let exp_residual = rms(&|t| c_exp * (-omega * t).exp());
    let tighter_at_t = if c_exp * (-omega * t_end).exp() < c_log / log_factor(t_end) {
        TighterBound::Exponential
    } else {
        TighterBound::Logarithmic
    };
    Ok(DecayFit {
        k,
        c_log,
        c_exp,
        omega,
        log_residual,
        exp_residual,
        tighter_at_t,
        samples: t.len(),
    })
}
