//! Small dense/banded helpers shared by the time stepper and the solvers.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Sparse row storage of a real matrix, used for cheap matrix-vector
/// products with the generator.
#[derive(Debug, Clone)]
pub struct SparseRows {
    pub n: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl SparseRows {
    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let n = m.nrows();
        let rows = (0..n)
            .map(|i| {
                (0..m.ncols())
                    .filter_map(|j| {
                        let v = m[(i, j)];
                        (v != 0.0).then_some((j, v))
                    })
                    .collect()
            })
            .collect();
        Self { n, rows }
    }

    pub fn mul(&self, x: &[f64], out: &mut [f64]) {
        for (i, row) in self.rows.iter().enumerate() {
            out[i] = row.iter().map(|&(j, v)| v * x[j]).sum();
        }
    }

    /// Half-bandwidths `(lower, upper)` after applying `perm`, where
    /// `perm[new] = old`.
    pub fn bandwidths(&self, perm: &[usize]) -> (usize, usize) {
        let mut inv = vec![0; perm.len()];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let (mut kl, mut ku) = (0, 0);
        for (old_i, row) in self.rows.iter().enumerate() {
            let i = inv[old_i];
            for &(old_j, _) in row {
                let j = inv[old_j];
                if j < i {
                    kl = kl.max(i - j);
                } else {
                    ku = ku.max(j - i);
                }
            }
        }
        (kl, ku)
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(i, r)| r.iter().map(move |&(j, v)| (i, j, v)))
    }
}

/// Scalars the banded solver works with (`f64` and `Complex64`).
pub trait BandScalar: nalgebra::ComplexField<RealField = f64> + Copy + PartialEq {}
impl<T: nalgebra::ComplexField<RealField = f64> + Copy + PartialEq> BandScalar for T {}

/// LU factorization with partial pivoting of a band matrix.
///
/// Row `i` stores columns `i - kl ..= i + kl + ku` (the extra `kl` holds
/// pivoting fill-in).
#[derive(Debug, Clone)]
pub struct BandedLu<T = f64> {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<T>,
    lower: Vec<T>,
    pivots: Vec<usize>,
}

impl<T: BandScalar> BandedLu<T> {
    pub fn factor(n: usize, kl: usize, ku: usize, entries: impl Iterator<Item = (usize, usize, T)>) -> Result<Self> {
        let width = 2 * kl + ku + 1;
        let zero = nalgebra::zero::<T>();
        let mut lu = Self {
            n,
            kl,
            ku,
            width,
            data: vec![zero; n * width],
            lower: vec![zero; n * kl.max(1)],
            pivots: vec![0; n],
        };
        for (i, j, v) in entries {
            if j + kl < i || j > i + ku {
                return Err(Error::Singular(format!("entry ({i},{j}) outside band ({kl},{ku})")));
            }
            *lu.at_mut(i, j) += v;
        }
        lu.eliminate()?;
        Ok(lu)
    }

    pub fn order(&self) -> usize {
        self.n
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        i * self.width + (j + self.kl - i)
    }

    fn get(&self, i: usize, j: usize) -> T {
        if j + self.kl < i || j > i + self.kl + self.ku {
            nalgebra::zero()
        } else {
            self.data[self.idx(i, j)]
        }
    }

    fn at_mut(&mut self, i: usize, j: usize) -> &mut T {
        let k = self.idx(i, j);
        &mut self.data[k]
    }

    fn eliminate(&mut self) -> Result<()> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let zero = nalgebra::zero::<T>();
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.get(k, k).modulus();
            for i in k + 1..=last_row {
                let v = self.get(i, k).modulus();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(Error::Singular(format!("zero pivot in banded LU at column {k}")));
            }
            self.pivots[k] = p;
            let last_col = (k + kl + ku).min(n - 1);
            if p != k {
                for j in k..=last_col {
                    let a = self.get(k, j);
                    let b = self.get(p, j);
                    *self.at_mut(k, j) = b;
                    *self.at_mut(p, j) = a;
                }
            }
            let pivot = self.get(k, k);
            for i in k + 1..=last_row {
                let m = self.get(i, k) / pivot;
                self.lower[k * kl.max(1) + (i - k - 1)] = m;
                if m == zero {
                    continue;
                }
                *self.at_mut(i, k) = zero;
                for j in k + 1..=last_col {
                    let ukj = self.get(k, j);
                    if ukj != zero {
                        *self.at_mut(i, j) -= m * ukj;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn solve_in_place(&self, b: &mut [T]) {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let zero = nalgebra::zero::<T>();
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            if bk != zero {
                for i in k + 1..=(k + kl).min(n - 1) {
                    b[i] -= self.lower[k * kl.max(1) + (i - k - 1)] * bk;
                }
            }
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for j in i + 1..=(i + kl + ku).min(n - 1) {
                s -= self.get(i, j) * b[j];
            }
            b[i] = s / self.get(i, i);
        }
    }
}

/// Solves `m x = b` for complex `b` and real `m` by splitting real and
/// imaginary parts over one real LU.
pub fn solve_real_complex(m: &DMatrix<f64>, b: &DVector<Complex64>) -> Result<DVector<Complex64>> {
    let lu = m.clone().lu();
    let re = DVector::from_iterator(b.len(), b.iter().map(|z| z.re));
    let im = DVector::from_iterator(b.len(), b.iter().map(|z| z.im));
    let xr = lu
        .solve(&re)
        .ok_or_else(|| Error::Singular("real LU failed".into()))?;
    let xi = lu
        .solve(&im)
        .ok_or_else(|| Error::Singular("real LU failed".into()))?;
    Ok(DVector::from_iterator(
        b.len(),
        xr.iter().zip(xi.iter()).map(|(&r, &i)| Complex64::new(r, i)),
    ))
}

pub fn solve_complex(m: DMatrix<Complex64>, b: &DVector<Complex64>) -> Result<DVector<Complex64>> {
    let n = m.nrows();
    m.lu()
        .solve(b)
        .filter(|x| x.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
        .ok_or_else(|| Error::Singular(format!("complex LU of order {n} failed")))
}

pub fn real_times_complex(m: &DMatrix<f64>, x: &DVector<Complex64>) -> DVector<Complex64> {
    let re = DVector::from_iterator(x.len(), x.iter().map(|z| z.re));
    let im = DVector::from_iterator(x.len(), x.iter().map(|z| z.im));
    let yr = m * re;
    let yi = m * im;
    DVector::from_iterator(
        yr.len(),
        yr.iter().zip(yi.iter()).map(|(&r, &i)| Complex64::new(r, i)),
    )
}
