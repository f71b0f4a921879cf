use serde::{Deserialize, Serialize};

use crate::error::{validation, Result};

pub const MAX_DEGREE: usize = 4;

/// One monomial `c x1^i x2^j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolyTerm {
    pub i: u32,
    pub j: u32,
    pub c: f64,
}

/// Bivariate polynomial of total degree at most 4 with exact derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<PolyTerm>", into = "Vec<PolyTerm>")]
pub struct Poly2 {
    c: [[f64; MAX_DEGREE + 1]; MAX_DEGREE + 1],
}

impl TryFrom<Vec<PolyTerm>> for Poly2 {
    type Error = crate::error::Error;

    fn try_from(terms: Vec<PolyTerm>) -> Result<Self> {
        Poly2::new(&terms)
    }
}

impl From<Poly2> for Vec<PolyTerm> {
    fn from(p: Poly2) -> Self {
        p.terms()
    }
}

impl Poly2 {
    pub fn new(terms: &[PolyTerm]) -> Result<Self> {
        let mut p = Self::default();
        for t in terms {
            if (t.i + t.j) as usize > MAX_DEGREE {
                return Err(validation(
                    "psi",
                    format!("monomial x1^{} x2^{} exceeds total degree {MAX_DEGREE}", t.i, t.j),
                ));
            }
            if !t.c.is_finite() {
                return Err(validation("psi", "coefficients must be finite"));
            }
            p.c[t.i as usize][t.j as usize] += t.c;
        }
        Ok(p)
    }

    /// Shorthand from `(i, j, c)` triples.
    pub fn from_triples(terms: &[(u32, u32, f64)]) -> Result<Self> {
        let t: Vec<PolyTerm> = terms.iter().map(|&(i, j, c)| PolyTerm { i, j, c }).collect();
        Self::new(&t)
    }

    pub fn terms(&self) -> Vec<PolyTerm> {
        let mut out = Vec::new();
        for i in 0..=MAX_DEGREE {
            for j in 0..=MAX_DEGREE - i {
                if self.c[i][j] != 0.0 {
                    out.push(PolyTerm {
                        i: i as u32,
                        j: j as u32,
                        c: self.c[i][j],
                    });
                }
            }
        }
        out
    }

    pub fn coeff(&self, i: usize, j: usize) -> f64 {
        self.c[i][j]
    }

    pub fn degree(&self) -> usize {
        self.terms().iter().map(|t| (t.i + t.j) as usize).max().unwrap_or(0)
    }

    fn powers(x: f64) -> [f64; MAX_DEGREE + 1] {
        let mut p = [1.0; MAX_DEGREE + 1];
        for k in 1..=MAX_DEGREE {
            p[k] = p[k - 1] * x;
        }
        p
    }

    pub fn eval(&self, x: [f64; 2]) -> f64 {
        let (a, b) = (Self::powers(x[0]), Self::powers(x[1]));
        let mut s = 0.0;
        for i in 0..=MAX_DEGREE {
            for j in 0..=MAX_DEGREE - i {
                s += self.c[i][j] * a[i] * b[j];
            }
        }
        s
    }

    pub fn grad(&self, x: [f64; 2]) -> [f64; 2] {
        let (a, b) = (Self::powers(x[0]), Self::powers(x[1]));
        let mut g = [0.0; 2];
        for i in 0..=MAX_DEGREE {
            for j in 0..=MAX_DEGREE - i {
                let c = self.c[i][j];
                if c == 0.0 {
                    continue;
                }
                if i > 0 {
                    g[0] += c * i as f64 * a[i - 1] * b[j];
                }
                if j > 0 {
                    g[1] += c * j as f64 * a[i] * b[j - 1];
                }
            }
        }
        g
    }

    pub fn hess(&self, x: [f64; 2]) -> [[f64; 2]; 2] {
        let (a, b) = (Self::powers(x[0]), Self::powers(x[1]));
        let mut h = [[0.0; 2]; 2];
        for i in 0..=MAX_DEGREE {
            for j in 0..=MAX_DEGREE - i {
                let c = self.c[i][j];
                if c == 0.0 {
                    continue;
                }
                let (fi, fj) = (i as f64, j as f64);
                if i > 1 {
                    h[0][0] += c * fi * (fi - 1.0) * a[i - 2] * b[j];
                }
                if j > 1 {
                    h[1][1] += c * fj * (fj - 1.0) * a[i] * b[j - 2];
                }
                if i > 0 && j > 0 {
                    h[0][1] += c * fi * fj * a[i - 1] * b[j - 1];
                }
            }
        }
        h[1][0] = h[0][1];
        h
    }
}

pub(crate) fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

pub(crate) fn quad(m: [[f64; 2]; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * (m[0][0] * b[0] + m[0][1] * b[1]) + a[1] * (m[1][0] * b[0] + m[1][1] * b[1])
}

pub(crate) fn norm(a: [f64; 2]) -> f64 {
    a[0].hypot(a[1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_high_degree() {
        assert!(Poly2::from_triples(&[(3, 2, 1.0)]).is_err());
        assert!(Poly2::from_triples(&[(2, 2, 1.0), (4, 0, -1.0)]).is_ok());
    }

    #[test]
    fn exact_derivatives_of_a_saddle() {
        let p = Poly2::from_triples(&[(2, 0, 1.0), (0, 2, -1.0)]).unwrap();
        assert_eq!(p.eval([2.0, 1.0]), 3.0);
        assert_eq!(p.grad([2.0, 1.0]), [4.0, -2.0]);
        assert_eq!(p.hess([0.3, 0.1]), [[2.0, 0.0], [0.0, -2.0]]);
    }

    #[test]
    fn serde_round_trip() {
        let p = Poly2::from_triples(&[(1, 0, 1.5), (1, 1, -2.0), (0, 4, 0.25)]).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        let q: Poly2 = serde_json::from_str(&s).unwrap();
        assert_eq!(p, q);
        assert!(serde_json::from_str::<Poly2>(r#"[{"i":5,"j":0,"c":1.0}]"#).is_err());
    }

    fn arb_poly() -> impl Strategy<Value = Poly2> {
        proptest::collection::vec(-2.0f64..2.0, 15).prop_map(|cs| {
            let mut terms = Vec::new();
            let mut k = 0;
            for i in 0..=4u32 {
                for j in 0..=4 - i {
                    terms.push(PolyTerm { i, j, c: cs[k] });
                    k += 1;
                }
            }
            Poly2::new(&terms).unwrap()
        })
    }

    proptest! {
        #[test]
        fn derivatives_match_finite_differences(p in arb_poly(), x in -1.0f64..1.0, y in -1.0f64..1.0) {
            let e = 1e-5;
            let g = p.grad([x, y]);
            let fd = [
                (p.eval([x + e, y]) - p.eval([x - e, y])) / (2.0 * e),
                (p.eval([x, y + e]) - p.eval([x, y - e])) / (2.0 * e),
            ];
            let scale = 1.0 + g[0].abs() + g[1].abs();
            prop_assert!((g[0] - fd[0]).abs() <= 1e-6 * scale);
            prop_assert!((g[1] - fd[1]).abs() <= 1e-6 * scale);
            let h = p.hess([x, y]);
            let gx = p.grad([x + e, y]);
            let gm = p.grad([x - e, y]);
            let hs = 1.0 + h[0][0].abs() + h[0][1].abs();
            prop_assert!((h[0][0] - (gx[0] - gm[0]) / (2.0 * e)).abs() <= 1e-6 * hs);
            prop_assert!((h[1][0] - (gx[1] - gm[1]) / (2.0 * e)).abs() <= 1e-6 * hs);
        }
    }
}
