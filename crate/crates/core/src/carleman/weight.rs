use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::poly::{dot, norm, quad, Poly2};
use crate::error::{validation, Result};

/// Carleman weight `phi = exp(lambda psi)` built on a polynomial `psi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightFunction {
    pub psi: Poly2,
    pub lambda: f64,
}

impl WeightFunction {
    pub fn new(psi: Poly2, lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(validation("lambda_c", format!("must be positive, got {lambda}")));
        }
        Ok(Self { psi, lambda })
    }

    pub fn phi(&self, x: [f64; 2]) -> f64 {
        (self.lambda * self.psi.eval(x)).exp()
    }

    pub fn grad_phi(&self, x: [f64; 2]) -> [f64; 2] {
        let s = self.lambda * self.phi(x);
        let g = self.psi.grad(x);
        [s * g[0], s * g[1]]
    }

    /// `phi'' = phi (lambda^2 grad psi grad psi^T + lambda psi'')`.
    pub fn hess_phi(&self, x: [f64; 2]) -> [[f64; 2]; 2] {
        let p = self.phi(x);
        let l = self.lambda;
        let g = self.psi.grad(x);
        let h = self.psi.hess(x);
        let mut out = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = p * (l * l * g[i] * g[j] + l * h[i][j]);
            }
        }
        out
    }
}

/// `p_phi(x, xi) = |xi|^2 - |grad phi|^2 + 2i <xi, grad phi>`.
pub fn conjugated_symbol(w: &WeightFunction, x: [f64; 2], xi: [f64; 2]) -> Complex64 {
    let g = w.grad_phi(x);
    Complex64::new(dot(xi, xi) - dot(g, g), 2.0 * dot(xi, g))
}

/// General Hamiltonian bracket `{Re p_phi, Im p_phi} = 4 (xi^T phi'' xi +
/// grad phi^T phi'' grad phi)`.
pub fn poisson_bracket(w: &WeightFunction, x: [f64; 2], xi: [f64; 2]) -> f64 {
    let h = w.hess_phi(x);
    let g = w.grad_phi(x);
    4.0 * (quad(h, xi, xi) + quad(h, g, g))
}

/// The three terms of the closed form valid on the characteristic set:
/// `4 lambda phi xi^T psi'' xi`, `4 phi^3 lambda^4 |grad psi|^4` and
/// `4 phi^3 lambda^3 grad psi^T psi'' grad psi`.
pub fn closed_form_terms(w: &WeightFunction, x: [f64; 2], xi: [f64; 2]) -> [f64; 3] {
    let l = w.lambda;
    let p = w.phi(x);
    let g = w.psi.grad(x);
    let h = w.psi.hess(x);
    let g2 = dot(g, g);
    [
        4.0 * l * p * quad(h, xi, xi),
        4.0 * p.powi(3) * l.powi(4) * g2 * g2,
        4.0 * p.powi(3) * l.powi(3) * quad(h, g, g),
    ]
}

/// Closed form of the bracket on `p_phi = 0`.
pub fn closed_form_bracket(w: &WeightFunction, x: [f64; 2], xi: [f64; 2]) -> f64 {
    closed_form_terms(w, x, xi).iter().sum()
}

/// Variant with `|grad psi|^2` in the leading term, evaluated only to report
/// its discrepancy against the general bracket.
pub fn printed_form_bracket(w: &WeightFunction, x: [f64; 2], xi: [f64; 2]) -> f64 {
    let t = closed_form_terms(w, x, xi);
    let g2 = dot(w.psi.grad(x), w.psi.grad(x));
    let lead = if g2 > 0.0 { t[1] / g2 } else { 0.0 };
    t[0] + lead + t[2]
}

/// Characteristic covectors at `x`: zeros of `Im p_phi` on the circle
/// `|xi| = |grad phi|` (where `Re p_phi` vanishes), located from `n_xi`
/// angular samples and refined by bisection. Empty when `grad phi = 0`.
pub fn characteristic_covectors(w: &WeightFunction, x: [f64; 2], n_xi: usize) -> Vec<[f64; 2]> {
    let g = w.grad_phi(x);
    let r = norm(g);
    if r == 0.0 || !r.is_finite() || n_xi < 2 {
        return Vec::new();
    }
    let at = |t: f64| [r * t.cos(), r * t.sin()];
    let im = |t: f64| dot(at(t), g);
    let step = std::f64::consts::TAU / n_xi as f64;
    let mut out = Vec::new();
    for k in 0..n_xi {
        let (mut a, mut b) = (k as f64 * step, (k + 1) as f64 * step);
        let (mut fa, fb) = (im(a), im(b));
        if fa == 0.0 {
            out.push(at(a));
            continue;
        }
        if fa.signum() == fb.signum() || fb == 0.0 {
            continue;
        }
        for _ in 0..64 {
            let m = 0.5 * (a + b);
            let fm = im(m);
            if fm == 0.0 {
                a = m;
                b = m;
                break;
            }
            if fm.signum() == fa.signum() {
                a = m;
                fa = fm;
            } else {
                b = m;
            }
        }
        let t = if im(a).abs() <= im(b).abs() { a } else { b };
        out.push(at(t));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear(a: f64, b: f64, lambda: f64) -> WeightFunction {
        WeightFunction::new(Poly2::from_triples(&[(1, 0, a), (0, 1, b)]).unwrap(), lambda).unwrap()
    }

    #[test]
    fn symbol_examples() {
        let flat = WeightFunction::new(Poly2::from_triples(&[(0, 0, 3.0)]).unwrap(), 2.0).unwrap();
        let p = conjugated_symbol(&flat, [0.2, 0.4], [1.0, 2.0]);
        assert_eq!(p, Complex64::new(5.0, 0.0));
        let w = linear(1.0, 0.0, 2.0);
        assert_eq!(conjugated_symbol(&w, [0.0, 0.0], [0.0, 3.0]), Complex64::new(5.0, 0.0));
        assert!(conjugated_symbol(&w, [0.0, 0.0], [0.0, 2.0]).norm() < 1e-15);
    }

    #[test]
    fn bracket_of_constant_is_zero() {
        let w = WeightFunction::new(Poly2::from_triples(&[(0, 0, 1.0)]).unwrap(), 1.5).unwrap();
        assert_eq!(poisson_bracket(&w, [0.3, 0.7], [1.0, -1.0]), 0.0);
    }

    #[test]
    fn linear_weight_bracket_has_fourth_power() {
        let w = linear(0.6, 0.8, 3.0);
        let x = [0.2, 0.5];
        for xi in characteristic_covectors(&w, x, 8) {
            let general = poisson_bracket(&w, x, xi);
            let psi = w.psi.eval(x);
            let expected = 4.0 * (3.0 * 3.0 * psi).exp() * 3.0f64.powi(4);
            assert!((general - expected).abs() <= 1e-10 * expected);
        }
        // with |grad psi| = 2 the printed exponent is off by |grad psi|^2
        let w = linear(2.0, 0.0, 1.0);
        let xi = characteristic_covectors(&w, [0.0, 0.0], 8)[0];
        let general = poisson_bracket(&w, [0.0, 0.0], xi);
        assert!((general - 64.0).abs() < 1e-10);
        assert!((printed_form_bracket(&w, [0.0, 0.0], xi) - 16.0).abs() < 1e-10);
    }

    #[test]
    fn convex_quadratic_dual_path() {
        let w = WeightFunction::new(Poly2::from_triples(&[(2, 0, 0.5), (0, 2, 0.5)]).unwrap(), 1.0).unwrap();
        // phi(1, 0) = e^(1/2), grad phi = (e^(1/2), 0)
        let xi = [0.0, 0.5f64.exp()];
        assert!(conjugated_symbol(&w, [1.0, 0.0], xi).norm() < 1e-12);
        let g = poisson_bracket(&w, [1.0, 0.0], xi);
        let c = closed_form_bracket(&w, [1.0, 0.0], xi);
        assert!((g - c).abs() <= 1e-10 * g.abs());
    }

    #[test]
    fn sampler_emits_two_characteristic_points() {
        let w = WeightFunction::new(Poly2::from_triples(&[(2, 0, 1.0), (1, 1, 0.3), (0, 1, 1.0)]).unwrap(), 2.0).unwrap();
        for x in [[0.1, 0.2], [0.9, 0.4], [0.5, 0.5]] {
            let xs = characteristic_covectors(&w, x, 16);
            assert_eq!(xs.len(), 2);
            let g = w.grad_phi(x);
            for xi in xs {
                let p = conjugated_symbol(&w, x, xi);
                assert!(p.norm() <= 1e-12 * (dot(xi, xi) + dot(g, g)));
            }
        }
    }
}
