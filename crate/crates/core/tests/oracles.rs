use plate_lab::carleman::{closed_form_bracket, poisson_bracket, Poly2, WeightFunction};
use plate_lab::spectral::{compute_spectrum, dense_resolvent_norm, resolvent_norm};
use plate_lab::{assemble_generator, assemble_hinged, build_mesh, C64};
use proptest::prelude::*;

/// Undamped, `iA` is self-adjoint in the energy metric, so the resolvent norm
/// is the reciprocal distance from `lambda` to the images `-i mu`.
#[test]
fn hinged_resolvent_norm_is_reciprocal_distance() {
    let mesh = build_mesh(1.0, 0.5, 1.0, 2.0, 41).unwrap();
    let gen = assemble_hinged(&mesh);
    let rep = compute_spectrum(&gen).unwrap();
    for lambda in [C64::new(3.0, 0.5), C64::new(25.0, -0.2), C64::new(-60.0, 1.0), C64::new(0.0, 2.0)] {
        let dist = rep
            .eigenvalues
            .iter()
            .map(|&mu| (lambda + C64::i() * mu).norm())
            .fold(f64::INFINITY, f64::min);
        let got = resolvent_norm(&gen, lambda);
        assert!((got * dist - 1.0).abs() < 1e-8, "lambda {lambda}: {got} vs {}", 1.0 / dist);
    }
}

#[test]
fn banded_and_dense_resolvent_norms_agree() {
    let mesh = build_mesh(1.0, 0.5, 1.0, 2.0, 41).unwrap();
    let gen = assemble_generator(&mesh, 1.0, 1.0).unwrap();
    for lambda in [C64::new(1.0, 0.0), C64::new(20.0, 0.01), C64::new(-35.0, -0.5)] {
        let a = resolvent_norm(&gen, lambda);
        let b = dense_resolvent_norm(&gen, lambda);
        assert!((a - b).abs() <= 1e-8 * b, "lambda {lambda}: {a} vs {b}");
    }
}

#[test]
fn damping_moves_every_eigenvalue_left() {
    let mesh = build_mesh(1.0, 0.5, 1.0, 2.0, 61).unwrap();
    for ab in [0.2, 1.0, 5.0] {
        let rep = compute_spectrum(&assemble_generator(&mesh, ab, ab).unwrap()).unwrap();
        assert!(rep.eigenvalues.iter().all(|mu| mu.re < 0.0), "a = b = {ab}");
    }
}

fn linear(p: f64, q: f64) -> Poly2 {
    Poly2::from_triples(&[(1, 0, p), (0, 1, q)]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// For a linear weight the Hessian term vanishes and the bracket on the
    /// characteristic set is `4 lambda^4 |grad psi|^4 phi^3`.
    #[test]
    fn linear_weight_bracket_matches_hand_formula(
        p in 0.2f64..2.0,
        q in -2.0f64..2.0,
        lambda in 0.5f64..3.0,
        x in 0.0f64..1.0,
        y in 0.0f64..1.0,
        flip in any::<bool>(),
    ) {
        let w = WeightFunction::new(linear(p, q), lambda).unwrap();
        let pt = [x, y];
        let g = w.grad_phi(pt);
        let s = if flip { -1.0 } else { 1.0 };
        let xi = [-s * g[1], s * g[0]];
        let phi = w.phi(pt);
        let expected = 4.0 * lambda.powi(4) * (p * p + q * q).powi(2) * phi.powi(3);
        let closed = closed_form_bracket(&w, pt, xi);
        let general = poisson_bracket(&w, pt, xi);
        prop_assert!((closed - expected).abs() <= 1e-10 * expected);
        prop_assert!((general - expected).abs() <= 1e-10 * expected);
    }

    #[test]
    fn polynomial_gradient_matches_differences(
        c in proptest::collection::vec(-1.0f64..1.0, 6),
        x in -1.0f64..1.0,
        y in -1.0f64..1.0,
    ) {
        let psi = Poly2::from_triples(&[
            (1, 0, c[0]), (0, 1, c[1]), (2, 0, c[2]), (1, 1, c[3]), (3, 1, c[4]), (0, 4, c[5]),
        ]).unwrap();
        let h = 1e-5;
        let g = psi.grad([x, y]);
        let gx = (psi.eval([x + h, y]) - psi.eval([x - h, y])) / (2.0 * h);
        let gy = (psi.eval([x, y + h]) - psi.eval([x, y - h])) / (2.0 * h);
        prop_assert!((g[0] - gx).abs() < 1e-7);
        prop_assert!((g[1] - gy).abs() < 1e-7);
    }
}
