use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use proptest::prelude::*;
use ssep_core::fluctuations::{l2_rho_inner, Convention};
use ssep_core::spectral::{green_identity_check, project, test_space_residual};
use ssep_core::{EigenBasis, Reservoirs, SpectralFunction};

fn basis() -> Arc<EigenBasis> {
    static BASIS: OnceLock<Arc<EigenBasis>> = OnceLock::new();
    Arc::clone(BASIS.get_or_init(|| EigenBasis::new(24).unwrap()))
}

fn coeffs() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, 1..12)
}

proptest! {
    #[test]
    fn semigroup_law(c in coeffs(), t in 0.0..0.5f64, s in 0.0..0.5f64) {
        let b = basis();
        let f = SpectralFunction::from_coeffs(&b, &c).unwrap();
        let once = f.semigroup(t + s).unwrap();
        let twice = f.semigroup(t).unwrap().semigroup(s).unwrap();
        for u in [0.0, 0.3, 0.77, 1.0] {
            prop_assert!((once.value(u) - twice.value(u)).abs() < 1e-12);
        }
    }

    #[test]
    fn laplacian_inverts_inverse_laplacian(c in coeffs()) {
        let b = basis();
        let f = SpectralFunction::from_coeffs(&b, &c).unwrap();
        let back = f.inverse_laplacian().laplacian();
        for (x, y) in back.coeffs().iter().zip(f.coeffs()) {
            prop_assert!((x + y).abs() < 1e-12);
        }
    }

    #[test]
    fn semigroup_preserves_robin_conditions(c in coeffs(), t in 0.0..0.3f64) {
        let b = basis();
        let f = SpectralFunction::from_coeffs(&b, &c).unwrap().semigroup(t).unwrap();
        prop_assert!((f.gradient(0.0) - f.value(0.0)).abs() < 1e-8);
        prop_assert!((f.gradient(1.0) + f.value(1.0)).abs() < 1e-8);
    }

    #[test]
    fn semigroup_contracts_l2(c in coeffs(), t in 0.0..1.0f64) {
        let b = basis();
        let f = SpectralFunction::from_coeffs(&b, &c).unwrap();
        prop_assert!(f.semigroup(t).unwrap().l2_norm() <= f.l2_norm() * (1.0 + 1e-14));
    }

    #[test]
    fn weighted_inner_product_is_symmetric(a in coeffs(), c in coeffs(), slope in -0.5..0.5f64) {
        let b = basis();
        let f = SpectralFunction::from_coeffs(&b, &a).unwrap();
        let g = SpectralFunction::from_coeffs(&b, &c).unwrap();
        let rho = move |u: f64| 0.5 + slope * (u - 0.5);
        let r = Reservoirs::new(0.3, 0.6).unwrap();
        for conv in [Convention::Plus, Convention::Minus] {
            let fg = l2_rho_inner(&f, &g, &rho, r, conv);
            let gf = l2_rho_inner(&g, &f, &rho, r, conv);
            prop_assert!((fg - gf).abs() < 1e-12);
        }
        prop_assert!(l2_rho_inner(&f, &f, &rho, r, Convention::Plus) >= 0.0);
    }
}

#[test]
fn first_eigenvalue_by_secant_on_cotangent_form() {
    // For x in (0, π): F(x) = 0 ⇔ (x² − 1) sin x = 2x cos x. Secant method on
    // g(x) = (x² − 1) − 2x cot x, which is increasing on (1, π).
    let g = |x: f64| (x * x - 1.0) - 2.0 * x / x.tan();
    let (mut a, mut b) = (1.0, 2.5);
    for _ in 0..60 {
        let c = b - g(b) * (b - a) / (g(b) - g(a));
        a = b;
        b = c;
        if (b - a).abs() < 1e-15 {
            break;
        }
    }
    let m = *basis().mode(1);
    assert!((m.sqrt_lambda - b).abs() < 1e-12);
    assert!(m.sqrt_lambda > 0.0 && m.sqrt_lambda < PI);
}

#[test]
fn green_identity_converges_with_tail_bound() {
    let b = basis();
    let f = project(&|u: f64| (PI * u).sin() + 0.3, &b);
    for horizon in [1.0, 3.0, 10.0] {
        let (lhs, rhs) = green_identity_check(&f, horizon).unwrap();
        let l1 = b.mode(1).lambda;
        let tail = f.l2_norm().powi(2) * (-2.0 * l1 * horizon).exp() / l1;
        assert!(rhs - lhs >= -1e-15 && rhs - lhs <= tail * (1.0 + 1e-12));
    }
}

#[test]
fn eigenfunctions_belong_to_the_test_space() {
    let b = basis();
    for k in 1..=6 {
        let psi = SpectralFunction::mode(&b, k);
        let scale = b.mode(k).lambda.powi(3);
        assert!(test_space_residual(&psi, 2) < 1e-9 * scale);
    }
}
