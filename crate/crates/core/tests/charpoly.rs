mod common;

use common::{det_shifted, faddeev_leverrier, random_point_off_poles, rng};
use num_complex::Complex64;
use proptest::prelude::*;
use spectra_core::charpoly::{eval_f, eval_polar_beta, eval_polar_j, Polynomial};
use spectra_core::{build_h, charpoly_coeffs, eigenvalues, CanonicalSystem};

fn fig1(w1: f64) -> CanonicalSystem {
    CanonicalSystem::from_parts(&[2.0, 1.5], &[-1.0, 1.0], &[w1, 0.1], 0.5).unwrap()
}

#[test]
fn coefficients_match_independent_expansion() {
    let mut r = rng(5);
    for n in 1..=10 {
        let sys = common::random_system(&mut r, n, 1.5, 3.0);
        let oracle = faddeev_leverrier(&build_h(&sys));
        for (x, y) in charpoly_coeffs(&sys).coeffs().iter().zip(&oracle) {
            assert!((x - y).abs() < 1e-9 * (1.0 + y.abs()), "n={n}: {x} vs {y}");
        }
    }
}

#[test]
fn constant_term_formula() {
    let mut r = rng(6);
    for n in 1..=6 {
        let sys = common::random_system(&mut r, n, 1.0, 2.0);
        let l = sys.lambdas();
        let w = sys.weights();
        let prod: f64 = l.iter().product();
        let cross: f64 = (0..n)
            .map(|j| w[j] * (0..n).filter(|&h| h != j).map(|h| l[h]).product::<f64>())
            .sum();
        let expect = (-1.0f64).powi(n as i32 + 1) * (sys.beta() * prod - cross);
        let c = charpoly_coeffs(&sys);
        assert!((c.coeffs()[n + 1] - expect).abs() < 1e-12 * (1.0 + expect.abs()));
    }
}

#[test]
fn polar_residual_vanishes_at_eigenvalues() {
    let sys = fig1(0.1);
    for z in eigenvalues(&sys).unwrap().roots {
        for j in 0..2 {
            assert!(eval_polar_j(&sys, z, j).unwrap().norm() < 1e-9);
        }
        assert!(eval_polar_beta(&sys, z).unwrap().norm() < 1e-9);
        // f(kappa) = -omega_1 delta_1 = omega_1 here.
        assert!((eval_f(&sys, z).unwrap() - 0.1).norm() < 1e-9);
    }
}

#[test]
fn beta_form_case_study() {
    // 10 beta = 10 k + 1/(k - 2) - 1/(k - 1) with beta = 0.3.
    let beta = 0.3;
    let sys = CanonicalSystem::from_parts(&[2.0, 1.0], &[-1.0, 1.0], &[0.1, 0.1], beta).unwrap();
    let g = |k: f64| 10.0 * k + 1.0 / (k - 2.0) - 1.0 / (k - 1.0) - 10.0 * beta;
    // Real root below lambda_2 by bisection on the explicit scalar form.
    let (mut lo, mut hi) = (-5.0, 0.999);
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        if g(lo) * g(m) <= 0.0 {
            hi = m;
        } else {
            lo = m;
        }
    }
    let k = Complex64::new(0.5 * (lo + hi), 0.0);
    assert!(eval_polar_beta(&sys, k).unwrap().norm() < 1e-9);
}

#[test]
fn two_pole_standardisation() {
    // With poles at 0 and tau only, f after the shift kappa -> kappa + beta
    // equals -(z - (lambda_1 - beta)) z - c/(z - (lambda_2 - beta)) + w_2.
    let sys = CanonicalSystem::from_parts(&[2.0, 1.2], &[-1.0, 1.0], &[0.4, 0.3], 0.5).unwrap();
    let w2 = 0.3;
    let c = w2 * (2.0 - 1.2);
    for z in [Complex64::new(0.3, 0.7), Complex64::new(2.5, -0.1)] {
        let expect = -(z - 1.5) * z - c / (z - 0.7) + w2;
        let got = eval_f(&sys, z + 0.5).unwrap();
        assert!((got - expect).norm() < 1e-13);
    }
}

#[test]
fn four_forms_agree() {
    let mut r = rng(7);
    for _ in 0..100 {
        let n = 1 + (rand::Rng::random_range(&mut r, 0..8usize));
        let sys = common::random_system(&mut r, n, 1.5, 3.0);
        let h = build_h(&sys);
        let poly = charpoly_coeffs(&sys);
        for _ in 0..10 {
            let z = random_point_off_poles(&mut r, &sys, 1e-2);
            let chi = poly.eval(z);
            let scale = 1.0 + chi.norm();
            let oracle = det_shifted(&h, z);
            assert!((chi - oracle).norm() < 1e-10 * (1.0 + oracle.norm()));
            let full: Complex64 = sys.lambdas().iter().map(|&l| z - l).product();
            assert!((eval_polar_beta(&sys, z).unwrap() * full - chi).norm() < 1e-10 * scale);
            for j in 0..n {
                let partial: Complex64 = (0..n)
                    .filter(|&k| k != j)
                    .map(|k| z - sys.lambdas()[k])
                    .product();
                assert!((eval_polar_j(&sys, z, j).unwrap() * partial + chi).norm() < 1e-10 * scale);
            }
        }
    }
}

proptest! {
    #[test]
    fn leading_coefficient_is_minus_trace(seed in 0u64..10_000, n in 1usize..10) {
        let sys = common::random_system(&mut rng(seed), n, 2.0, 3.0);
        let c = charpoly_coeffs(&sys);
        prop_assert!((c.coeffs()[1] + sys.trace()).abs() <= 1e-12 * (1.0 + sys.trace().abs()));
    }

    #[test]
    fn decoupled_is_convolution(seed in 0u64..10_000, n in 1usize..10) {
        let sys = common::random_system(&mut rng(seed), n, 2.0, 3.0).decoupled();
        let mut roots = sys.lambdas().to_vec();
        roots.push(sys.beta());
        let q = Polynomial::from_roots(&roots);
        for (a, b) in charpoly_coeffs(&sys).coeffs().iter().zip(q.coeffs()) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
    }
}
