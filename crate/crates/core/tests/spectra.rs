mod common;

use common::{faddeev_leverrier, max_pair_distance, rng};
use num_complex::Complex64;
use rand::Rng;
use spectra_core::roots::{companion_roots, poly_roots};
use spectra_core::{eigenvalues, label_roots, CanonicalSystem, Polynomial};

fn fig1(w1: f64) -> CanonicalSystem {
    CanonicalSystem::from_parts(&[2.0, 1.5], &[-1.0, 1.0], &[w1, 0.1], 0.5).unwrap()
}

#[test]
fn random_system_invariants() {
    let mut r = rng(21);
    for _ in 0..500 {
        let n = r.random_range(1..=8usize);
        let sys = common::random_system(&mut r, n, 1.5, 3.0);
        let roots = eigenvalues(&sys).unwrap();
        assert_eq!(roots.roots.len(), n + 1);
        let conj: Vec<Complex64> = roots.roots.iter().map(|z| z.conj()).collect();
        assert!(max_pair_distance(&roots.roots, &conj) < 1e-12);
        let scale = 1.0 + sys.scale();
        assert!((roots.sum().re - sys.trace()).abs() < 1e-8 * scale);
        assert!(roots.sum().im.abs() < 1e-8 * scale);
        let coeffs = faddeev_leverrier(&spectra_core::build_h(&sys));
        let det = coeffs[n + 1] * if (n + 1) % 2 == 0 { 1.0 } else { -1.0 };
        assert!((roots.product().re - det).abs() < 1e-6 * scale.powi(n as i32 + 1));
    }
}

#[test]
fn small_positive_weights_interlace() {
    // With every w_j > 0 and beta below lambda_n, each gap (lambda_j+1, lambda_j)
    // holds one root.
    let mut r = rng(22);
    for _ in 0..100 {
        let n = r.random_range(2..=6usize);
        let l = common::random_lambdas(&mut r, n, 1.0, 5.0);
        let d = common::random_signs(&mut r, n);
        let o: Vec<f64> = d.iter().map(|s| s * r.random_range(0.01..0.5)).collect();
        let sys = CanonicalSystem::from_parts(&l, &d, &o, 0.5 * l[n - 1]).unwrap();
        let mut re: Vec<f64> = eigenvalues(&sys)
            .unwrap()
            .roots
            .iter()
            .map(|z| z.re)
            .collect();
        re.sort_by(|a, b| b.total_cmp(a));
        assert!(re[0] > l[0]);
        for j in 1..n {
            assert!(l[j] < re[j] && re[j] < l[j - 1], "{re:?} vs {l:?}");
        }
    }
}

#[test]
fn reference_system_at_half() {
    let lab = label_roots(&fig1(0.5), None).unwrap();
    assert!(!lab.is_real[0] && !lab.is_real[1] && lab.is_real[2]);
    assert!(lab.roots[0].im > 0.0);
    assert_eq!(lab.roots[0], lab.roots[1].conj());
    assert!(lab.roots[2].re > 0.5 && lab.roots[2].re < 1.5);
    // Re sum of the pair plus the real root is the trace.
    let total: f64 = lab.roots.iter().map(|z| z.re).sum();
    assert!((total - 4.0).abs() < 1e-12);
}

#[test]
fn weak_coupling_root_below_dominant() {
    // delta_1 omega_1 < 0 small pulls kappa_1 between lambda_2 and lambda_1.
    let sys = CanonicalSystem::from_parts(&[2.0, 1.5], &[-1.0, 1.0], &[0.01, 0.01], 0.5).unwrap();
    let lab = label_roots(&sys, None).unwrap();
    assert!(lab.is_real[0]);
    assert!(1.5 < lab.roots[0].re && lab.roots[0].re < 2.0);
}

#[test]
fn decoupled_labels_are_the_diagonal() {
    let sys =
        CanonicalSystem::from_parts(&[3.0, 2.0, 1.0], &[1.0, -1.0, 1.0], &[0.0; 3], 0.25).unwrap();
    let lab = label_roots(&sys, None).unwrap();
    let expect = [3.0, 2.0, 1.0, 0.25];
    for (z, e) in lab.roots.iter().zip(expect) {
        assert!((z - e).norm() < 1e-12);
    }
}

#[test]
fn labels_continue_smoothly() {
    let mut prev = label_roots(&fig1(0.1), None).unwrap();
    for i in 1..=110 {
        let w = 0.1 + 0.01 * i as f64;
        let next = label_roots(&fig1(w), Some(&prev)).unwrap();
        let jump = prev
            .roots
            .iter()
            .zip(&next.roots)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(jump < 0.1, "jump {jump} at {w}");
        prev = next;
    }
}

#[test]
fn aberth_matches_companion() {
    let mut r = rng(23);
    for _ in 0..50 {
        let n = r.random_range(2..=10usize);
        let c: Vec<f64> = std::iter::once(1.0)
            .chain((0..n).map(|_| r.random_range(-2.0..2.0)))
            .collect();
        let p = Polynomial::new(c).unwrap();
        let a = poly_roots(&p).unwrap();
        let b = companion_roots(&p).unwrap();
        assert!(max_pair_distance(&a, &b) < 1e-6, "{a:?} vs {b:?}");
    }
}

#[test]
fn product_form_zeros() {
    use spectra_core::roots::ShiftedProduct;
    let poles: Vec<f64> = (1..=20).map(f64::from).collect();
    let mut z = ShiftedProduct {
        roots: poles.clone(),
        shift: 0.0,
    }
    .zeros()
    .unwrap();
    z.sort_by(|a, b| a.re.total_cmp(&b.re));
    for (a, b) in z.iter().zip(&poles) {
        assert!((a - b).norm() < 1e-9);
    }
    // (z - 1)(z - 3) - 1 has zeros 2 +- sqrt(2).
    let mut z = ShiftedProduct {
        roots: vec![1.0, 3.0],
        shift: 1.0,
    }
    .zeros()
    .unwrap();
    z.sort_by(|a, b| a.re.total_cmp(&b.re));
    assert!(
        (z[0].re - (2.0 - 2f64.sqrt())).abs() < 1e-14
            && (z[1].re - (2.0 + 2f64.sqrt())).abs() < 1e-14
    );
}
