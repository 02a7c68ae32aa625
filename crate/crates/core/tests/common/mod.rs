//! Independent oracles and random generators shared by the integration tests.
#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spectra_core::CanonicalSystem;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Characteristic polynomial coefficients (monic, descending) by the
/// Faddeev-LeVerrier recursion, which never looks at the bordered structure.
pub fn faddeev_leverrier(a: &DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    let mut coeffs = vec![1.0];
    let mut m = DMatrix::<f64>::zeros(n, n);
    let id = DMatrix::<f64>::identity(n, n);
    for k in 1..=n {
        m = a * &m + &id * coeffs[k - 1];
        let c = -(a * &m).trace() / k as f64;
        coeffs.push(c);
    }
    coeffs
}

/// Determinant of `z I - H` by LU in complex arithmetic.
pub fn det_shifted(h: &DMatrix<f64>, z: Complex64) -> Complex64 {
    let n = h.nrows();
    let m = DMatrix::<Complex64>::identity(n, n) * z - h.map(Complex64::from);
    m.determinant()
}

/// Strictly decreasing positive spectrum with relative gaps of at least 5%.
pub fn random_lambdas<R: Rng>(rng: &mut R, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    loop {
        let mut l: Vec<f64> = (0..n).map(|_| rng.random_range(lo..hi)).collect();
        l.sort_by(|a, b| b.total_cmp(a));
        if l.windows(2).all(|w| w[0] - w[1] > 0.05 * w[0]) {
            return l;
        }
    }
}

pub fn random_signs<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 })
        .collect()
}

/// Random system with `|omega_j| <= omega_max` and `beta` in `[0, beta_max]`.
pub fn random_system<R: Rng>(
    rng: &mut R,
    n: usize,
    omega_max: f64,
    beta_max: f64,
) -> CanonicalSystem {
    let l = random_lambdas(rng, n, 0.2, 4.0);
    let d = random_signs(rng, n);
    let w: Vec<f64> = (0..n)
        .map(|_| rng.random_range(-omega_max..omega_max))
        .collect();
    let beta = rng.random_range(0.0..beta_max);
    CanonicalSystem::from_parts(&l, &d, &w, beta).unwrap()
}

/// Random complex point at distance at least `gap` from every lambda.
pub fn random_point_off_poles<R: Rng>(rng: &mut R, sys: &CanonicalSystem, gap: f64) -> Complex64 {
    loop {
        let z = Complex64::new(rng.random_range(-1.0..5.0), rng.random_range(-2.0..2.0));
        if sys.lambdas().iter().all(|&l| (z - l).norm() > gap) {
            return z;
        }
    }
}

pub fn max_pair_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for x in a {
        let (k, d) = b
            .iter()
            .enumerate()
            .filter(|(k, _)| !used[*k])
            .map(|(k, y)| (k, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .unwrap();
        used[k] = true;
        worst = worst.max(d);
    }
    worst
}
