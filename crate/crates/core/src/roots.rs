//! Simultaneous polynomial root finding.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::charpoly::Polynomial;
use crate::error::{Error, Result};

const MAX_ITER: usize = 500;
const NEWTON_TOL: f64 = 1e-8;

/// Which algorithm produced a root set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RootMethod {
    Aberth,
    Companion,
}

/// All complex roots of a monic polynomial.
///
/// Aberth-Ehrlich iteration is tried first; if it stalls or produces
/// non-finite iterates, the companion matrix eigenvalues are used.
pub fn poly_roots(p: &Polynomial) -> Result<Vec<Complex64>> {
    poly_roots_with_method(p).map(|(r, _)| r)
}

pub fn poly_roots_with_method(p: &Polynomial) -> Result<(Vec<Complex64>, RootMethod)> {
    if p.degree() == 0 {
        return Ok((vec![], RootMethod::Aberth));
    }
    if let Some(r) = aberth(p) {
        return Ok((r, RootMethod::Aberth));
    }
    companion_roots(p).map(|r| (r, RootMethod::Companion))
}

/// A function whose zeros the simultaneous iteration can find.
pub trait RootTarget {
    fn degree(&self) -> usize;
    /// Value and first derivative at `z`.
    fn eval_with_derivative(&self, z: Complex64) -> (Complex64, Complex64);
    /// Bound on the rounding error of the value at `z`.
    fn eval_error_bound(&self, z: Complex64) -> f64;
    /// Centre and radius of the circle holding the initial guesses.
    fn start_circle(&self) -> (Complex64, f64);
}

impl RootTarget for Polynomial {
    fn degree(&self) -> usize {
        Polynomial::degree(self)
    }

    fn eval_with_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        Polynomial::eval_with_derivative(self, z)
    }

    fn eval_error_bound(&self, z: Complex64) -> f64 {
        Polynomial::eval_error_bound(self, z)
    }

    fn start_circle(&self) -> (Complex64, f64) {
        let c = self.coeffs();
        let radius = c[1..]
            .iter()
            .enumerate()
            .map(|(i, x)| x.abs().powf(1.0 / (i + 1) as f64))
            .fold(0.0_f64, f64::max)
            .max(1e-3);
        (Complex64::new(-c[1] / self.degree() as f64, 0.0), radius)
    }
}

/// `prod_k (z - r_k) - shift`, evaluated in product form so that large
/// expanded coefficients never round.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftedProduct {
    pub roots: Vec<f64>,
    pub shift: f64,
}

impl ShiftedProduct {
    /// All zeros; falls back to the companion matrix of the expansion.
    pub fn zeros(&self) -> Result<Vec<Complex64>> {
        if self.roots.is_empty() {
            return Ok(vec![]);
        }
        if let Some(r) = aberth(self) {
            return Ok(r);
        }
        let mut c = Polynomial::from_roots(&self.roots).coeffs().to_vec();
        *c.last_mut().unwrap() -= self.shift;
        companion_roots(&Polynomial::new(c)?)
    }
}

impl RootTarget for ShiftedProduct {
    fn degree(&self) -> usize {
        self.roots.len()
    }

    fn eval_with_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        let factors: Vec<Complex64> = self.roots.iter().map(|&r| z - r).collect();
        let p: Complex64 = factors.iter().product();
        let dp: Complex64 = (0..factors.len())
            .map(|k| {
                factors
                    .iter()
                    .enumerate()
                    .filter(|&(m, _)| m != k)
                    .map(|(_, f)| *f)
                    .product::<Complex64>()
            })
            .sum();
        (p - self.shift, dp)
    }

    fn eval_error_bound(&self, z: Complex64) -> f64 {
        let p: f64 = self.roots.iter().map(|&r| (z - r).norm()).product();
        2.0 * (self.roots.len() + 1) as f64 * f64::EPSILON * (p + self.shift.abs())
    }

    fn start_circle(&self) -> (Complex64, f64) {
        let d = self.roots.len() as f64;
        let centre = self.roots.iter().sum::<f64>() / d;
        let spread = self
            .roots
            .iter()
            .map(|r| (r - centre).abs())
            .fold(0.0, f64::max);
        (
            Complex64::new(centre, 0.0),
            (spread + self.shift.abs().powf(1.0 / d)).max(1e-3),
        )
    }
}

/// Eigenvalues of the companion matrix.
pub fn companion_roots(p: &Polynomial) -> Result<Vec<Complex64>> {
    let c = p.coeffs();
    let d = p.degree();
    let mut m = DMatrix::zeros(d, d);
    for j in 0..d {
        m[(0, j)] = -c[j + 1];
    }
    for i in 1..d {
        m[(i, i - 1)] = 1.0;
    }
    let ev = m.complex_eigenvalues();
    let roots: Vec<Complex64> = ev.iter().copied().collect();
    if roots.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidInput(
            "companion eigen solve produced non-finite roots".into(),
        ));
    }
    Ok(roots)
}

fn aberth<T: RootTarget + ?Sized>(p: &T) -> Option<Vec<Complex64>> {
    let d = p.degree();
    let (centre, radius) = p.start_circle();
    let mut z: Vec<Complex64> = (0..d)
        .map(|k| {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / d as f64 + 0.4;
            centre + Complex64::from_polar(radius, theta)
        })
        .collect();
    let mut done = vec![false; d];

    for _ in 0..MAX_ITER {
        let mut all_done = true;
        for i in 0..d {
            if done[i] {
                continue;
            }
            let (v, dv) = p.eval_with_derivative(z[i]);
            if v.norm() <= p.eval_error_bound(z[i]) {
                done[i] = true;
                continue;
            }
            let ratio = v / dv;
            let repulsion: Complex64 = (0..d)
                .filter(|&k| k != i)
                .map(|k| Complex64::new(1.0, 0.0) / (z[i] - z[k]))
                .sum();
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
            if !step.re.is_finite() || !step.im.is_finite() {
                return None;
            }
            z[i] -= step;
            // A tiny Aberth step alone can mean two iterates pinned each
            // other near a critical point; require a small Newton step too.
            let tiny = 4.0 * f64::EPSILON * z[i].norm().max(f64::MIN_POSITIVE);
            if step.norm() <= tiny && ratio.norm() <= NEWTON_TOL * (1.0 + z[i].norm()) {
                done[i] = true;
            } else {
                all_done = false;
            }
        }
        if all_done {
            return Some(z);
        }
    }
    None
}

/// Replace near-conjugate pairs by exact conjugates and zero small imaginary
/// parts. Input need not be sorted.
pub fn symmetrize(roots: &mut [Complex64], real_tol: f64) {
    let n = roots.len();
    let mut used = vec![false; n];
    for i in 0..n {
        if used[i] {
            continue;
        }
        used[i] = true;
        let zi = roots[i];
        if zi.im.abs() <= real_tol * (1.0 + zi.norm()) {
            roots[i] = Complex64::new(zi.re, 0.0);
            continue;
        }
        let partner = (0..n).filter(|&k| !used[k]).min_by(|&a, &b| {
            (roots[a] - zi.conj())
                .norm()
                .total_cmp(&(roots[b] - zi.conj()).norm())
        });
        // Without a partner closer to the conjugate than the real axis is,
        // the root is a perturbed real root.
        let partner = partner.filter(|&k| (roots[k] - zi.conj()).norm() < zi.im.abs());
        match partner {
            None => roots[i] = Complex64::new(zi.re, 0.0),
            Some(k) => {
                let re = 0.5 * (zi.re + roots[k].re);
                let im = 0.5 * (zi.im - roots[k].im);
                roots[i] = Complex64::new(re, im);
                roots[k] = Complex64::new(re, -im);
                used[k] = true;
            }
        }
    }
}

/// Greedy matching of two equal-length sets by smallest distance first.
/// Returns `perm` with `b[perm[i]]` paired to `a[i]` and the largest
/// matched distance.
pub fn greedy_match(a: &[Complex64], b: &[Complex64]) -> (Vec<usize>, f64) {
    let n = a.len();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(n * n);
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            pairs.push(((x - y).norm(), i, j));
        }
    }
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut perm = vec![usize::MAX; n];
    let mut taken = vec![false; n];
    let mut worst = 0.0_f64;
    for (d, i, j) in pairs {
        if perm[i] == usize::MAX && !taken[j] {
            perm[i] = j;
            taken[j] = true;
            worst = worst.max(d);
        }
    }
    (perm, worst)
}
