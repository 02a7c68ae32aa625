//! Inverse problem: choose the policy so that H has a prescribed
//! characteristic polynomial.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::charpoly::{charpoly_coeffs, Polynomial};
use crate::error::{Error, Result};
use crate::model::{CanonicalSystem, Policy, ReducedSpectrum, Signs};

/// Forward-check tolerance, relative per coefficient.
pub const PLACEMENT_TOL: f64 = 1e-9;

/// Elementary symmetric functions a_0..a_n of the reduced spectrum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymFuncs {
    pub a: Vec<f64>,
}

impl std::ops::Index<usize> for SymFuncs {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.a[i]
    }
}

fn symmetric_of<'a, I: IntoIterator<Item = &'a f64>>(values: I) -> Vec<f64> {
    let mut e = vec![1.0];
    for &x in values {
        e.push(0.0);
        for s in (1..e.len()).rev() {
            e[s] += x * e[s - 1];
        }
    }
    e
}

pub fn elementary_symmetric(spectrum: &ReducedSpectrum) -> SymFuncs {
    SymFuncs {
        a: symmetric_of(spectrum.as_slice()),
    }
}

/// Symmetric functions of the lambdas with entry `j` (zero-based) left out.
pub fn omitted_symmetric(lambdas: &[f64], j: usize) -> Vec<f64> {
    symmetric_of(
        lambdas
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != j)
            .map(|(_, x)| x),
    )
}

/// Alternant with entries `V[s][j] = (-lambda_j)^s`, s = 0..n-1.
pub fn vandermonde(spectrum: &ReducedSpectrum) -> DMatrix<f64> {
    let l = spectrum.as_slice();
    DMatrix::from_fn(l.len(), l.len(), |s, j| (-l[j]).powi(s as i32))
}

/// Closed-form inverse of [`vandermonde`]:
/// `Vinv[j][s] = abar_(n-1-s)(j) / prod_{m != j}(lambda_m - lambda_j)`.
pub fn vandermonde_inverse(spectrum: &ReducedSpectrum) -> DMatrix<f64> {
    let l = spectrum.as_slice();
    let n = l.len();
    let mut inv = DMatrix::zeros(n, n);
    for j in 0..n {
        let abar = omitted_symmetric(l, j);
        let denom: f64 = (0..n).filter(|&m| m != j).map(|m| l[m] - l[j]).product();
        for s in 0..n {
            inv[(j, s)] = abar[n - 1 - s] / denom;
        }
    }
    inv
}

/// Recovered policy and the forward-check residual.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Placement {
    pub policy: Policy,
    /// Max over coefficients of |achieved - target| / (1 + |target|).
    pub residual: f64,
}

/// Solve for the policy whose bordered matrix has characteristic polynomial
/// `target`.
///
/// Beta is fixed by the trace. The remaining equations form a unit lower
/// triangular Toeplitz system (solved by forward substitution) composed with
/// the alternant, which is inverted in closed form.
pub fn place_zeros(
    spectrum: &ReducedSpectrum,
    signs: &Signs,
    target: &Polynomial,
) -> Result<Placement> {
    let n = spectrum.len();
    if signs.len() != n {
        return Err(Error::InvalidInput(format!(
            "{} signs for {} lambdas",
            signs.len(),
            n
        )));
    }
    if target.degree() != n + 1 {
        return Err(Error::InvalidInput(format!(
            "target has degree {}, expected {}",
            target.degree(),
            n + 1
        )));
    }
    let a = elementary_symmetric(spectrum);
    let t = target.coeffs();
    let p = |s: usize| {
        if s.is_multiple_of(2) {
            -t[s + 1]
        } else {
            t[s + 1]
        }
    };

    let beta = p(0) - a[1];
    // g_s = -sum_j w_j abar_(s-1)(j) for s = 1..n.
    let rhs: Vec<f64> = (1..=n)
        .map(|s| {
            let next = if s < n { a[s + 1] } else { 0.0 };
            -(p(s) - next - beta * a[s])
        })
        .collect();
    let mut h = vec![0.0; n];
    for s in 0..n {
        h[s] = rhs[s] - (0..s).map(|i| a[s - i] * h[i]).sum::<f64>();
    }
    let vinv = vandermonde_inverse(spectrum);
    let weights = &vinv * nalgebra::DVector::from_vec(h);
    let omegas: Vec<f64> = weights
        .iter()
        .zip(signs.as_slice())
        .map(|(w, d)| w * d)
        .collect();
    let policy = Policy::new(omegas, beta)?;

    let sys = CanonicalSystem::new(spectrum.clone(), signs.clone(), policy.clone())?;
    let achieved = charpoly_coeffs(&sys);
    let residual = achieved
        .coeffs()
        .iter()
        .zip(t)
        .map(|(x, y)| (x - y).abs() / (1.0 + y.abs()))
        .fold(0.0, f64::max);
    if !(residual <= PLACEMENT_TOL) {
        return Err(Error::IllConditioned { residual });
    }
    Ok(Placement { policy, residual })
}

/// Unique non-negative root of `|c_1| r^n + ... + |c_(n+1)| = r^(n+1)`.
///
/// Every root of the monic polynomial has modulus at most this radius.
pub fn cauchy_radius(p: &Polynomial) -> f64 {
    let c = p.coeffs();
    let deg = p.degree();
    if deg == 0 || c[1..].iter().all(|&x| x == 0.0) {
        return 0.0;
    }
    // phi(r) = r^(deg) - sum |c_i| r^(deg - i), increasing past its root.
    let phi = |r: f64| -> (f64, f64) {
        let mut v = 1.0;
        let mut dv = 0.0;
        for &x in &c[1..] {
            dv = dv * r + v;
            v = v * r - x.abs();
        }
        (v, dv)
    };
    let mut lo = 0.0;
    let mut hi = 1.0 + c[1..].iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if phi(mid).0 > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let mut r = hi;
    for _ in 0..8 {
        let (v, dv) = phi(r);
        if dv <= 0.0 {
            break;
        }
        let next = r - v / dv;
        if !(next > lo && next.is_finite()) {
            break;
        }
        r = next;
    }
    r
}

/// Whether the inclusion-radius inequality places all roots of `p` strictly
/// inside the disc of radius `rho`.
pub fn in_cauchy_polytope(p: &Polynomial, rho: f64) -> bool {
    let c = p.coeffs();
    let deg = p.degree();
    let lhs: f64 = c[1..]
        .iter()
        .enumerate()
        .map(|(i, x)| x.abs() * rho.powi((deg - 1 - i) as i32))
        .sum();
    lhs < rho.powi(deg as i32)
}
