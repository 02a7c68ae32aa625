//! Characteristic polynomial of H and its partial-fraction (polar) forms.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::CanonicalSystem;
use crate::placement::{elementary_symmetric, omitted_symmetric};

/// Relative distance to a pole below which polar forms refuse to evaluate.
pub const POLE_TOL: f64 = 1e-12;

/// Monic real polynomial, coefficients in descending degree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    /// Accepts any nonzero leading coefficient and normalises to monic.
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        let lead = *coeffs
            .first()
            .ok_or_else(|| Error::InvalidInput("polynomial has no coefficients".into()))?;
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput(
                "polynomial coefficients must be finite".into(),
            ));
        }
        if lead == 0.0 {
            return Err(Error::InvalidInput("leading coefficient is zero".into()));
        }
        Ok(Self {
            coeffs: coeffs.into_iter().map(|c| c / lead).collect(),
        })
    }

    /// Monic polynomial with the given real roots.
    pub fn from_roots(roots: &[f64]) -> Self {
        let mut c = vec![1.0];
        for &r in roots {
            c.push(0.0);
            for i in (1..c.len()).rev() {
                c[i] -= r * c[i - 1];
            }
        }
        Self { coeffs: c }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    /// Value and first derivative by Horner's scheme.
    pub fn eval_with_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        let mut p = Complex64::new(0.0, 0.0);
        let mut dp = Complex64::new(0.0, 0.0);
        for &c in &self.coeffs {
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp)
    }

    /// Horner-style bound on the rounding error of `eval` at `z`.
    pub fn eval_error_bound(&self, z: Complex64) -> f64 {
        let r = z.norm();
        let mag = self.coeffs.iter().fold(0.0, |acc, &c| acc * r + c.abs());
        2.0 * self.coeffs.len() as f64 * f64::EPSILON * mag
    }

    /// Product with (x - r).
    pub fn times_linear(&self, r: f64) -> Self {
        let mut c = self.coeffs.clone();
        c.push(0.0);
        for i in (1..c.len()).rev() {
            c[i] -= r * c[i - 1];
        }
        Self { coeffs: c }
    }
}

/// Coefficients of det(kI - H) via elementary symmetric functions of the
/// reduced spectrum.
///
/// With `a_s` the symmetric functions of the lambdas and `abar_s(j)` those
/// with lambda_j omitted, the coefficient of k^(n-s) is
/// `(-1)^(s+1) p_s` where `p_s = a_(s+1) + beta a_s - sum_j w_j abar_(s-1)(j)`.
pub fn charpoly_coeffs(sys: &CanonicalSystem) -> Polynomial {
    let n = sys.n();
    let a = elementary_symmetric(sys.spectrum());
    let abar: Vec<Vec<f64>> = (0..n)
        .map(|j| omitted_symmetric(sys.lambdas(), j))
        .collect();
    let w = sys.weights();
    let beta = sys.beta();

    let mut coeffs = Vec::with_capacity(n + 2);
    coeffs.push(1.0);
    for s in 0..=n {
        let next = if s < n { a[s + 1] } else { 0.0 };
        let mut p = next + beta * a[s];
        if s >= 1 {
            p -= (0..n).map(|j| w[j] * abar[j][s - 1]).sum::<f64>();
        }
        let sign = if s % 2 == 0 { -1.0 } else { 1.0 };
        coeffs.push(sign * p);
    }
    Polynomial { coeffs }
}

/// Neumaier-compensated complex sum.
fn compensated_sum<I: IntoIterator<Item = Complex64>>(terms: I) -> Complex64 {
    let mut sum = [0.0_f64; 2];
    let mut comp = [0.0_f64; 2];
    for t in terms {
        for (k, x) in [t.re, t.im].into_iter().enumerate() {
            let s = sum[k] + x;
            comp[k] += if sum[k].abs() >= x.abs() {
                (sum[k] - s) + x
            } else {
                (x - s) + sum[k]
            };
            sum[k] = s;
        }
    }
    Complex64::new(sum[0] + comp[0], sum[1] + comp[1])
}

fn check_pole(sys: &CanonicalSystem, kappa: Complex64, skip: Option<usize>) -> Result<()> {
    for (k, &l) in sys.lambdas().iter().enumerate() {
        if Some(k) == skip {
            continue;
        }
        let dist = (kappa - l).norm();
        if dist < POLE_TOL * (1.0 + l.abs()) {
            return Err(Error::PoleProximity {
                kappa,
                index: k + 1,
                distance: dist,
            });
        }
    }
    Ok(())
}

/// Residual of the polar form keeping pole `j` (zero-based) in the quadratic
/// term: `sum_k w_k - (k - l_j)(k - beta) - sum_{k != j} w_k (l_j - l_k)/(k - l_k)`.
///
/// Multiplying by `prod_{k != j}(kappa - l_k)` gives `-charpoly(kappa)`.
pub fn eval_polar_j(sys: &CanonicalSystem, kappa: Complex64, j: usize) -> Result<Complex64> {
    Ok(eval_f_j(sys, kappa, j)? + sys.weights()[j])
}

/// Residual `kappa - sum_j w_j/(kappa - l_j) - beta`; times
/// `prod_j(kappa - l_j)` it equals `charpoly(kappa)`.
pub fn eval_polar_beta(sys: &CanonicalSystem, kappa: Complex64) -> Result<Complex64> {
    Ok(beta_jet(sys, kappa)?[0] - sys.beta())
}

/// The map whose level set `f(kappa) = -w_1` is the characteristic equation.
pub fn eval_f(sys: &CanonicalSystem, kappa: Complex64) -> Result<Complex64> {
    eval_f_j(sys, kappa, 0)
}

/// Generalisation of [`eval_f`] isolating weight `j` (zero-based).
pub fn eval_f_j(sys: &CanonicalSystem, kappa: Complex64, j: usize) -> Result<Complex64> {
    Ok(polar_jet(sys, kappa, j)?[0])
}

/// `[f, f', f'', f''']` for the map isolating weight `j`.
pub fn polar_jet(sys: &CanonicalSystem, kappa: Complex64, j: usize) -> Result<[Complex64; 4]> {
    if j >= sys.n() {
        return Err(Error::InvalidInput(format!(
            "pole index {} out of range for n = {}",
            j + 1,
            sys.n()
        )));
    }
    check_pole(sys, kappa, Some(j))?;
    let l = sys.lambdas();
    let w = sys.weights();
    let beta = sys.beta();
    let others = || (0..sys.n()).filter(move |&k| k != j);
    let c = |k: usize| w[k] * (l[j] - l[k]);

    let lead = compensated_sum(others().map(|k| Complex64::from(w[k])));
    let f0 = lead
        - (kappa - l[j]) * (kappa - beta)
        - compensated_sum(others().map(|k| c(k) / (kappa - l[k])));
    let f1 = -(kappa * 2.0 - l[j] - beta)
        + compensated_sum(others().map(|k| c(k) / (kappa - l[k]).powi(2)));
    let f2 = Complex64::from(-2.0)
        - compensated_sum(others().map(|k| 2.0 * c(k) / (kappa - l[k]).powi(3)));
    let f3 = compensated_sum(others().map(|k| 6.0 * c(k) / (kappa - l[k]).powi(4)));
    Ok([f0, f1, f2, f3])
}

/// `[g, g', g'', g''']` for `g(kappa) = kappa - sum_j w_j/(kappa - l_j)`, so
/// that the characteristic equation reads `g(kappa) = beta`.
pub fn beta_jet(sys: &CanonicalSystem, kappa: Complex64) -> Result<[Complex64; 4]> {
    check_pole(sys, kappa, None)?;
    let l = sys.lambdas();
    let w = sys.weights();
    let terms = |p: i32| compensated_sum((0..sys.n()).map(|k| w[k] / (kappa - l[k]).powi(p)));
    Ok([
        kappa - terms(1),
        Complex64::from(1.0) + terms(2),
        terms(3) * -2.0,
        terms(4) * 6.0,
    ])
}
