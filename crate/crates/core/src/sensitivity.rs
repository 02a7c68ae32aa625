//! First-order sensitivities of labeled eigenvalues to the policy.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{CanonicalSystem, Coordinate};
use crate::spectra::{label_roots, RootLabeling};

/// Minimum pairwise separation of labeled roots.
pub const CRITICAL_GAP: f64 = 1e-6;

/// `d[(h, k)] = d kappa_h / d omega_k`, last column for beta.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityMatrix {
    pub d: DMatrix<f64>,
    /// False where the entry was not computed (non-real `kappa_h`).
    pub valid: DMatrix<bool>,
}

impl SensitivityMatrix {
    pub fn get(&self, h: usize, k: usize) -> Option<f64> {
        self.valid[(h, k)].then(|| self.d[(h, k)])
    }
}

/// Closed-form derivatives at the real labeled roots.
///
/// With `D_h = prod_{i != h}(kappa_h - kappa_i)`:
/// `d kappa_h / d omega_k = delta_k prod_{m != k}(kappa_h - lambda_m) / D_h`
/// and `d kappa_h / d beta = prod_m (kappa_h - lambda_m) / D_h`.
/// Conjugate pairs contribute `|kappa_h - z|^2 > 0` to `D_h`.
pub fn dkappa(sys: &CanonicalSystem, labeling: &RootLabeling) -> Result<SensitivityMatrix> {
    let n = sys.n();
    let r = &labeling.roots;
    if r.len() != n + 1 {
        return Err(Error::InvalidInput(
            "labeling does not match the system size".into(),
        ));
    }
    for i in 0..r.len() {
        for k in i + 1..r.len() {
            if (r[i] - r[k]).norm() <= CRITICAL_GAP {
                return Err(Error::CriticalPoint {
                    first: i + 1,
                    second: k + 1,
                });
            }
        }
    }
    let l = sys.lambdas();
    let delta = sys.deltas();
    let mut d = DMatrix::zeros(n + 1, n + 1);
    let mut valid = DMatrix::from_element(n + 1, n + 1, false);
    for h in 0..=n {
        if !labeling.is_real[h] {
            continue;
        }
        let kh = r[h];
        let denom: Complex64 = (0..=n).filter(|&i| i != h).map(|i| kh - r[i]).product();
        let factors: Vec<Complex64> = l.iter().map(|&lm| kh - lm).collect();
        for k in 0..n {
            let num: Complex64 = factors
                .iter()
                .enumerate()
                .filter(|&(m, _)| m != k)
                .map(|(_, f)| *f)
                .product();
            d[(h, k)] = (num / denom).re * delta[k];
            valid[(h, k)] = true;
        }
        let num: Complex64 = factors.iter().product();
        d[(h, n)] = (num / denom).re;
        valid[(h, n)] = true;
    }
    Ok(SensitivityMatrix { d, valid })
}

/// Central differences of every labeled root in every coordinate, with
/// step `step * (1 + |coordinate|)`.
pub fn finite_difference(
    sys: &CanonicalSystem,
    labeling: &RootLabeling,
    step: f64,
) -> Result<DMatrix<Complex64>> {
    let n = sys.n();
    let mut out = DMatrix::from_element(n + 1, n + 1, Complex64::new(0.0, 0.0));
    for k in 0..=n {
        let coord = if k < n {
            Coordinate::Omega(k)
        } else {
            Coordinate::Beta
        };
        let x = coord.get(sys.policy());
        let h = step * (1.0 + x.abs());
        let plus = label_roots(&sys.with_coordinate(coord, x + h)?, Some(labeling))?;
        let minus = label_roots(&sys.with_coordinate(coord, x - h)?, Some(labeling))?;
        for i in 0..=n {
            out[(i, k)] = (plus.roots[i] - minus.roots[i]) / (2.0 * h);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SignRule {
    /// Dominant real root between lambda_3 and lambda_1.
    DominantRoot,
    /// Fully real, interlaced labeling.
    Interlaced,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignPrediction {
    pub rule: SignRule,
    /// One-based root label.
    pub root: usize,
    /// One-based weight index.
    pub weight: usize,
    pub predicted: f64,
    pub computed: f64,
}

impl SignPrediction {
    pub fn matches(&self) -> bool {
        self.computed.signum() == self.predicted
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignReport {
    pub rules: Vec<SignRule>,
    pub predictions: Vec<SignPrediction>,
    pub mismatches: Vec<SignPrediction>,
}

/// Check the sign rules whose hypotheses hold at this labeling.
///
/// Dominant-root rule: if `kappa_1` is real, at least every other real root,
/// and `lambda_3 < kappa_1 < lambda_1` (no lower bound when n = 2), then
/// `sign dk1/dw1 = delta_1 sign(kappa_1 - lambda_2)` and
/// `sign dk1/dw2 = -delta_2`.
///
/// Interlacing rule: if every root is real, the labels are decreasing, and
/// `lambda_h < kappa_h < lambda_(h-1)` for some `h >= 2`, then
/// `sign dkh/dwh = delta_h` for each such `h`.
pub fn sign_check(sys: &CanonicalSystem, labeling: &RootLabeling) -> Result<SignReport> {
    let n = sys.n();
    let l = sys.lambdas();
    let delta = sys.deltas();
    let r = &labeling.roots;
    let mut rules = Vec::new();
    let mut predictions = Vec::new();
    let sens = dkappa(sys, labeling)?;

    let k1 = r[0].re;
    let lower = if n >= 3 { l[2] } else { f64::NEG_INFINITY };
    let dominant = n >= 2
        && labeling.is_real[0]
        && (1..=n).all(|i| !labeling.is_real[i] || r[i].re <= k1)
        && lower < k1
        && k1 < l[0]
        && k1 != l[1];
    if dominant {
        rules.push(SignRule::DominantRoot);
        predictions.push(SignPrediction {
            rule: SignRule::DominantRoot,
            root: 1,
            weight: 1,
            predicted: delta[0] * (k1 - l[1]).signum(),
            computed: sens.d[(0, 0)],
        });
        predictions.push(SignPrediction {
            rule: SignRule::DominantRoot,
            root: 1,
            weight: 2,
            predicted: -delta[1],
            computed: sens.d[(0, 1)],
        });
    }

    let all_real = labeling.is_real.iter().all(|&x| x);
    let ordered = r.windows(2).all(|w| w[0].re > w[1].re);
    if all_real && ordered {
        let hits: Vec<usize> = (1..n)
            .filter(|&h| l[h] < r[h].re && r[h].re < l[h - 1])
            .collect();
        if !hits.is_empty() {
            rules.push(SignRule::Interlaced);
        }
        for h in hits {
            predictions.push(SignPrediction {
                rule: SignRule::Interlaced,
                root: h + 1,
                weight: h + 1,
                predicted: delta[h],
                computed: sens.d[(h, h)],
            });
        }
    }

    if rules.is_empty() {
        return Err(Error::HypothesesNotMet(
            "neither the dominant-root nor the interlacing configuration holds".into(),
        ));
    }
    let mismatches = predictions
        .iter()
        .filter(|p| !p.matches())
        .cloned()
        .collect();
    Ok(SignReport {
        rules,
        predictions,
        mismatches,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decoupled_start() {
        let (l1, beta, d1) = (3.0, 0.5, -1.0);
        let s =
            CanonicalSystem::from_parts(&[l1, 2.0, 1.0], &[d1, 1.0, 1.0], &[0.0; 3], beta).unwrap();
        let lab = label_roots(&s, None).unwrap();
        let m = dkappa(&s, &lab).unwrap();
        assert!((m.d[(0, 0)] - d1 / (l1 - beta)).abs() < 1e-15);
        assert_eq!(m.d[(0, 1)], 0.0);
        assert_eq!(m.d[(0, 2)], 0.0);
    }

    #[test]
    fn coincident_roots_are_critical() {
        let s = CanonicalSystem::from_parts(&[2.0, 1.0], &[1.0, 1.0], &[0.0, 0.0], 1.0).unwrap();
        let lab = RootLabeling::decoupled(&s);
        assert!(matches!(
            dkappa(&s, &lab),
            Err(Error::CriticalPoint {
                first: 2,
                second: 3
            })
        ));
    }

    #[test]
    fn guard_path() {
        // kappa_1 is complex here, so neither rule applies.
        let s = CanonicalSystem::from_parts(&[2.0, 1.5], &[-1.0, 1.0], &[0.5, 0.1], 0.5).unwrap();
        let lab = label_roots(&s, None).unwrap();
        assert!(!lab.is_real[0]);
        assert!(matches!(
            sign_check(&s, &lab),
            Err(Error::HypothesesNotMet(_))
        ));
    }
}
