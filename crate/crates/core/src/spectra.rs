//! Eigenvalues of H by two independent routes, and stable root labels.
//!
//! Labels are anchored at the decoupled policy, where root `j` equals
//! `lambda_j` and the last root equals `beta`, and carried to the requested
//! policy by continuation along a straight segment.

use num_complex::Complex64;
use serde::Serialize;

use crate::charpoly::charpoly_coeffs;
use crate::error::{Error, Result};
use crate::model::{build_h, CanonicalSystem, Policy};
use crate::roots::{greedy_match, poly_roots, symmetrize};

/// Imaginary-part cutoff for classifying a root as real.
pub const REAL_TOL: f64 = 1e-9;
/// Allowed pairing distance between the two solvers, relative to `1 + max|k|`.
pub const AGREEMENT_TOL: f64 = 1e-7;
/// Maximum number of step halvings during continuation.
pub const MAX_DEPTH: usize = 40;
/// Geometric warm-up steps when starting from the decoupled policy.
pub const WARMUP_STEPS: usize = 8;

/// Unordered eigenvalues of H.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RootSet {
    pub roots: Vec<Complex64>,
}

impl RootSet {
    pub fn sum(&self) -> Complex64 {
        self.roots.iter().sum()
    }

    pub fn product(&self) -> Complex64 {
        self.roots.iter().product()
    }

    pub fn max_modulus(&self) -> f64 {
        self.roots.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn real_roots(&self) -> impl Iterator<Item = f64> + '_ {
        self.roots.iter().filter(|z| z.im == 0.0).map(|z| z.re)
    }
}

/// Eigenvalues from the dense solver only, conjugate-symmetrised.
pub fn dense_eigenvalues(sys: &CanonicalSystem) -> Vec<Complex64> {
    let mut r: Vec<Complex64> = build_h(sys).complex_eigenvalues().iter().copied().collect();
    symmetrize(&mut r, REAL_TOL);
    r
}

/// Eigenvalues of H, cross-checked against a root find of the
/// characteristic polynomial. Returns the dense-solver set.
pub fn eigenvalues(sys: &CanonicalSystem) -> Result<RootSet> {
    let eigen = dense_eigenvalues(sys);
    let mut poly = poly_roots(&charpoly_coeffs(sys))?;
    symmetrize(&mut poly, REAL_TOL);
    let (_, distance) = greedy_match(&eigen, &poly);
    let scale = 1.0 + eigen.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if !(distance < AGREEMENT_TOL * scale) {
        return Err(Error::MethodDisagreement {
            distance,
            eigen,
            polynomial: poly,
        });
    }
    Ok(RootSet { roots: eigen })
}

/// Roots indexed by label (zero-based here, one-based in reports).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RootLabeling {
    pub policy: Policy,
    pub roots: Vec<Complex64>,
    pub is_real: Vec<bool>,
}

impl RootLabeling {
    fn new(policy: Policy, roots: Vec<Complex64>) -> Self {
        let is_real = roots.iter().map(|z| z.im == 0.0).collect();
        Self {
            policy,
            roots,
            is_real,
        }
    }

    /// Labels at the decoupled policy.
    pub fn decoupled(sys: &CanonicalSystem) -> Self {
        let mut roots: Vec<Complex64> = sys.lambdas().iter().map(|&l| l.into()).collect();
        roots.push(sys.beta().into());
        let policy = Policy {
            omegas: vec![0.0; sys.n()],
            beta: sys.beta(),
        };
        Self::new(policy, roots)
    }

    pub fn len(&self) -> usize {
        self.roots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    pub fn max_modulus(&self) -> f64 {
        self.roots.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn as_root_set(&self) -> RootSet {
        RootSet {
            roots: self.roots.clone(),
        }
    }
}

/// Label the eigenvalues of `sys`.
///
/// Without an anchor the labels are carried from the decoupled policy via
/// geometric steps `t = 2^-7, ..., 1`; with an anchor a single step from the
/// anchor's policy is attempted. Any step is halved while it fails the
/// acceptance test in [`assign_step`].
pub fn label_roots(sys: &CanonicalSystem, anchor: Option<&RootLabeling>) -> Result<RootLabeling> {
    let start = match anchor {
        Some(a) => a.clone(),
        None => RootLabeling::decoupled(sys),
    };
    if start.len() != sys.n() + 1 || start.policy.omegas.len() != sys.n() {
        return Err(Error::InvalidInput(
            "anchor labeling does not match the system size".into(),
        ));
    }
    let ts: Vec<f64> = if anchor.is_some() {
        vec![1.0]
    } else {
        (0..WARMUP_STEPS)
            .map(|k| 0.5_f64.powi((WARMUP_STEPS - 1 - k) as i32))
            .collect()
    };
    let path = Segment::new(sys, &start.policy);
    let mut roots = start.roots;
    let mut t0 = 0.0;
    for &t1 in &ts {
        roots = path.advance(&roots, t0, t1, 0)?;
        t0 = t1;
    }
    // Final values from the cross-checked solver, matched onto the labels.
    let checked = eigenvalues(sys)?.roots;
    let (perm, _) = greedy_match(&roots, &checked);
    let mut labeled: Vec<Complex64> = perm.iter().map(|&k| checked[k]).collect();
    restore_pair_orientation(&roots, &mut labeled);
    Ok(RootLabeling::new(sys.policy().clone(), labeled))
}

/// Continue an existing labeling to `sys` without the final cross-check.
/// Used by the locus tracer for bisection steps.
pub(crate) fn continue_unchecked(
    sys: &CanonicalSystem,
    anchor: &RootLabeling,
) -> Result<RootLabeling> {
    let path = Segment::new(sys, &anchor.policy);
    let roots = path.advance(&anchor.roots, 0.0, 1.0, 0)?;
    Ok(RootLabeling::new(sys.policy().clone(), roots))
}

// After re-matching to the checked solver, conjugates that were swapped by
// a tiny perturbation are put back.
fn restore_pair_orientation(reference: &[Complex64], labeled: &mut [Complex64]) {
    for i in 0..labeled.len() {
        if labeled[i].im != 0.0
            && reference[i].im != 0.0
            && labeled[i].im.signum() != reference[i].im.signum()
        {
            if let Some(k) = (0..labeled.len()).find(|&k| k != i && labeled[k] == labeled[i].conj())
            {
                labeled.swap(i, k);
            }
        }
    }
}

struct Segment<'a> {
    sys: &'a CanonicalSystem,
    from: Vec<f64>,
    to: Vec<f64>,
}

impl<'a> Segment<'a> {
    fn new(sys: &'a CanonicalSystem, from: &Policy) -> Self {
        Self {
            sys,
            from: from.to_vec(),
            to: sys.policy().to_vec(),
        }
    }

    fn at(&self, t: f64) -> Result<CanonicalSystem> {
        if t == 1.0 {
            return Ok(self.sys.clone());
        }
        let v: Vec<f64> = self
            .from
            .iter()
            .zip(&self.to)
            .map(|(a, b)| a + t * (b - a))
            .collect();
        self.sys.with_policy(Policy::from_slice(&v)?)
    }

    fn advance(
        &self,
        prev: &[Complex64],
        t0: f64,
        t1: f64,
        depth: usize,
    ) -> Result<Vec<Complex64>> {
        let next = dense_eigenvalues(&self.at(t1)?);
        match assign_step(prev, &next) {
            Ok(labeled) => Ok(labeled),
            Err((first, second)) => {
                if depth >= MAX_DEPTH {
                    return Err(Error::LabelCollision {
                        first: first + 1,
                        second: second + 1,
                        parameter: 0.5 * (t0 + t1),
                    });
                }
                let tm = 0.5 * (t0 + t1);
                let mid = self.advance(prev, t0, tm, depth + 1)?;
                self.advance(&mid, tm, t1, depth + 1)
            }
        }
    }
}

fn nearest(prev: &[Complex64], i: usize) -> (usize, f64) {
    (0..prev.len())
        .filter(|&k| k != i)
        .map(|k| (k, (prev[i] - prev[k]).norm()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap_or((i, f64::INFINITY))
}

fn is_conjugate_pair(a: Complex64, b: Complex64) -> bool {
    a.im != 0.0 && (a - b.conj()).norm() <= REAL_TOL * (1.0 + a.norm())
}

/// Assign the unordered set `next` to the labels of `prev`.
///
/// A label is accepted when it moves at most half the distance to its
/// nearest neighbour in `prev`. The exception is a pair of labels that are
/// each other's nearest neighbours and change type (two reals becoming a
/// conjugate pair or the reverse); that pair is accepted as a unit when it
/// stays isolated from the other roots. Across such a change the lower
/// label takes the root with positive imaginary part, or the larger real
/// part when the pair becomes real.
///
/// On failure returns the offending label and its nearest neighbour.
pub fn assign_step(
    prev: &[Complex64],
    next: &[Complex64],
) -> std::result::Result<Vec<Complex64>, (usize, usize)> {
    let m = prev.len();
    let (perm, _) = greedy_match(prev, next);
    let mut cand: Vec<Complex64> = perm.iter().map(|&k| next[k]).collect();
    let bad: Vec<usize> = (0..m)
        .filter(|&i| (cand[i] - prev[i]).norm() > 0.5 * nearest(prev, i).1)
        .collect();
    if bad.is_empty() {
        return Ok(cand);
    }
    let i = bad[0];
    let (k, _) = nearest(prev, i);
    if bad.iter().any(|&b| b != i && b != k) || k == i {
        return Err((i, k));
    }
    let was_real = prev[i].im == 0.0 && prev[k].im == 0.0;
    let was_pair = is_conjugate_pair(prev[i], prev[k]);
    let now_real = cand[i].im == 0.0 && cand[k].im == 0.0;
    let now_pair = is_conjugate_pair(cand[i], cand[k]);
    if !((was_real && now_pair) || (was_pair && now_real)) {
        return Err((i, k));
    }
    let isolation = (0..m)
        .filter(|&q| q != i && q != k)
        .map(|q| (prev[q] - prev[i]).norm().min((prev[q] - prev[k]).norm()))
        .fold(f64::INFINITY, f64::min);
    let c_prev = 0.5 * (prev[i] + prev[k]);
    let c_next = 0.5 * (cand[i] + cand[k]);
    let spread = (cand[i] - c_next).norm();
    if (c_next - c_prev).norm() + spread > 0.5 * isolation {
        return Err((i, k));
    }
    let (lo, hi) = (i.min(k), i.max(k));
    let (a, b) = (cand[lo], cand[hi]);
    let swap = if now_pair { a.im < b.im } else { a.re < b.re };
    if swap {
        cand.swap(lo, hi);
    }
    Ok(cand)
}
