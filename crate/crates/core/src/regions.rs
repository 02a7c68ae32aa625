//! Geometric containment tests for eigenvalue sets.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::CanonicalSystem;

/// Ties within this distance of a boundary count as on the boundary.
pub const BOUNDARY_TOL: f64 = 1e-12;

/// Non-real roots: whether `beta <= Re <= lambda1`. Real roots map to `None`.
pub fn strip_test(roots: &[Complex64], beta: f64, lambda1: f64) -> Vec<Option<bool>> {
    roots
        .iter()
        .map(|z| {
            (z.im != 0.0).then_some(z.re >= beta - BOUNDARY_TOL && z.re <= lambda1 + BOUNDARY_TOL)
        })
        .collect()
}

/// Real interval whose endpoints solve `(z - beta)(z - lambda1) = epsilon`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KInterval {
    pub lo: f64,
    pub hi: f64,
    pub epsilon: f64,
}

impl KInterval {
    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo - BOUNDARY_TOL && x <= self.hi + BOUNDARY_TOL
    }
}

fn quadratic_interval(left: f64, right: f64, epsilon: f64) -> Result<(f64, f64)> {
    let disc = (right - left).powi(2) + 4.0 * epsilon;
    if disc < 0.0 {
        return Err(Error::NegativeDiscriminant(disc));
    }
    let root = disc.sqrt();
    Ok((0.5 * (left + right - root), 0.5 * (left + right + root)))
}

pub fn k_interval(beta: f64, lambda1: f64, epsilon: f64) -> Result<KInterval> {
    let (lo, hi) = quadratic_interval(beta, lambda1, epsilon)?;
    Ok(KInterval { lo, hi, epsilon })
}

/// Interval that provably holds every real eigenvalue when all weights
/// `omega_j delta_j` are non-negative.
///
/// Uses the total weight and the outermost poles: above `lambda_1` the
/// characteristic equation gives `(k - beta)(k - lambda_1) <= sum w`, and
/// below `beta` it gives `(beta - k)(lambda_n - k) <= sum w`.
pub fn containment_interval(sys: &CanonicalSystem) -> Result<KInterval> {
    let w = sys.weights();
    if w.iter().any(|&x| x < 0.0) {
        return Err(Error::HypothesesNotMet(
            "containment interval needs omega_j delta_j >= 0".into(),
        ));
    }
    let total: f64 = w.iter().sum();
    let l = sys.lambdas();
    let beta = sys.beta();
    let (_, hi) = quadratic_interval(beta.min(l[0]), beta.max(l[0]), total)?;
    let last = l[l.len() - 1];
    let (lo, _) = quadratic_interval(beta.min(last), beta.max(last), total)?;
    Ok(KInterval {
        lo,
        hi,
        epsilon: total,
    })
}

/// Points from which a real segment subtends at least `pi / order`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StarRegion {
    pub k: KInterval,
    pub order: usize,
}

impl StarRegion {
    pub fn new(k: KInterval, order: usize) -> Self {
        Self { k, order }
    }

    /// Angle at `z` subtended by the segment; `pi` on the segment itself.
    pub fn angle(&self, z: Complex64) -> f64 {
        if z.im.abs() <= BOUNDARY_TOL && self.k.contains(z.re) {
            return std::f64::consts::PI;
        }
        ((self.k.hi - z) / (self.k.lo - z)).arg().abs()
    }

    pub fn contains(&self, z: Complex64) -> bool {
        self.angle(z) >= std::f64::consts::PI / self.order as f64 - BOUNDARY_TOL
    }
}

pub fn star_test(roots: &[Complex64], region: &StarRegion) -> Vec<bool> {
    roots.iter().map(|&z| region.contains(z)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Disc {
    pub center: f64,
    pub radius: f64,
}

impl Disc {
    pub fn contains(&self, z: Complex64) -> bool {
        (z - self.center).norm() <= self.radius + BOUNDARY_TOL * (1.0 + self.radius)
    }
}

/// Row discs of H and of its transpose.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GerschgorinDiscs {
    /// Centers `lambda_j` with radius 1, and `beta` with radius `sum |omega_j|`.
    pub rows: Vec<Disc>,
    /// Centers `lambda_j` with radius `|omega_j|`, and `beta` with radius `n`.
    pub columns: Vec<Disc>,
}

/// Which disc unions hold a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DiscMembership {
    pub rows: bool,
    pub columns: bool,
}

impl GerschgorinDiscs {
    pub fn membership(&self, z: Complex64) -> DiscMembership {
        DiscMembership {
            rows: self.rows.iter().any(|d| d.contains(z)),
            columns: self.columns.iter().any(|d| d.contains(z)),
        }
    }

    /// Smaller total area of the two unions (an upper bound, overlaps counted twice).
    pub fn tighter(&self) -> &[Disc] {
        let area = |v: &[Disc]| v.iter().map(|d| d.radius * d.radius).sum::<f64>();
        if area(&self.columns) < area(&self.rows) {
            &self.columns
        } else {
            &self.rows
        }
    }
}

pub fn gerschgorin(sys: &CanonicalSystem) -> GerschgorinDiscs {
    let l = sys.lambdas();
    let mut rows: Vec<Disc> = l
        .iter()
        .map(|&c| Disc {
            center: c,
            radius: 1.0,
        })
        .collect();
    rows.push(Disc {
        center: sys.beta(),
        radius: sys.omegas().iter().map(|w| w.abs()).sum(),
    });
    let mut columns: Vec<Disc> = l
        .iter()
        .zip(sys.omegas())
        .map(|(&c, w)| Disc {
            center: c,
            radius: w.abs(),
        })
        .collect();
    columns.push(Disc {
        center: sys.beta(),
        radius: sys.n() as f64,
    });
    GerschgorinDiscs { rows, columns }
}

/// Whether each root lies in the horizontal band `|Im| <= half_width`.
pub fn band_test(roots: &[Complex64], half_width: f64) -> Vec<bool> {
    roots
        .iter()
        .map(|z| z.im.abs() <= half_width + BOUNDARY_TOL)
        .collect()
}

/// Non-real roots: whether they lie in `[beta, lambda1] x [-eps, eps]`.
pub fn rectangle_test(
    roots: &[Complex64],
    beta: f64,
    lambda1: f64,
    epsilon: f64,
) -> Vec<Option<bool>> {
    strip_test(roots, beta, lambda1)
        .into_iter()
        .zip(band_test(roots, epsilon))
        .map(|(s, b)| s.map(|s| s && b))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AnnulusBucket {
    InsideDisc,
    InAnnulus,
    Outside,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnnulusReport {
    pub buckets: Vec<AnnulusBucket>,
    pub any_in_annulus: bool,
    pub all_in_disc_lambda1: bool,
}

/// Bucket each root by modulus against the open ring `lambda2 < |z| < lambda1`.
pub fn annulus_report(roots: &[Complex64], lambda2: f64, lambda1: f64) -> Result<AnnulusReport> {
    if !(lambda2 < lambda1) {
        return Err(Error::InvalidInput(format!(
            "annulus needs lambda2 < lambda1, got {lambda2} and {lambda1}"
        )));
    }
    let buckets: Vec<AnnulusBucket> = roots
        .iter()
        .map(|z| {
            let r = z.norm();
            if r <= lambda2 {
                AnnulusBucket::InsideDisc
            } else if r < lambda1 {
                AnnulusBucket::InAnnulus
            } else {
                AnnulusBucket::Outside
            }
        })
        .collect();
    Ok(AnnulusReport {
        any_in_annulus: buckets.contains(&AnnulusBucket::InAnnulus),
        all_in_disc_lambda1: roots.iter().all(|z| z.norm() < lambda1),
        buckets,
    })
}
