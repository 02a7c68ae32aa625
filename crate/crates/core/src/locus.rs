//! One-parameter root loci, bifurcation events and their classification,
//! large-weight asymptotics, and the two-pole circle.

use num_complex::Complex64;
use serde::Serialize;

use crate::charpoly::{beta_jet, polar_jet};
use crate::error::{Error, Result};
use crate::model::{CanonicalSystem, Coordinate};
use crate::roots::greedy_match;
use crate::spectra::{
    continue_unchecked, dense_eigenvalues, eigenvalues, label_roots, RootLabeling, REAL_TOL,
};

/// Parameter tolerance for event bisection.
pub const EVENT_TOL: f64 = 1e-10;
/// Parameter offset at which the initial real-part motion is measured.
pub const DIRECTION_OFFSET: f64 = 1e-4;
/// A grid interval is split when a root moves more than this fraction of
/// the smallest pairwise gap.
pub const REFINE_FRACTION: f64 = 0.05;
/// Maximum number of nested grid refinements per interval.
pub const MAX_REFINE: usize = 4;
/// Relative cutoff for a vanishing second or third derivative.
pub const JET_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EventKind {
    RealPairToConjugate,
    ConjugateToRealPair,
}

/// A point where two labeled roots meet on the real axis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BifurcationEvent {
    pub coordinate: Coordinate,
    pub parameter_value: f64,
    /// One-based labels of the meeting roots.
    pub indices: (usize, usize),
    pub kind: EventKind,
    /// Location of the double root.
    pub coincidence: f64,
    /// Change of the real part over [`DIRECTION_OFFSET`] into the complex side.
    pub re_motion: f64,
    /// Sign of `re_motion` (0 when below 1e-12).
    pub direction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocusTrace {
    pub coordinate: Coordinate,
    pub grid: Vec<f64>,
    pub labelings: Vec<RootLabeling>,
    pub events: Vec<BifurcationEvent>,
}

impl LocusTrace {
    /// Rows `(param, one-based index, re, im, is_real)`.
    pub fn rows(&self) -> impl Iterator<Item = (f64, usize, f64, f64, bool)> + '_ {
        self.grid.iter().zip(&self.labelings).flat_map(|(&p, l)| {
            l.roots
                .iter()
                .zip(&l.is_real)
                .enumerate()
                .map(move |(i, (z, &r))| (p, i + 1, z.re, z.im, r))
        })
    }
}

fn min_gap(roots: &[Complex64]) -> f64 {
    let mut g = f64::INFINITY;
    for i in 0..roots.len() {
        for k in i + 1..roots.len() {
            g = g.min((roots[i] - roots[k]).norm());
        }
    }
    g
}

/// Trace on `samples` evenly spaced values of `coord` in `[lo, hi]`.
pub fn trace_locus(
    sys: &CanonicalSystem,
    coord: Coordinate,
    lo: f64,
    hi: f64,
    samples: usize,
) -> Result<LocusTrace> {
    if samples < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 samples, got {samples}"
        )));
    }
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(Error::InvalidInput(format!("invalid range [{lo}, {hi}]")));
    }
    let grid: Vec<f64> = (0..samples)
        .map(|i| lo + (hi - lo) * i as f64 / (samples - 1) as f64)
        .collect();
    trace_locus_on(sys, coord, &grid)
}

/// Trace on an explicit non-decreasing grid. Intervals where roots move
/// fast relative to their separation are refined.
pub fn trace_locus_on(
    sys: &CanonicalSystem,
    coord: Coordinate,
    grid: &[f64],
) -> Result<LocusTrace> {
    if grid.len() < 2
        || grid.windows(2).any(|w| !(w[0] <= w[1]))
        || grid.iter().any(|x| !x.is_finite())
    {
        return Err(Error::InvalidInput(
            "grid must be finite, non-decreasing, length >= 2".into(),
        ));
    }
    let at = |p: f64| sys.with_coordinate(coord, p);
    let mut params = vec![grid[0]];
    let mut labelings = vec![label_roots(&at(grid[0])?, None)?];
    for &p in &grid[1..] {
        let prev_p = *params.last().unwrap();
        let prev = labelings.last().unwrap().clone();
        refine(&at, prev_p, &prev, p, 0, &mut params, &mut labelings)?;
    }
    let mut events = Vec::new();
    for s in 0..params.len() - 1 {
        let (a, b) = (&labelings[s], &labelings[s + 1]);
        for i in 0..a.len() {
            for k in i + 1..a.len() {
                let kind = match (pair_state(a, i, k), pair_state(b, i, k)) {
                    (PairState::Real, PairState::Conjugate) => EventKind::RealPairToConjugate,
                    (PairState::Conjugate, PairState::Real) => EventKind::ConjugateToRealPair,
                    _ => continue,
                };
                events.push(localize(
                    sys,
                    coord,
                    params[s],
                    a,
                    params[s + 1],
                    (i, k),
                    kind,
                )?);
            }
        }
    }
    Ok(LocusTrace {
        coordinate: coord,
        grid: params,
        labelings,
        events,
    })
}

fn refine<F>(
    at: &F,
    p0: f64,
    l0: &RootLabeling,
    p1: f64,
    depth: usize,
    params: &mut Vec<f64>,
    labelings: &mut Vec<RootLabeling>,
) -> Result<()>
where
    F: Fn(f64) -> Result<CanonicalSystem>,
{
    let l1 = label_roots(&at(p1)?, Some(l0))?;
    let moved = l0
        .roots
        .iter()
        .zip(&l1.roots)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    if depth < MAX_REFINE && moved > REFINE_FRACTION * min_gap(&l0.roots) {
        let pm = 0.5 * (p0 + p1);
        refine(at, p0, l0, pm, depth + 1, params, labelings)?;
        let lm = labelings.last().unwrap().clone();
        return refine(at, pm, &lm, p1, depth + 1, params, labelings);
    }
    params.push(p1);
    labelings.push(l1);
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PairState {
    Real,
    Conjugate,
    Other,
}

fn pair_state(l: &RootLabeling, i: usize, k: usize) -> PairState {
    let (a, b) = (l.roots[i], l.roots[k]);
    if l.is_real[i] && l.is_real[k] {
        PairState::Real
    } else if a.im != 0.0 && (a - b.conj()).norm() <= REAL_TOL * (1.0 + a.norm()) {
        PairState::Conjugate
    } else {
        PairState::Other
    }
}

/// The real map whose critical points are the double roots along `coord`.
/// Returns `[phi, phi', phi'', phi''']` where `phi(kappa)` is the parameter
/// value making `kappa` an eigenvalue.
pub fn parameter_jet(sys: &CanonicalSystem, coord: Coordinate, kappa: f64) -> Result<[f64; 4]> {
    let z = Complex64::new(kappa, 0.0);
    let jet = match coord {
        Coordinate::Omega(j) => {
            let d = sys.deltas()[j];
            polar_jet(sys, z, j)?.map(|v| -d * v)
        }
        Coordinate::Beta => beta_jet(sys, z)?,
    };
    Ok(jet.map(|v| v.re))
}

fn localize(
    sys: &CanonicalSystem,
    coord: Coordinate,
    p_lo: f64,
    l_lo: &RootLabeling,
    p_hi: f64,
    pair: (usize, usize),
    kind: EventKind,
) -> Result<BifurcationEvent> {
    let at = |p: f64| sys.with_coordinate(coord, p);
    let start_real = kind == EventKind::RealPairToConjugate;
    let (mut lo, mut hi) = (p_lo, p_hi);
    let mut lab_lo = l_lo.clone();
    let mut lab_hi = label_roots(&at(p_hi)?, Some(l_lo))?;
    while hi - lo > EVENT_TOL * (1.0 + lo.abs().max(hi.abs())) {
        let mid = 0.5 * (lo + hi);
        let lab = continue_unchecked(&at(mid)?, &lab_lo)?;
        let d = lab.roots[pair.0] - lab.roots[pair.1];
        let real_side = (d * d).re >= 0.0;
        if real_side == start_real {
            lo = mid;
            lab_lo = lab;
        } else {
            hi = mid;
            lab_hi = lab;
        }
    }
    let mut kappa = 0.25
        * (lab_lo.roots[pair.0]
            + lab_lo.roots[pair.1]
            + lab_hi.roots[pair.0]
            + lab_hi.roots[pair.1])
            .re;
    let mut param = 0.5 * (lo + hi);

    // Polish the double root as a critical point of the parameter map.
    let mut z = kappa;
    let mut ok = true;
    for _ in 0..20 {
        let Ok(j) = parameter_jet(sys, coord, z) else {
            ok = false;
            break;
        };
        if j[2] == 0.0 {
            ok = false;
            break;
        }
        let step = j[1] / j[2];
        z -= step;
        if step.abs() <= 1e-15 * (1.0 + z.abs()) {
            break;
        }
    }
    if ok && (z - kappa).abs() < 1e-3 * (1.0 + kappa.abs()) {
        if let Ok(j) = parameter_jet(sys, coord, z) {
            if (j[0] - param).abs() < 1e-6 * (1.0 + param.abs()) {
                kappa = z;
                param = j[0];
            }
        }
    }

    let (probe, anchor) = if start_real {
        (param + DIRECTION_OFFSET, &lab_hi)
    } else {
        (param - DIRECTION_OFFSET, &lab_lo)
    };
    let moved = label_roots(&at(probe)?, Some(anchor))?;
    let re_motion = 0.5 * (moved.roots[pair.0].re + moved.roots[pair.1].re) - kappa;
    let direction = if re_motion.abs() < 1e-12 {
        0.0
    } else {
        re_motion.signum()
    };
    Ok(BifurcationEvent {
        coordinate: coord,
        parameter_value: param,
        indices: (pair.0 + 1, pair.1 + 1),
        kind,
        coincidence: kappa,
        re_motion,
        direction,
    })
}

/// Predicted versus measured initial real-part motion at an event.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirectionCheck {
    pub second: f64,
    pub third: f64,
    /// Sign of `second / third`.
    pub predicted: f64,
    pub measured: f64,
    pub agree: bool,
}

/// Compare the sign of `phi''/phi'''` at the double root with the measured
/// motion. Fails with `DegenerateJet` when either derivative vanishes.
pub fn classify_bifurcation(
    sys: &CanonicalSystem,
    event: &BifurcationEvent,
) -> Result<DirectionCheck> {
    let j = parameter_jet(sys, event.coordinate, event.coincidence)?;
    let (second, third) = (j[2], j[3]);
    let scale = 1.0 + second.abs();
    if second.abs() < JET_TOL || third.abs() < JET_TOL * scale {
        return Err(Error::DegenerateJet { second, third });
    }
    let predicted = (second / third).signum();
    Ok(DirectionCheck {
        second,
        third,
        predicted,
        measured: event.direction,
        agree: predicted == event.direction,
    })
}

/// Large-weight behaviour of the unbounded root pair for weight `j`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoteInfo {
    /// Zero-based weight index.
    pub index: usize,
    /// `sum_{h != j} w_h (lambda_j - lambda_h)`.
    pub a_j: f64,
    /// `(lambda_j + beta) / 2`.
    pub center: f64,
    /// Expected exponent of the half-spread of the pair in `|omega_j|`.
    pub spread_exponent: f64,
    /// Expected exponent of the real-part offset from `center`.
    pub offset_exponent: f64,
    pub fit: AsymptoteFit,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoteFit {
    pub magnitudes: Vec<f64>,
    /// Half the distance between the two largest roots.
    pub spreads: Vec<f64>,
    /// Mean real part of the pair minus `center`.
    pub offsets: Vec<f64>,
    pub spread_slope: f64,
    pub offset_slope: f64,
    /// `offset * |omega_j|` at the largest magnitude.
    pub offset_coefficient: f64,
    /// The coefficient the expansion predicts.
    pub predicted_coefficient: f64,
}

fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Asymptote data with a fit at `|omega_j|` in {1e2, 1e3, 1e4}.
pub fn asymptote_info(sys: &CanonicalSystem, j: usize) -> Result<AsymptoteInfo> {
    asymptote_fit(sys, j, &[1e2, 1e3, 1e4])
}

/// As [`asymptote_info`] on caller-chosen magnitudes. The sign of `omega_j`
/// is kept from `sys` (positive when it is zero).
pub fn asymptote_fit(sys: &CanonicalSystem, j: usize, magnitudes: &[f64]) -> Result<AsymptoteInfo> {
    let n = sys.n();
    if j >= n {
        return Err(Error::InvalidInput(format!(
            "index {} out of range for n = {n}",
            j + 1
        )));
    }
    if magnitudes.len() < 2 || magnitudes.iter().any(|&m| !(m > 0.0)) {
        return Err(Error::InvalidInput(
            "need at least two positive magnitudes".into(),
        ));
    }
    let l = sys.lambdas();
    let w = sys.weights();
    let terms: Vec<f64> = (0..n)
        .filter(|&h| h != j)
        .map(|h| w[h] * (l[j] - l[h]))
        .collect();
    let a_j: f64 = terms.iter().sum();
    let size: f64 = terms.iter().map(|t| t.abs()).sum();
    if size == 0.0 || a_j.abs() <= 1e-12 * size {
        return Err(Error::ZeroA { index: j + 1 });
    }
    let center = 0.5 * (l[j] + sys.beta());
    let sign = if sys.omegas()[j] < 0.0 { -1.0 } else { 1.0 };

    let mut spreads = Vec::new();
    let mut offsets = Vec::new();
    for &m in magnitudes {
        let s = sys.with_coordinate(Coordinate::Omega(j), sign * m)?;
        let mut r = eigenvalues(&s)?.roots;
        r.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
        spreads.push(0.5 * (r[0] - r[1]).norm());
        offsets.push(0.5 * (r[0].re + r[1].re) - center);
    }
    let lx: Vec<f64> = magnitudes.iter().map(|m| m.ln()).collect();
    let spread_slope = slope(&lx, &spreads.iter().map(|s| s.ln()).collect::<Vec<_>>());
    let offset_slope = slope(
        &lx,
        &offsets.iter().map(|s| s.abs().ln()).collect::<Vec<_>>(),
    );
    let last = magnitudes.len() - 1;
    let wj_sign = sign * sys.deltas()[j];
    Ok(AsymptoteInfo {
        index: j,
        a_j,
        center,
        spread_exponent: 0.5,
        offset_exponent: -1.0,
        fit: AsymptoteFit {
            magnitudes: magnitudes.to_vec(),
            spreads,
            offsets: offsets.clone(),
            spread_slope,
            offset_slope,
            offset_coefficient: offsets[last] * magnitudes[last],
            predicted_coefficient: -wj_sign * a_j / 2.0,
        },
    })
}

/// Distance from the bounded roots at `|omega_j| = magnitude` to the
/// remaining poles `lambda_k`, `k != j`.
pub fn bounded_limit_distance(sys: &CanonicalSystem, j: usize, magnitude: f64) -> Result<f64> {
    let sign = if sys.omegas()[j] < 0.0 { -1.0 } else { 1.0 };
    let s = sys.with_coordinate(Coordinate::Omega(j), sign * magnitude)?;
    let mut r = dense_eigenvalues(&s);
    r.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
    let bounded = &r[2..];
    let poles: Vec<Complex64> = (0..sys.n())
        .filter(|&k| k != j)
        .map(|k| sys.lambdas()[k].into())
        .collect();
    Ok(greedy_match(bounded, &poles).1)
}

/// Geometry of the two-pole circle for `tau`, `t_coeff`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CircleGeometry {
    pub x_plus: f64,
    pub x_minus: f64,
    pub k_plus: f64,
    pub k_minus: f64,
    pub center: f64,
    pub radius: f64,
}

pub fn circle_geometry(tau: f64, t_coeff: f64) -> Result<CircleGeometry> {
    if !(tau > 0.0 && t_coeff > 0.0 && tau.is_finite() && t_coeff.is_finite()) {
        return Err(Error::InvalidInput(
            "tau and T must be positive and finite".into(),
        ));
    }
    let x_plus = tau / (1.0 + t_coeff);
    let x_minus = tau / (1.0 - t_coeff);
    Ok(CircleGeometry {
        x_plus,
        x_minus,
        k_plus: (1.0 + t_coeff).powi(2) / tau,
        k_minus: (1.0 - t_coeff).powi(2) / tau,
        center: 0.5 * (x_plus + x_minus),
        radius: 0.5 * (x_plus - x_minus).abs(),
    })
}

/// Roots of `z^2 - (tau + (1 - T^2)/k) z + tau/k = 0` for `k` in the
/// closed band `[K-, K+]`, upper-half-plane root first.
pub fn circle_two_pole(tau: f64, t_coeff: f64, k: f64) -> Result<(Complex64, Complex64)> {
    let g = circle_geometry(tau, t_coeff)?;
    if !(k > 0.0 && k >= g.k_minus && k <= g.k_plus) {
        return Err(Error::OutOfBand {
            k,
            lower: g.k_minus,
            upper: g.k_plus,
        });
    }
    let b = tau + (1.0 - t_coeff * t_coeff) / k;
    // b^2 - 4 tau / k = (tau k - (1 + T)^2)(tau k - (1 - T)^2) / k^2, with
    // each factor snapped to zero at the band edges.
    let u = tau * k;
    let edge = |a: f64| {
        let f = u - a;
        if f.abs() <= 4.0 * f64::EPSILON * a.max(u) {
            0.0
        } else {
            f
        }
    };
    let upper = edge((1.0 + t_coeff).powi(2));
    let lower = edge((1.0 - t_coeff).powi(2));
    let disc = Complex64::new(upper * lower, 0.0).sqrt() / k;
    let z1 = 0.5 * (b + disc);
    let z2 = 0.5 * (b - disc);
    Ok(if z1.im >= z2.im { (z1, z2) } else { (z2, z1) })
}

/// Largest deviation of `points` from the circle `|z - center| = radius`.
pub fn circle_deviation(points: &[Complex64], center: f64, radius: f64) -> f64 {
    points
        .iter()
        .map(|z| ((z - center).norm() - radius).abs())
        .fold(0.0, f64::max)
}
