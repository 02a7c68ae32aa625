//! Forward simulation of the dividend dynamics, present value of the
//! dividend stream, and numerical probes of policy irrelevance.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{build_h, CanonicalSystem, Policy};
use crate::spectra::dense_eigenvalues;

/// Components beyond this magnitude abort a simulation.
pub const OVERFLOW_LIMIT: f64 = 1e300;
/// Tail bound at which the truncated series stops.
pub const TAIL_TOL: f64 = 1e-10;
/// Hard cap on series terms (or quadrature steps in continuous mode).
pub const MAX_TERMS: usize = 1_000_000;
/// Distance between the rate and an eigenvalue treated as resonance.
pub const RESONANCE_TOL: f64 = 1e-9;
/// Environment variable capping the probe's worker threads.
pub const THREADS_ENV: &str = "SPECTRA_THREADS";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InitialState {
    pub z0: Vec<f64>,
    pub d0: f64,
}

impl InitialState {
    pub fn new(z0: Vec<f64>, d0: f64) -> Result<Self> {
        if z0.iter().any(|x| !x.is_finite()) || !d0.is_finite() {
            return Err(Error::InvalidInput("initial state must be finite".into()));
        }
        Ok(Self { z0, d0 })
    }

    fn stacked(&self) -> DVector<f64> {
        let mut v = self.z0.clone();
        v.push(self.d0);
        DVector::from_vec(v)
    }

    fn check(&self, sys: &CanonicalSystem) -> Result<()> {
        if self.z0.len() != sys.n() {
            return Err(Error::InvalidInput(format!(
                "initial state has {} components, system has n = {}",
                self.z0.len(),
                sys.n()
            )));
        }
        Ok(())
    }
}

/// Discounting convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
pub enum Mode {
    /// `P0 = sum_{t >= 1} R^-t d_t`.
    #[default]
    Discrete,
    /// `P0 = integral_0^inf e^-rt d(t) dt` for `Z' = H Z`.
    Continuous,
}

/// States `Z_0, ..., Z_T`; the dividend is the last component.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub states: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn dividends(&self) -> impl Iterator<Item = f64> + '_ {
        self.states.iter().map(|s| *s.last().unwrap())
    }
}

pub fn simulate(sys: &CanonicalSystem, init: &InitialState, horizon: usize) -> Result<Trajectory> {
    init.check(sys)?;
    if horizon < 1 {
        return Err(Error::InvalidInput("horizon must be at least 1".into()));
    }
    let h = build_h(sys);
    let mut z = init.stacked();
    let mut states = Vec::with_capacity(horizon + 1);
    states.push(z.as_slice().to_vec());
    for t in 1..=horizon {
        z = &h * z;
        if z.iter().any(|x| !(x.abs() <= OVERFLOW_LIMIT)) {
            return Err(Error::Overflow { t });
        }
        states.push(z.as_slice().to_vec());
    }
    Ok(Trajectory { states })
}

/// Which printed closed form a value is compared with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ClosedFormVariant {
    /// `d0 + P0 = -R z0_j / delta_j`.
    NegatedDividend,
    /// `P0 = -lambda_j z0_j / delta_1 + d0`.
    AddedDividend,
    /// Continuous analogue `P0 = -z0_j / delta_j`.
    Continuous,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosedFormValue {
    pub variant: ClosedFormVariant,
    pub value: f64,
    /// Agrees with the series value to `1e-6 (1 + |P0|)`.
    pub matches_series: bool,
}

/// Closed forms available when the rate equals a reduced eigenvalue.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosedFormCheck {
    /// One-based index `j` with `rate = lambda_j`.
    pub index: usize,
    pub values: Vec<ClosedFormValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValuationReport {
    pub mode: Mode,
    pub rate: f64,
    pub p0_series: f64,
    pub p0_modal: f64,
    pub p0_resolvent: f64,
    /// Terms summed (or quadrature steps taken).
    pub truncation_t: usize,
    pub converged: bool,
    pub closed_form: Option<ClosedFormCheck>,
}

impl ValuationReport {
    /// Largest pairwise difference among the three values.
    pub fn spread(&self) -> f64 {
        let v = [self.p0_series, self.p0_modal, self.p0_resolvent];
        let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = v.iter().cloned().fold(f64::INFINITY, f64::min);
        max - min
    }
}

fn growth_guard(roots: &[Complex64], rate: f64, mode: Mode) -> Result<()> {
    if let Some(z) = roots.iter().find(|z| (*z - rate).norm() < RESONANCE_TOL) {
        return Err(Error::NearResonance { rate, kappa: *z });
    }
    let radius = match mode {
        Mode::Discrete => roots.iter().map(|z| z.norm()).fold(0.0, f64::max),
        Mode::Continuous => roots.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max),
    };
    if !(rate > radius + RESONANCE_TOL) {
        return Err(Error::DivergentSeries { radius, rate });
    }
    Ok(())
}

/// Whether the dynamics are discountable at `rate`.
pub fn converges(sys: &CanonicalSystem, rate: f64, mode: Mode) -> bool {
    growth_guard(&dense_eigenvalues(sys), rate, mode).is_ok()
}

/// Resolvent value: `e^T (R I - H)^-1 H Z0` (discrete) or
/// `e^T (r I - H)^-1 Z0` (continuous). Checks the growth condition.
pub fn present_value(
    sys: &CanonicalSystem,
    init: &InitialState,
    rate: f64,
    mode: Mode,
) -> Result<f64> {
    init.check(sys)?;
    growth_guard(&dense_eigenvalues(sys), rate, mode)?;
    Ok(resolvent_value(sys, init, rate, mode))
}

fn resolvent_value(sys: &CanonicalSystem, init: &InitialState, rate: f64, mode: Mode) -> f64 {
    let h = build_h(sys);
    let m = h.nrows();
    let z = init.stacked();
    let rhs = match mode {
        Mode::Discrete => &h * &z,
        Mode::Continuous => z,
    };
    let shifted = DMatrix::identity(m, m) * rate - h;
    let x = shifted
        .lu()
        .solve(&rhs)
        .unwrap_or_else(|| DVector::from_element(m, f64::NAN));
    x[m - 1]
}

/// Null vector of a complex square matrix (singular vector of the smallest
/// singular value).
fn null_vector(m: DMatrix<Complex64>) -> Option<DVector<Complex64>> {
    let svd = m.svd(false, true);
    let v_t = svd.v_t?;
    let (i, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))?;
    Some(v_t.row(i).transpose().map(|z| z.conj()))
}

/// Eigen-expansion of the initial state: `(kappa_h, l_h)` with
/// `d_t = sum_h l_h kappa_h^t`.
fn modal_weights(
    sys: &CanonicalSystem,
    init: &InitialState,
    roots: &[Complex64],
) -> Vec<(Complex64, Complex64)> {
    let h = build_h(sys).map(Complex64::from);
    let m = h.nrows();
    let z = init.stacked().map(Complex64::from);
    roots
        .iter()
        .map(|&k| {
            let shifted = &h - DMatrix::identity(m, m) * k;
            let right = null_vector(shifted.clone());
            let left = null_vector(shifted.transpose());
            let l = match (right, left) {
                (Some(v), Some(u)) => {
                    let uz: Complex64 = u.iter().zip(z.iter()).map(|(a, b)| a * b).sum();
                    let uv: Complex64 = u.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
                    uz / uv * v[m - 1]
                }
                _ => Complex64::new(f64::NAN, f64::NAN),
            };
            (k, l)
        })
        .collect()
}

fn modal_value(weights: &[(Complex64, Complex64)], rate: f64, mode: Mode) -> f64 {
    weights
        .iter()
        .map(|&(k, l)| match mode {
            Mode::Discrete => l * k / (rate - k),
            Mode::Continuous => l / (rate - k),
        })
        .sum::<Complex64>()
        .re
}

/// Truncated discounted sum of the simulated dividends.
fn series_discrete(
    sys: &CanonicalSystem,
    init: &InitialState,
    rate: f64,
    ratio: f64,
) -> (f64, usize, bool) {
    let h = build_h(sys) / rate;
    let mut y = init.stacked();
    let m = y.len();
    let mut sum = 0.0;
    let mut comp = 0.0;
    for t in 1..=MAX_TERMS {
        y = &h * y;
        let term = y[m - 1];
        let s = sum + term;
        comp += if sum.abs() >= term.abs() {
            (sum - s) + term
        } else {
            (term - s) + sum
        };
        sum = s;
        let tail = y.amax() * ratio / (1.0 - ratio);
        if t >= 8 && tail < TAIL_TOL * (1.0 + (sum + comp).abs()) {
            return (sum + comp, t, true);
        }
    }
    (sum + comp, MAX_TERMS, false)
}

/// Simpson quadrature of `e^-rt d(t)` using the exact step propagator
/// `exp(H dt)` built from the eigen-expansion.
fn series_continuous(
    sys: &CanonicalSystem,
    init: &InitialState,
    rate: f64,
    roots: &[Complex64],
) -> (f64, usize, bool) {
    let n1 = sys.n() + 1;
    let h = build_h(sys).map(Complex64::from);
    let mut vecs = DMatrix::zeros(n1, n1);
    for (i, &k) in roots.iter().enumerate() {
        if let Some(v) = null_vector(&h - DMatrix::identity(n1, n1) * k) {
            vecs.set_column(i, &v);
        }
    }
    let Some(inv) = vecs.clone().try_inverse() else {
        return (f64::NAN, 0, false);
    };
    let fastest = roots.iter().map(|z| z.norm()).fold(0.0, f64::max) + rate;
    let decay = rate - roots.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    let dt = 0.02 / fastest;
    let diag = DMatrix::from_diagonal(&DVector::from_iterator(
        n1,
        roots.iter().map(|&k| ((k - rate) * dt).exp()),
    ));
    let step = (&vecs * diag * inv).map(|z| z.re);

    let mut y = init.stacked();
    let mut sum = y[n1 - 1];
    for k in 1..=MAX_TERMS {
        y = &step * y;
        let weight = if k % 2 == 1 { 4.0 } else { 2.0 };
        if k % 2 == 0 {
            let tail = y.amax() / decay;
            let total = (sum + y[n1 - 1]) * dt / 3.0;
            if tail < TAIL_TOL * (1.0 + total.abs()) {
                return (total, k, true);
            }
        }
        sum += weight * y[n1 - 1];
    }
    (sum * dt / 3.0, MAX_TERMS, false)
}

fn closed_form(
    sys: &CanonicalSystem,
    init: &InitialState,
    rate: f64,
    mode: Mode,
    series: f64,
) -> Option<ClosedFormCheck> {
    let j = sys
        .lambdas()
        .iter()
        .position(|&l| (l - rate).abs() <= RESONANCE_TOL * (1.0 + rate.abs()))?;
    let zj = init.z0[j];
    let dj = sys.deltas()[j];
    let d1 = sys.deltas()[0];
    let l = sys.lambdas()[j];
    let candidates = match mode {
        Mode::Discrete => vec![
            (
                ClosedFormVariant::NegatedDividend,
                -rate * zj / dj - init.d0,
            ),
            (ClosedFormVariant::AddedDividend, -l * zj / d1 + init.d0),
        ],
        Mode::Continuous => vec![(ClosedFormVariant::Continuous, -zj / dj)],
    };
    let tol = 1e-6 * (1.0 + series.abs());
    Some(ClosedFormCheck {
        index: j + 1,
        values: candidates
            .into_iter()
            .map(|(variant, value)| ClosedFormValue {
                variant,
                value,
                matches_series: (value - series).abs() <= tol,
            })
            .collect(),
    })
}

/// Present value computed by truncated series (or quadrature), eigen
/// expansion, and resolvent solve.
pub fn equity(
    sys: &CanonicalSystem,
    init: &InitialState,
    rate: f64,
    mode: Mode,
) -> Result<ValuationReport> {
    init.check(sys)?;
    let roots = dense_eigenvalues(sys);
    growth_guard(&roots, rate, mode)?;
    let (p0_series, truncation_t, converged) = match mode {
        Mode::Discrete => {
            let ratio = roots.iter().map(|z| z.norm()).fold(0.0, f64::max) / rate;
            series_discrete(sys, init, rate, ratio)
        }
        Mode::Continuous => series_continuous(sys, init, rate, &roots),
    };
    let p0_modal = modal_value(&modal_weights(sys, init, &roots), rate, mode);
    let p0_resolvent = resolvent_value(sys, init, rate, mode);
    Ok(ValuationReport {
        mode,
        rate,
        p0_series,
        p0_modal,
        p0_resolvent,
        truncation_t,
        converged,
        closed_form: closed_form(sys, init, rate, mode, p0_series),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Irrelevant,
    Relevant,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DpiConfig {
    pub rate: f64,
    pub radius: f64,
    pub samples: usize,
    pub seed: u64,
    pub mode: Mode,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DpiSample {
    pub policy: Policy,
    /// `None` when the sample violates the growth condition.
    pub p0: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DpiReport {
    pub rate: f64,
    pub radius: f64,
    pub mode: Mode,
    pub seed: u64,
    pub base_p0: f64,
    pub samples: Vec<DpiSample>,
    pub accepted: usize,
    pub rejected: usize,
    pub max_spread: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
    /// Closed-form value when the rate is a reduced eigenvalue.
    pub formula_value: Option<f64>,
    /// Whether `beta >= 2 lambda_2 - lambda_1` (n >= 2 only).
    pub beta_bound_holds: Option<bool>,
}

/// Draw a point uniformly from the Euclidean ball of `radius` in `dim`
/// dimensions, from a stream dedicated to sample `index`.
fn ball_point(seed: u64, index: u64, dim: usize, radius: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let g: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
    let norm = g
        .iter()
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt()
        .max(f64::MIN_POSITIVE);
    let r = radius * rng.random::<f64>().powf(1.0 / dim as f64);
    g.into_iter().map(|x| x * r / norm).collect()
}

fn with_thread_cap<R: Send, F: FnOnce() -> R + Send>(f: F) -> R {
    let cap = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0);
    match cap.and_then(|n| rayon::ThreadPoolBuilder::new().num_threads(n).build().ok()) {
        Some(pool) => pool.install(f),
        None => f(),
    }
}

/// Sample policies in a ball around the current one and measure how much
/// the present value moves.
pub fn dpi_probe(
    sys: &CanonicalSystem,
    init: &InitialState,
    config: &DpiConfig,
) -> Result<DpiReport> {
    init.check(sys)?;
    if !(config.radius > 0.0 && config.radius.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "radius must be positive, got {}",
            config.radius
        )));
    }
    if config.samples < 8 {
        return Err(Error::InvalidInput(format!(
            "need at least 8 samples, got {}",
            config.samples
        )));
    }
    let rate = config.rate;
    let base_p0 = present_value(sys, init, rate, config.mode)?;
    let base = sys.policy().to_vec();
    let dim = base.len();

    let samples: Vec<Result<DpiSample>> = with_thread_cap(|| {
        (0..config.samples)
            .into_par_iter()
            .map(|i| {
                let offset = ball_point(config.seed, i as u64, dim, config.radius);
                let v: Vec<f64> = base.iter().zip(&offset).map(|(a, b)| a + b).collect();
                let policy = Policy::from_slice(&v)?;
                let s = sys.with_policy(policy.clone())?;
                let p0 = match present_value(&s, init, rate, config.mode) {
                    Ok(p) => Some(p),
                    Err(Error::DivergentSeries { .. } | Error::NearResonance { .. }) => None,
                    Err(e) => return Err(e),
                };
                Ok(DpiSample { policy, p0 })
            })
            .collect()
    });
    let samples = samples.into_iter().collect::<Result<Vec<_>>>()?;
    let values: Vec<f64> = samples.iter().filter_map(|s| s.p0).collect();
    let accepted = values.len();
    let rejected = samples.len() - accepted;
    if accepted == 0 {
        return Err(Error::AllSamplesRejected {
            samples: samples.len(),
        });
    }
    let hi = values.iter().cloned().fold(base_p0, f64::max);
    let lo = values.iter().cloned().fold(base_p0, f64::min);
    let max_spread = hi - lo;
    let tolerance = 1e-6 * (1.0 + base_p0.abs());
    let verdict = if 2 * rejected > samples.len() {
        Verdict::Inconclusive
    } else if max_spread < tolerance {
        Verdict::Irrelevant
    } else {
        Verdict::Relevant
    };
    let formula_value =
        closed_form(sys, init, rate, config.mode, base_p0).map(|c| c.values[0].value);
    let l = sys.lambdas();
    Ok(DpiReport {
        rate,
        radius: config.radius,
        mode: config.mode,
        seed: config.seed,
        base_p0,
        samples,
        accepted,
        rejected,
        max_spread,
        tolerance,
        verdict,
        formula_value,
        beta_bound_holds: (l.len() >= 2).then(|| sys.beta() >= 2.0 * l[1] - l[0]),
    })
}
