//! Domain types for bordered diagonal systems and conversion from a general
//! (A, b, w, beta) description into canonical form.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative gap below which two reduced eigenvalues count as repeated.
pub const DUPLICATE_GAP: f64 = 1e-8;
/// Imaginary-part cutoff for accepting a reduced eigenvalue as real.
pub const REAL_CUTOFF: f64 = 1e-9;

/// Ordered eigenvalues of the reduced matrix, strictly decreasing and positive.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReducedSpectrum {
    lambdas: Vec<f64>,
}

impl ReducedSpectrum {
    pub fn new(lambdas: Vec<f64>) -> Result<Self> {
        if lambdas.is_empty() {
            return Err(Error::InvalidInput("reduced spectrum is empty".into()));
        }
        for (i, &l) in lambdas.iter().enumerate() {
            if !l.is_finite() || l <= 0.0 {
                return Err(Error::InvalidInput(format!(
                    "lambda_{} = {l} must be finite and strictly positive",
                    i + 1
                )));
            }
        }
        for (i, w) in lambdas.windows(2).enumerate() {
            if w[0] <= w[1] {
                return Err(Error::InvalidInput(format!(
                    "lambdas must be strictly decreasing (lambda_{} = {} <= lambda_{} = {})",
                    i + 1,
                    w[0],
                    i + 2,
                    w[1]
                )));
            }
            if (w[0] - w[1]) < DUPLICATE_GAP * w[0].abs().max(w[1].abs()) {
                return Err(Error::ComplexOrRepeatedEigenvalues(format!(
                    "lambda_{} and lambda_{} are within relative gap {DUPLICATE_GAP}",
                    i + 1,
                    i + 2
                )));
            }
        }
        Ok(Self { lambdas })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    /// Largest reduced eigenvalue.
    pub fn dominant(&self) -> f64 {
        self.lambdas[0]
    }
}

/// Border-column signs, each exactly +1 or -1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Signs {
    deltas: Vec<f64>,
}

impl Signs {
    pub fn new(deltas: Vec<f64>) -> Result<Self> {
        for (i, &d) in deltas.iter().enumerate() {
            if d != 1.0 && d != -1.0 {
                return Err(Error::InvalidInput(format!(
                    "delta_{} = {d} must be +1 or -1",
                    i + 1
                )));
            }
        }
        Ok(Self { deltas })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.deltas
    }

    pub fn len(&self) -> usize {
        self.deltas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.deltas.is_empty()
    }
}

/// Bottom row of the bordered matrix: `omegas` then the corner `beta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Policy {
    pub omegas: Vec<f64>,
    pub beta: f64,
}

impl Policy {
    pub fn new(omegas: Vec<f64>, beta: f64) -> Result<Self> {
        if omegas.iter().any(|w| !w.is_finite()) || !beta.is_finite() {
            return Err(Error::InvalidInput("policy entries must be finite".into()));
        }
        Ok(Self { omegas, beta })
    }

    /// Policy as a flat vector (omega_1, ..., omega_n, beta).
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.omegas.clone();
        v.push(self.beta);
        v
    }

    pub fn from_slice(v: &[f64]) -> Result<Self> {
        let (beta, omegas) = v
            .split_last()
            .ok_or_else(|| Error::InvalidInput("empty policy vector".into()))?;
        Self::new(omegas.to_vec(), *beta)
    }
}

/// Which coordinate of the policy vector a one-parameter path moves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Coordinate {
    /// Zero-based index into `omegas`.
    Omega(usize),
    Beta,
}

impl Coordinate {
    pub fn get(&self, policy: &Policy) -> f64 {
        match *self {
            Coordinate::Omega(k) => policy.omegas[k],
            Coordinate::Beta => policy.beta,
        }
    }

    pub fn set(&self, policy: &mut Policy, value: f64) {
        match *self {
            Coordinate::Omega(k) => policy.omegas[k] = value,
            Coordinate::Beta => policy.beta = value,
        }
    }

    /// Position in the flat policy vector.
    pub fn flat_index(&self, n: usize) -> usize {
        match *self {
            Coordinate::Omega(k) => k,
            Coordinate::Beta => n,
        }
    }
}

impl std::fmt::Display for Coordinate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Coordinate::Omega(k) => write!(f, "omega{}", k + 1),
            Coordinate::Beta => write!(f, "beta"),
        }
    }
}

impl std::str::FromStr for Coordinate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        if s == "beta" {
            return Ok(Coordinate::Beta);
        }
        let idx = s
            .strip_prefix("omega")
            .and_then(|r| r.parse::<usize>().ok())
            .filter(|&k| k >= 1)
            .ok_or_else(|| {
                Error::InvalidInput(format!("unknown coordinate '{s}' (use omegaK or beta)"))
            })?;
        Ok(Coordinate::Omega(idx - 1))
    }
}

/// Spectrum, signs and policy: everything needed to build H.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CanonicalSystem {
    spectrum: ReducedSpectrum,
    signs: Signs,
    policy: Policy,
}

impl CanonicalSystem {
    pub fn new(spectrum: ReducedSpectrum, signs: Signs, policy: Policy) -> Result<Self> {
        let n = spectrum.len();
        if signs.len() != n || policy.omegas.len() != n {
            return Err(Error::InvalidInput(format!(
                "length mismatch: {} lambdas, {} deltas, {} omegas",
                n,
                signs.len(),
                policy.omegas.len()
            )));
        }
        Ok(Self {
            spectrum,
            signs,
            policy,
        })
    }

    /// Convenience constructor from raw vectors.
    pub fn from_parts(lambdas: &[f64], deltas: &[f64], omegas: &[f64], beta: f64) -> Result<Self> {
        Self::new(
            ReducedSpectrum::new(lambdas.to_vec())?,
            Signs::new(deltas.to_vec())?,
            Policy::new(omegas.to_vec(), beta)?,
        )
    }

    pub fn n(&self) -> usize {
        self.spectrum.len()
    }

    pub fn spectrum(&self) -> &ReducedSpectrum {
        &self.spectrum
    }

    pub fn signs(&self) -> &Signs {
        &self.signs
    }

    pub fn policy(&self) -> &Policy {
        &self.policy
    }

    pub fn lambdas(&self) -> &[f64] {
        self.spectrum.as_slice()
    }

    pub fn deltas(&self) -> &[f64] {
        self.signs.as_slice()
    }

    pub fn omegas(&self) -> &[f64] {
        &self.policy.omegas
    }

    pub fn beta(&self) -> f64 {
        self.policy.beta
    }

    /// Products omega_j * delta_j, the similarity-invariant border weights.
    pub fn weights(&self) -> Vec<f64> {
        self.omegas()
            .iter()
            .zip(self.deltas())
            .map(|(w, d)| w * d)
            .collect()
    }

    /// Same spectrum and signs with a different policy.
    pub fn with_policy(&self, policy: Policy) -> Result<Self> {
        Self::new(self.spectrum.clone(), self.signs.clone(), policy)
    }

    /// Same system with one coordinate replaced.
    pub fn with_coordinate(&self, coord: Coordinate, value: f64) -> Result<Self> {
        let mut p = self.policy.clone();
        if let Coordinate::Omega(k) = coord {
            if k >= self.n() {
                return Err(Error::InvalidInput(format!(
                    "coordinate omega{} out of range for n = {}",
                    k + 1,
                    self.n()
                )));
            }
        }
        coord.set(&mut p, value);
        self.with_policy(Policy::new(p.omegas, p.beta)?)
    }

    /// The decoupled system with all omegas zero.
    pub fn decoupled(&self) -> Self {
        let mut s = self.clone();
        s.policy.omegas.iter_mut().for_each(|w| *w = 0.0);
        s
    }

    pub fn trace(&self) -> f64 {
        self.lambdas().iter().sum::<f64>() + self.beta()
    }

    /// Length scale used for relative tolerances.
    pub fn scale(&self) -> f64 {
        1.0 + self
            .lambdas()
            .iter()
            .chain(self.omegas())
            .chain(std::iter::once(&self.policy.beta))
            .fold(0.0_f64, |m, x| m.max(x.abs()))
    }
}

/// Dense bordered matrix [[diag(lambda), delta], [omega^T, beta]].
pub fn build_h(sys: &CanonicalSystem) -> DMatrix<f64> {
    let n = sys.n();
    let mut h = DMatrix::zeros(n + 1, n + 1);
    for j in 0..n {
        h[(j, j)] = sys.lambdas()[j];
        h[(j, n)] = sys.deltas()[j];
        h[(n, j)] = sys.omegas()[j];
    }
    h[(n, n)] = sys.beta();
    h
}

/// A general system z' = A z + b d, d' = w^T z + beta d.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralSystem {
    pub a_matrix: DMatrix<f64>,
    pub b: DVector<f64>,
    pub w: DVector<f64>,
    pub beta: f64,
}

impl GeneralSystem {
    pub fn new(
        a_matrix: DMatrix<f64>,
        b: DVector<f64>,
        w: DVector<f64>,
        beta: f64,
    ) -> Result<Self> {
        let n = a_matrix.nrows();
        if n == 0 || a_matrix.ncols() != n || b.len() != n || w.len() != n {
            return Err(Error::InvalidInput(format!(
                "general system needs square A matching b and w; got A {}x{}, b {}, w {}",
                a_matrix.nrows(),
                a_matrix.ncols(),
                b.len(),
                w.len()
            )));
        }
        if a_matrix
            .iter()
            .chain(b.iter())
            .chain(w.iter())
            .any(|x| !x.is_finite())
            || !beta.is_finite()
        {
            return Err(Error::InvalidInput(
                "general system entries must be finite".into(),
            ));
        }
        Ok(Self {
            a_matrix,
            b,
            w,
            beta,
        })
    }

    /// The full (n+1)x(n+1) bordered matrix.
    pub fn bordered(&self) -> DMatrix<f64> {
        let n = self.a_matrix.nrows();
        let mut h = DMatrix::zeros(n + 1, n + 1);
        h.view_mut((0, 0), (n, n)).copy_from(&self.a_matrix);
        for j in 0..n {
            h[(j, n)] = self.b[j];
            h[(n, j)] = self.w[j];
        }
        h[(n, n)] = self.beta;
        h
    }
}

/// Rescale a general system into canonical form.
///
/// Each eigen-direction of A is rescaled so the border column becomes
/// +1 or -1; the policy row absorbs the magnitude.
pub fn canonicalize(sys: &GeneralSystem) -> Result<CanonicalSystem> {
    let a = &sys.a_matrix;
    let n = a.nrows();
    let norm = a.norm().max(f64::MIN_POSITIVE);

    let eig = a.complex_eigenvalues();
    let mut lambdas = Vec::with_capacity(n);
    for z in eig.iter() {
        if z.im.abs() > REAL_CUTOFF * (1.0 + z.norm()) {
            return Err(Error::ComplexOrRepeatedEigenvalues(format!(
                "eigenvalue {z} is not real"
            )));
        }
        lambdas.push(z.re);
    }
    lambdas.sort_by(|x, y| y.total_cmp(x));
    for w in lambdas.windows(2) {
        if w[0] - w[1] < DUPLICATE_GAP * w[0].abs().max(w[1].abs()).max(1e-300) {
            return Err(Error::ComplexOrRepeatedEigenvalues(format!(
                "eigenvalues {} and {} coincide",
                w[0], w[1]
            )));
        }
    }
    if let Some(l) = lambdas.iter().find(|&&l| l <= 0.0) {
        return Err(Error::InvalidInput(format!(
            "reduced eigenvalue {l} is not strictly positive"
        )));
    }

    // Right eigenvectors as unit null vectors of A - lambda I.
    let mut s = DMatrix::zeros(n, n);
    for (j, &l) in lambdas.iter().enumerate() {
        let shifted = a - DMatrix::identity(n, n) * l;
        let svd = shifted.svd(false, true);
        let v_t = svd.v_t.ok_or(Error::NotDiagonalizable)?;
        let (imin, _) = svd
            .singular_values
            .iter()
            .enumerate()
            .min_by(|x, y| x.1.total_cmp(y.1))
            .ok_or(Error::NotDiagonalizable)?;
        s.set_column(j, &v_t.row(imin).transpose());
    }
    let s_inv = s.clone().try_inverse().ok_or(Error::NotDiagonalizable)?;
    let check = &s_inv * a * &s;
    let off_diag = check
        .iter()
        .enumerate()
        .filter(|(k, _)| k % (n + 1) != 0)
        .fold(0.0_f64, |m, (_, x)| m.max(x.abs()));
    if off_diag > 1e-6 * norm {
        return Err(Error::NotDiagonalizable);
    }

    let c = &s_inv * &sys.b;
    let row = sys.w.transpose() * &s;
    let mut deltas = Vec::with_capacity(n);
    let mut omegas = Vec::with_capacity(n);
    for j in 0..n {
        if c[j].abs() <= 1e-12 * norm {
            return Err(Error::ZeroSignificanceCoefficient {
                index: j + 1,
                magnitude: c[j].abs(),
            });
        }
        deltas.push(c[j].signum());
        omegas.push(row[j] * c[j].abs());
    }
    CanonicalSystem::from_parts(&lambdas, &deltas, &omegas, sys.beta)
}

/// Canonical JSON descriptor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CanonicalDescriptor {
    pub lambdas: Vec<f64>,
    pub deltas: Vec<f64>,
    pub omegas: Vec<f64>,
    pub beta: f64,
}

/// General JSON descriptor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneralDescriptor {
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub w: Vec<f64>,
    pub beta: f64,
}

/// Either descriptor shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SystemDescriptor {
    Canonical(CanonicalDescriptor),
    General(GeneralDescriptor),
}

impl SystemDescriptor {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| Error::InvalidInput(format!("system descriptor: {e}")))
    }

    pub fn into_system(self) -> Result<CanonicalSystem> {
        match self {
            SystemDescriptor::Canonical(d) => {
                CanonicalSystem::from_parts(&d.lambdas, &d.deltas, &d.omegas, d.beta)
            }
            SystemDescriptor::General(d) => {
                let n = d.a.len();
                if d.a.iter().any(|r| r.len() != n) {
                    return Err(Error::InvalidInput("A must be square".into()));
                }
                let a = DMatrix::from_fn(n, n, |i, j| d.a[i][j]);
                let gen =
                    GeneralSystem::new(a, DVector::from_vec(d.b), DVector::from_vec(d.w), d.beta)?;
                canonicalize(&gen)
            }
        }
    }
}

impl From<&CanonicalSystem> for CanonicalDescriptor {
    fn from(s: &CanonicalSystem) -> Self {
        Self {
            lambdas: s.lambdas().to_vec(),
            deltas: s.deltas().to_vec(),
            omegas: s.omegas().to_vec(),
            beta: s.beta(),
        }
    }
}

/// Parse a JSON descriptor of either shape into a canonical system.
pub fn parse_system(text: &str) -> Result<CanonicalSystem> {
    SystemDescriptor::from_json(text)?.into_system()
}
