use num_complex::Complex64;
use thiserror::Error;

/// Everything that can go wrong in the toolkit.
///
/// Variants split into two families: input validation (the system or
/// request is malformed) and numerical failure (the computation was
/// attempted but could not meet its accuracy contract). The CLI maps these
/// onto distinct exit codes via [`Error::is_validation`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("reduced matrix is not diagonalizable")]
    NotDiagonalizable,

    #[error("reduced matrix has complex or repeated eigenvalues: {0}")]
    ComplexOrRepeatedEigenvalues(String),

    #[error("significance coefficient {index} vanishes in the eigenbasis (|b| = {magnitude:e})")]
    ZeroSignificanceCoefficient { index: usize, magnitude: f64 },

    #[error("evaluation point {kappa} is within {distance:e} of the pole lambda_{index}")]
    PoleProximity {
        kappa: Complex64,
        index: usize,
        distance: f64,
    },

    #[error("eigen solve and polynomial root find disagree by {distance:e}")]
    MethodDisagreement {
        distance: f64,
        eigen: Vec<Complex64>,
        polynomial: Vec<Complex64>,
    },

    #[error(
        "root labels {first} and {second} could not be separated near path parameter {parameter}"
    )]
    LabelCollision {
        first: usize,
        second: usize,
        parameter: f64,
    },

    #[error("third-derivative test is degenerate: f'' = {second:e}, f''' = {third:e}")]
    DegenerateJet { second: f64, third: f64 },

    #[error("asymptotic coefficient A_{index} vanishes")]
    ZeroA { index: usize },

    #[error("k = {k} lies outside the complex band ({lower}, {upper})")]
    OutOfBand { k: f64, lower: f64, upper: f64 },

    #[error("placement forward check failed: residual {residual:e}")]
    IllConditioned { residual: f64 },

    #[error("interval discriminant is negative: {0:e}")]
    NegativeDiscriminant(f64),

    #[error("labels {first} and {second} coincide: derivative formula is singular")]
    CriticalPoint { first: usize, second: usize },

    #[error("corollary hypotheses not met: {0}")]
    HypothesesNotMet(String),

    #[error("state overflow at t = {t}")]
    Overflow { t: usize },

    #[error("series diverges: spectral radius {radius} >= rate {rate}")]
    DivergentSeries { radius: f64, rate: f64 },

    #[error("rate {rate} resonates with eigenvalue {kappa}")]
    NearResonance { rate: f64, kappa: Complex64 },

    #[error("all {samples} probe samples violate the convergence guard")]
    AllSamplesRejected { samples: usize },
}

impl Error {
    /// True for errors caused by malformed input rather than numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidInput(_)
                | Error::NotDiagonalizable
                | Error::ComplexOrRepeatedEigenvalues(_)
                | Error::ZeroSignificanceCoefficient { .. }
                | Error::OutOfBand { .. }
                | Error::NegativeDiscriminant(_)
                | Error::ZeroA { .. }
                | Error::HypothesesNotMet(_)
        )
    }

    /// Short machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "InvalidInput",
            Error::NotDiagonalizable => "NotDiagonalizable",
            Error::ComplexOrRepeatedEigenvalues(_) => "ComplexOrRepeatedEigenvalues",
            Error::ZeroSignificanceCoefficient { .. } => "ZeroSignificanceCoefficient",
            Error::PoleProximity { .. } => "PoleProximity",
            Error::MethodDisagreement { .. } => "MethodDisagreement",
            Error::LabelCollision { .. } => "LabelCollision",
            Error::DegenerateJet { .. } => "DegenerateJet",
            Error::ZeroA { .. } => "ZeroA",
            Error::OutOfBand { .. } => "OutOfBand",
            Error::IllConditioned { .. } => "IllConditioned",
            Error::NegativeDiscriminant(_) => "NegativeDiscriminant",
            Error::CriticalPoint { .. } => "CriticalPoint",
            Error::HypothesesNotMet(_) => "HypothesesNotMet",
            Error::Overflow { .. } => "Overflow",
            Error::DivergentSeries { .. } => "DivergentSeries",
            Error::NearResonance { .. } => "NearResonance",
            Error::AllSamplesRejected { .. } => "AllSamplesRejected",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
