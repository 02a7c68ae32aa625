//! Eigenvalue location for bordered diagonal matrices and dividend-policy
//! irrelevance tests for the linear dividend dynamics they generate.
//!
//! The central object is a [`CanonicalSystem`]: a positive, strictly
//! decreasing reduced spectrum, a sign per border entry and a policy row.
//! Everything else is computed from the dense matrix [`build_h`] or from the
//! characteristic polynomial [`charpoly_coeffs`].

// Negated comparisons deliberately treat NaN as failing the test.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod charpoly;
pub mod error;
pub mod locus;
pub mod model;
pub mod placement;
pub mod regions;
pub mod roots;
pub mod sensitivity;
pub mod spectra;
pub mod valuation;

pub use charpoly::{charpoly_coeffs, Polynomial};
pub use error::{Error, Result};
pub use model::{
    build_h, canonicalize, parse_system, CanonicalSystem, Coordinate, GeneralSystem, Policy,
    ReducedSpectrum, Signs,
};
pub use spectra::{eigenvalues, label_roots, RootLabeling, RootSet};
pub use valuation::{InitialState, Mode};
