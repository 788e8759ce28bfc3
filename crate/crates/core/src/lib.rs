//! Continuum thresholds, bound-state certificates and variational bounds for
//! two-dimensional spin-orbit Hamiltonians `H = H0 + V`, together with a
//! finite-difference oracle that checks those bounds directly.
//!
//! Units are fixed to ħ = 2m = 1, so the kinetic symbol is `p²` and the free
//! symbol reads `[[p², A(p)], [A*(p), p²]]`.

pub mod certify;
pub mod dispersion;
pub mod error;
pub mod grid;
pub mod hankel;
pub mod linalg;
pub mod oracle;
pub mod potential;
pub mod quadrature;
pub mod trial;
pub mod variational;
pub mod vec2;

pub use num_complex::Complex64 as C64;

pub use certify::{certify, predicted_count, DefinitenessCertificate, Verdict};
pub use dispersion::{Coupling, DispersionSample, ExtremumSet, SearchConfig, Shape};
pub use error::{Error, Result};
pub use potential::{Potential, SignCertificate};
pub use trial::TrialProfile;
pub use oracle::{DiscretizationConfig, OracleSpectrum};
pub use variational::{BoundReport, TrialFamily, VariationalMatrices};
pub use vec2::Vec2;
