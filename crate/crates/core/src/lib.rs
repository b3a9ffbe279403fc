//! Numerical laboratory for mixed radial-angular weighted norms and the
//! Navier-Stokes estimates built on them.
//!
//! * [`index`]: exact index arithmetic and admissibility checkers.
//! * [`field`], [`polar`], [`norms`]: Cartesian and polar grids, resampling,
//!   weighted mixed norms.
//! * [`operators`]: spectral heat, Leray, pressure and Oseen operators.
//! * [`decay`]: decay and integral estimate experiments.
//! * [`ns`]: Picard mild-solution solver and diagnostics.

pub mod decay;
pub mod error;
pub mod fft;
pub mod field;
pub mod index;
pub mod norms;
pub mod ns;
pub mod operators;
pub mod polar;
pub mod resample;
pub mod spectral;

pub use error::{Error, Result};
pub use index::{
    Admissibility, CaseLabel, EstimateIndices, EstimateKind, ExtRat, Exponent, IndexTuple,
    InitialDataVariant, Rational,
};
