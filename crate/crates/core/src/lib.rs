//! Divergent beam ray transforms of symmetric tensor fields.
//!
//! The crate covers the forward operators `D^{k,m}` and `chi_{s,m}` by
//! singular-weight quadrature, the spherical averages of the fractional
//! transform, pointwise and Fourier-multiplier reconstruction, and a set of
//! numerical experiments around stability and unique continuation.
//!
//! Fourier convention: `F f(y) = int e^{-i<x,y>} f(x) dx` with inverse
//! `(2 pi)^{-n} int e^{i<x,y>} F f(y) dy`.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod averaging;
pub mod error;
pub mod grid;
pub mod phantoms;
pub mod raytransform;
pub mod reconstruct;
pub mod special;
pub mod spectral;
pub mod sphere;
pub mod symtensor;
pub mod tfld;
pub mod verify;

pub use averaging::{AverageField, Provenance, RankAverage};
pub use error::{Error, Result};
pub use grid::{FieldEval, Grid, SymTensorField};
pub use phantoms::{PhantomKind, PhantomSpec};
pub use raytransform::{BeamSamples, QuadratureSpec, RayWeight};
pub use reconstruct::ReconReport;
pub use spectral::{MultiplierOp, SpectralGrid, ZeroModePolicy};
pub use sphere::DirectionSet;
pub use symtensor::{SubsetFamily, SymTensor};
pub use verify::{run_suite, RatioRecord, Suite, SuiteReport};
