//! Shape-preserving wavelet density estimation.
//!
//! The square root of a density is expanded in an orthonormal wavelet basis
//! with coefficients estimated from nearest-neighbour ball volumes. The
//! resolution is chosen by maximizing a leave-one-out estimate of the
//! Bhattacharyya affinity, and detail coefficients can be thresholded by the
//! same criterion.

// Index loops read better in the small linear-algebra kernels, and
// `!(x > 0.0)` is the intended way to reject NaN along with nonpositive values.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod densities;
pub mod error;
pub mod estimator;
pub mod geometry;
pub mod harness;
pub mod metrics;
pub mod pipeline;
pub mod selection;
pub mod threshold;
pub mod wavelet;

pub use error::{Error, Result};
pub use estimator::{fit, fit_single_level, sqrt_functional, ModelFile, SqrtDensityModel};
pub use geometry::{build_neighbors, NeighborTable, SampleSet};
pub use wavelet::{BasisIndex, WaveletBasis, WaveletFamily};
