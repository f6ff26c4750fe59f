//! Matrix functions through contour integrals, simulated as block-encoding
//! circuits.
//!
//! The Cauchy integral of `f(z)(zI − A)⁻¹` is discretized by an equispaced
//! Riemann sum on an arc-length parameterized contour. Each resolvent is
//! block-encoded, inverted through an odd polynomial applied to singular
//! values, and the nodes are combined with a prepare/select/unprepare LCU.
//! A single-ancilla randomized variant estimates observables instead.

pub mod apps;
pub mod blockenc;
pub mod contour;
pub mod error;
pub mod formats;
pub mod numkit;
pub mod polyapprox;
pub mod quadrature;
pub mod sampler;

pub use error::{Error, ErrorClass, Result};
pub use numkit::{ComplexMatrix, SpectralInfo, StateVector, C64};
