//! Spectral statistics of real symmetric Wigner matrices.
//!
//! The crate is organized bottom-up:
//!
//! * [`semicircle`] closed-form semicircle law: density, distribution
//!   function, quantiles, Stieltjes transform and the smoothing parameters.
//! * [`ensemble`] entry laws, counter-based sampling, the truncation /
//!   recentering / rescaling pipeline and principal minors.
//! * [`spectral`] eigenvalues, empirical spectral distributions, Kolmogorov
//!   distance to the semicircle law and the rigidity profile.
//! * [`resolvent`] resolvent diagonals, the row-wise Schur-complement
//!   decomposition and a residual report for the self-consistency identities.
//! * [`region`] the spectral window, the Stieltjes error envelope and the
//!   contour-based Kolmogorov bound.
//! * [`harness`] Monte Carlo sweeps, exponent fitting and persistence.

pub mod eigen;
pub mod ensemble;
mod error;
pub mod harness;
pub mod quadrature;
pub mod region;
pub mod resolvent;
pub mod rng;
pub mod semicircle;
pub mod spectral;

#[cfg(test)]
mod properties;

pub use error::{Error, Result};
pub use num_complex::Complex64;
