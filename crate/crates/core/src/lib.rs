//! Numerical toolkit for trilinear Fourier multipliers
//! `T_m(f1, f2, f3)(x) = ∫ m(ξ1, ξ2, ξ3) f̂1(ξ1) f̂2(ξ2) f̂3(ξ3) e^{2πi x·(ξ1+ξ2+ξ3)} dξ`
//! acting `L² × L² × L² → L^{2/3}`.
//!
//! The crate is organised by subsystem:
//!
//! * [`wavelet_frame`] builds compactly supported orthonormal wavelets by the
//!   cascade algorithm and evaluates their tensor products on `R^{3d}`.
//! * [`coeff_analysis`] computes wavelet coefficients of sampled multipliers,
//!   reconstructs them, and measures frame norms, coefficient decay and
//!   dilation covariance.
//! * [`index_partition`] splits a weighted index set into dyadic level sets
//!   and then into slice-heavy, size-reduced and coordinate-injective pieces,
//!   recording a checkable certificate for every piece.
//! * [`trilinear_engine`] evaluates `T_m` directly and through the
//!   wavelet-separated form, and computes `L^p` quasi-norms.
//! * [`bound_verifier`] measures per-piece envelopes, audits the summability
//!   chain and produces certified lower bounds on `‖T_m‖`.
//! * [`necessity_lab`] reproduces the randomized-sign counterexample for
//!   `q > 3`.

pub mod bound_verifier;
pub mod coeff_analysis;
pub mod error;
pub mod export;
pub mod grid;
pub mod index_partition;
pub mod necessity_lab;
pub mod stats;
pub mod trilinear_engine;
pub mod wavelet_frame;

pub use error::{Error, Result};
