//! Fluctuations of spectral statistics `Tr phi(M) A` of real symmetric
//! random matrices, at desk scale.
//!
//! The crate has two halves that check each other:
//!
//! * closed-form limiting laws — Gaussian variances, third/fourth-cumulant
//!   corrections, and the non-Gaussian log-characteristic-function series
//!   ([`limit_laws`]), built on weighted Chebyshev quadrature
//!   ([`quadrature`]) and probe functionals ([`probes`]);
//! * a deterministic Monte-Carlo harness ([`harness`]) that samples
//!   matrices ([`ensembles`]), evaluates the statistic spectrally
//!   ([`spectral`]), and estimates cumulants with jackknife errors.
//!
//! The [`transforms`] module verifies the integral-equation and
//! convolution identities behind the closed forms on a time grid.

pub mod ensembles;
pub mod entry_laws;
mod error;
pub mod harness;
mod kvspec;
pub mod limit_laws;
pub mod probes;
pub mod quadrature;
pub mod rng;
pub mod spectral;
pub mod test_functions;
pub mod transforms;

pub use error::{Error, Result};
