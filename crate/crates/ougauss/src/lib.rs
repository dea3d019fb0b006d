//! Simulation and drift inference for Ornstein-Uhlenbeck processes driven by
//! general Gaussian noises.
//!
//! The crate covers the full loop at desk scale:
//!
//! * [`kernels`] - closed-form covariance kernels for ten noise families,
//!   their derivatives, and the residual Phi of the fBm-comparison
//!   decomposition;
//! * [`hilbert`] - bilinear forms on bounded-variation step functions
//!   (exact second moments of Wiener-type integrals against the noise);
//! * [`hypothesis`] - numerical certification of the structural covariance
//!   condition separating the conforming families from the rest;
//! * [`simulate`] - exact-in-law Gaussian path sampling (Cholesky of the
//!   Gram matrix) and construction of the OU solution path;
//! * [`estimators`] - the continuous-time and two discrete-time
//!   least-squares drift estimators;
//! * [`asymptotics`] - limit constants (sigma_G, E[Z_inf^2], the Cauchy
//!   scale) and Monte Carlo probes of the asymptotic laws.

pub mod asymptotics;
pub mod error;
pub mod estimators;
pub mod hilbert;
pub mod hypothesis;
pub mod kernels;
pub mod simulate;
pub mod stats;

mod linalg;
mod quad;

pub use error::{Error, Result};
pub use kernels::{KernelFamily, KernelSpec};
