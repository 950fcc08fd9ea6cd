//! Exact and asymptotic exponential moments of the Bessel point process.
//!
//! The crate is layered bottom-up:
//! - [`specfun`]: log Γ, digamma, Barnes G and Bessel J;
//! - [`kernel`]: the Bessel kernel and its √-substituted form;
//! - [`quadrature`]: Gauss–Legendre and Gauss–Jacobi rules;
//! - [`fredholm`]: Nyström log-determinants and counting-statistic moments;
//! - [`asymptotics`]: closed-form large-r expansions and CLT matrices;
//! - [`harness`]: configuration, sweeps, reporting and the self-test.

pub mod asymptotics;
pub mod error;
pub mod fredholm;
pub mod harness;
pub mod kernel;
pub mod quadrature;
pub mod specfun;

pub use error::{Error, Result};
