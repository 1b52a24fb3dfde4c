//! Joint detection and localization of an unknown number of narrowband
//! sources on a uniform linear array.
//!
//! Noise eigenvectors of the array covariance, read as polynomials, share a
//! common factor whose roots sit at `e^{j pi sin(theta_l)}`. The crate finds
//! that factor two ways: by clustering the eigenvector roots ([`cluster`])
//! and by a Sylvester-matrix approximate GCD refined with Gauss-Newton
//! ([`agcd`]). Eigenvalue baselines (AIC, MDL) and root-MUSIC live in
//! [`subspace`]; [`bench`] runs seeded Monte Carlo sweeps over all of them.

// `!(x > y)` guards are kept so NaN falls on the rejecting side
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod agcd;
pub mod bench;
pub mod cli;
pub mod cluster;
pub mod error;
pub mod io;
pub mod linalg;
pub mod model;
pub mod poly;
pub mod subspace;

pub use error::{DoaError, Result};
pub use poly::ComplexPolynomial;
