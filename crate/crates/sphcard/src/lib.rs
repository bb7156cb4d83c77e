//! Spherical cardioid distributions on the sphere S^d.
//!
//! The density of `C_k(mu, rho)` with respect to the surface measure is
//! `(1/omega_d) * [1 + rho * C~_k(x'mu)]`, where `C~_k` is the Gegenbauer
//! polynomial of index `(d-1)/2` normalized to equal one at `x = 1`
//! (Chebyshev polynomials of the first kind when `d = 1`).
//!
//! The crate is organized in layers:
//!
//! - [`specfun`]: orthogonal polynomials, normalizing constants, incomplete
//!   beta, Bessel functions and Gauss quadrature rules.
//! - [`geometry`]: uniform sampling on spheres, tangent bases, symmetrized
//!   tensor powers and a Jacobi eigensolver.
//! - [`cardioid`]: parameters, density, projections, moments and
//!   characteristic functions.
//! - [`sampling`]: rejection, rejection-free and inverse-transform samplers.
//! - [`estimation`]: moment, Gegenbauer-moment and maximum likelihood fits
//!   with asymptotic variances.
//! - [`gof`]: projected-ecdf goodness-of-fit statistics and the parametric
//!   bootstrap.
//! - [`rng`]: seeded, counter-based random streams.

pub mod cardioid;
pub mod error;
pub mod estimation;
pub mod geometry;
pub mod gof;
pub mod rng;
pub mod sampling;
pub mod specfun;

pub use cardioid::CardioidParams;
pub use error::{Error, Result};
pub use geometry::{SphereSample, UnitVector};
