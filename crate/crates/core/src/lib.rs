//! Winding-number statistics for parametric chiral random matrices.
//!
//! The model is `K(p) = a(p) K₁ + b(p) K₂` with `K₁, K₂` drawn from the chiral
//! Gaussian unitary (AIII, β=2) or symplectic (CII, β=4) ensembles. Everything
//! observable about the winding of `det K(p)` depends only on the spectrum of
//! `Y = K₁⁻¹K₂`, a spherical ensemble.
//!
//! Three independent routes are provided for most quantities:
//!
//! * closed forms ([`correlators::analytic_c2`], [`distribution::winding_pmf`],
//!   [`generators::analytic_z_aiii`], ...),
//! * Monte Carlo over matrix draws ([`correlators::mc_correlator`],
//!   [`generators::mc_generator`], ...),
//! * brute-force oracles (contour integration of `d/dp ln det K(p)`, literal
//!   permutation sums, adaptive quadrature).

pub mod correlators;
pub mod distribution;
pub mod ensembles;
pub mod error;
pub mod generators;
pub mod kitaev;
pub mod linalg;
pub mod loops;
pub mod mc;
pub mod quadrature;
pub mod report;
pub mod rng;
pub mod specfun;
pub mod stats;
pub mod winding;

pub use error::{Error, Result};
pub use num_complex::Complex64;
