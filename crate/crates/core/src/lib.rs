//! Numerical laboratory for the Hopf-Laplace equation
//! `∂/∂z̄ (h_z · conj(h_z̄)) = 0`.
//!
//! The crate is organised bottom-up:
//!
//! - [`geometry`]: planar domains, lattices, boundary distances, moduli.
//! - [`examples`]: closed-form example solutions with exact Wirtinger derivatives.
//! - [`grid`] and [`calculus`]: sampled maps and discrete Wirtinger calculus
//!   (energy, Jacobian, Hopf product, stretch directions, circle integrals).
//! - [`qdiff`]: holomorphic quadratic differentials: critical points,
//!   trajectory tracing, φ-length and the natural parameter.
//! - [`harmonic`]: discrete harmonic replacement and the dyadic refinement pass.
//! - [`minimize`]: rotationally symmetric energy minimization between annuli.
//! - [`verify`]: checks of the quantitative inequalities with machine-readable reports.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calculus;
pub mod error;
pub mod examples;
pub mod geometry;
pub mod grid;
pub mod harmonic;
pub mod minimize;
pub mod qdiff;
pub mod quadrature;
pub mod verify;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Shorthand used throughout the crate.
pub type C64 = Complex64;
