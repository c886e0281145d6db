//! Numerical spectral analysis for operators -div(g grad u) + V u on the
//! cylinder R^m x (0,2pi)^d with y-periodic, x-decaying coefficients.
//!
//! The crate decomposes the operator over Bloch fibers H(k), continues the
//! free fiber resolvent analytically across the real spectral axis through a
//! deformed frequency contour, solves the perturbed problem by a Nystrom
//! discretization of I + W(lambda) R_A(k,lambda), and exposes consumer-level
//! spectral diagnostics: Fredholm-determinant scans, resonance search by the
//! argument principle, limiting-absorption boundary values, point-mass probes
//! and spectral-density curves.
//!
//! Module map:
//! - [`geometry`]: grids, weighted fields, model coefficients, spectral
//!   windows, the deformation contour, certified denominator bounds.
//! - [`transforms`]: cylinder Fourier analysis, contour-frequency transforms,
//!   the Floquet-Gelfand transform, fiber operators.
//! - [`free_resolvent`]: the continued free resolvent R_A = R_1 + R_2 and the
//!   direct upper-half-plane oracle.
//! - [`perturbation`]: effective potential, factorization residual, Nystrom
//!   systems, Fredholm determinants, the perturbed resolvent R_H.
//! - [`spectral`]: limiting absorption, resonance search, band scans,
//!   spectral densities, direct-integral measures.
//! - [`selfcheck`]: the cross-module invariant suite behind `cylspec selfcheck`.

pub mod error;
pub mod geometry;
pub mod io;
pub mod linalg;
pub mod transforms;

pub mod free_resolvent;
pub mod perturbation;
pub mod selfcheck;
pub mod spectral;

pub use error::{Error, Result};
