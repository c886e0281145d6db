//! The effective potential W(lambda), the factorization identity reducing
//! H(k) to A(k) + W(lambda), the Nystrom discretization of the
//! Lippmann-Schwinger operator, its determinant h(k,lambda), and the
//! perturbed resolvent R_H.

pub mod fredholm;
pub mod nystrom;
pub mod potential;

pub use crate::geometry::coefficients::truncate_potential;
pub use fredholm::{apply_rh, fredholm_h, FredholmSample, PerturbedResolvent};
pub use nystrom::{assemble_for_determinant, assemble_lippmann_schwinger, NystromSystem};
pub use potential::{effective_potential, factorization_residual, EffectivePotential};
