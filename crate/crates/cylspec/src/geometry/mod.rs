//! Discretization of the cylinder, weighted fields, model coefficients,
//! spectral windows, and the deformation contour.

pub mod bounds;
pub mod coefficients;
pub mod contour;
pub mod field;
pub mod grid;
pub mod window;

pub use bounds::{verify_nonresonance_bounds, BoundReport, ProbeSpec};
pub use coefficients::{
    sample_coefficients, truncate_potential, CoefficientFamily, CoefficientSamples,
    ModelCoefficients,
};
pub use contour::{build_contour, default_eta, default_xi, Contour, ContourNode, Segment};
pub use field::WeightedField;
pub use grid::CylinderGrid;
pub use window::{build_window, SpectralWindow};
