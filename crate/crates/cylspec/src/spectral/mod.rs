//! Consumer-level spectral analysis: limiting-absorption boundary values,
//! point-mass probes, resonance search, quasimomentum band scans, spectral
//! densities, and the direct-integral spectral measure.

pub mod density;
pub mod lap;
pub mod resonances;
pub mod scan;

use std::sync::Arc;

use crate::error::Result;
use crate::geometry::contour::{build_contour, default_eta, default_weight, default_xi, Contour, DEFAULT_PANELS};
use crate::geometry::grid::CylinderGrid;
use crate::geometry::window::{build_window, SpectralWindow};

pub use density::{direct_integral_measure, spectral_density, DensityCurve, DensitySample, MeasureReport};
pub use lap::{lap_boundary_value, lap_diagnostics, point_mass_probe, LapDiagnostics};
pub use resonances::{find_resonances, ComplexRect, Resonance};
pub use scan::{band_scan, BandRow, BandScan};

/// A window with its contour and working weight, as auto-built by scan
/// operations covering the real (k, lambda) plane.
#[derive(Debug, Clone)]
pub struct WindowContext {
    pub window: SpectralWindow,
    pub contour: Option<Contour>,
    pub weight_a: f64,
}

/// Build the window centered at (k, lambda0) together with its default
/// contour (lambda0 > 0) and the default weight a = 1.25 eta sqrt(m).
pub fn auto_context(k: &[f64], lambda0: f64, grid: &Arc<CylinderGrid>) -> Result<WindowContext> {
    let window = build_window(k, lambda0, grid)?;
    if lambda0 > 0.0 && !window.modes_open.is_empty() {
        let eta = default_eta(lambda0);
        let contour = build_contour(lambda0, eta, default_xi(eta, lambda0), DEFAULT_PANELS)?;
        let weight_a = default_weight(eta, grid.m);
        Ok(WindowContext { window, contour: Some(contour), weight_a })
    } else {
        Ok(WindowContext { window, contour: None, weight_a: 0.0 })
    }
}

/// Tensor Gauss-Legendre quadrature over the quasimomentum cube [0,1)^d.
pub fn k_quadrature(d: usize, nodes_per_dim: usize) -> Vec<(Vec<f64>, f64)> {
    let (xs, ws) = crate::geometry::contour::gauss_legendre(nodes_per_dim);
    let axis: Vec<(f64, f64)> = xs
        .iter()
        .zip(&ws)
        .map(|(x, w)| (0.5 * (x + 1.0), 0.5 * w))
        .collect();
    let mut out: Vec<(Vec<f64>, f64)> = vec![(Vec::new(), 1.0)];
    for _ in 0..d {
        let mut next = Vec::with_capacity(out.len() * axis.len());
        for (base, bw) in &out {
            for (x, w) in &axis {
                let mut v = base.clone();
                v.push(*x);
                next.push((v, bw * w));
            }
        }
        out = next;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k_quadrature_integrates_polynomials() {
        let q = k_quadrature(1, 8);
        let total: f64 = q.iter().map(|(_, w)| w).sum();
        assert!((total - 1.0).abs() < 1e-14);
        let third: f64 = q.iter().map(|(k, w)| k[0] * k[0] * w).sum();
        assert!((third - 1.0 / 3.0).abs() < 1e-13);
        let q2 = k_quadrature(2, 4);
        let mixed: f64 = q2.iter().map(|(k, w)| k[0] * k[1] * w).sum();
        assert!((mixed - 0.25).abs() < 1e-13);
    }

    #[test]
    fn auto_context_shapes() {
        let g = Arc::new(CylinderGrid::new(1, 1, 8.0, 64, 4).unwrap());
        let open = auto_context(&[0.3], 2.0, &g).unwrap();
        assert!(open.contour.is_some());
        assert!(open.weight_a > open.contour.as_ref().unwrap().eta);
        let closed = auto_context(&[0.3], -1.0, &g).unwrap();
        assert!(closed.contour.is_none());
        assert_eq!(closed.weight_a, 0.0);
    }
}
