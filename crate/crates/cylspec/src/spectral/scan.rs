//! Quasimomentum band scans of the Fredholm determinant.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::coefficients::ModelCoefficients;
use crate::geometry::grid::CylinderGrid;
use crate::perturbation::fredholm::fredholm_h;
use crate::spectral::auto_context;

#[derive(Debug, Clone)]
pub struct BandRow {
    pub k: Vec<f64>,
    pub lambda: f64,
    pub h_value: Complex64,
    pub refinement_gap: f64,
    pub certified: bool,
    /// true when the window could not be built (Bragg degeneracy) and the
    /// row was skipped
    pub skipped: bool,
}

#[derive(Debug, Clone)]
pub struct BandScan {
    pub rows: Vec<BandRow>,
    pub lambda_values: Vec<f64>,
    /// per lambda row: some k gave a certified nonzero h (the invertibility
    /// witness of the scan)
    pub witness: Vec<bool>,
}

/// Sample h over the product grid (k_grid x lambda_grid). Windows are
/// auto-built per sample; Bragg-degenerate samples are skipped and flagged.
/// Deterministic output ordering regardless of the worker count.
pub fn band_scan(
    coeffs: &ModelCoefficients,
    k_grid: &[Vec<f64>],
    lambda_grid: &[f64],
    grid: &Arc<CylinderGrid>,
) -> Result<BandScan> {
    let points: Vec<(usize, usize)> = (0..lambda_grid.len())
        .flat_map(|il| (0..k_grid.len()).map(move |ik| (il, ik)))
        .collect();
    let rows: Vec<BandRow> = points
        .par_iter()
        .map(|&(il, ik)| -> Result<BandRow> {
            let k = &k_grid[ik];
            let lambda = lambda_grid[il];
            let ctx = match auto_context(k, lambda, grid) {
                Ok(c) => c,
                Err(Error::BraggResonance { .. }) => {
                    return Ok(BandRow {
                        k: k.clone(),
                        lambda,
                        h_value: Complex64::default(),
                        refinement_gap: f64::NAN,
                        certified: false,
                        skipped: true,
                    })
                }
                Err(e) => return Err(e),
            };
            let kc: Vec<Complex64> = k.iter().map(|t| Complex64::new(*t, 0.0)).collect();
            let s = fredholm_h(
                &ctx.window,
                ctx.contour.as_ref(),
                coeffs,
                &kc,
                Complex64::new(lambda, 0.0),
                grid,
                ctx.weight_a,
            )?;
            Ok(BandRow {
                k: k.clone(),
                lambda,
                h_value: s.h_value,
                refinement_gap: s.refinement_gap,
                certified: s.certified_nonzero(),
                skipped: false,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let witness: Vec<bool> = (0..lambda_grid.len())
        .map(|il| {
            rows[il * k_grid.len()..(il + 1) * k_grid.len()]
                .iter()
                .any(|r| !r.skipped && r.certified)
        })
        .collect();
    Ok(BandScan { rows, lambda_values: lambda_grid.to_vec(), witness })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::coefficients::CoefficientFamily;

    #[test]
    fn zero_potential_scan_all_ones() {
        let grid = Arc::new(CylinderGrid::new(1, 1, 16.0, 96, 3).unwrap());
        let mc = ModelCoefficients::new(
            CoefficientFamily::GaussianWell { v0: 0.0, width: 1.0 },
            8.0,
            grid.clone(),
        )
        .unwrap();
        let ks = vec![vec![0.15], vec![0.35]];
        let lams = vec![-0.7, 0.8];
        let scan = band_scan(&mc, &ks, &lams, &grid).unwrap();
        assert_eq!(scan.rows.len(), 4);
        for r in &scan.rows {
            assert!(!r.skipped);
            assert_eq!(r.h_value, Complex64::new(1.0, 0.0));
        }
        assert!(scan.witness.iter().all(|w| *w));
    }

    #[test]
    fn bragg_rows_flagged() {
        let grid = Arc::new(CylinderGrid::new(1, 1, 16.0, 96, 3).unwrap());
        let mc = ModelCoefficients::new(
            CoefficientFamily::GaussianWell { v0: 0.1, width: 1.0 },
            8.0,
            grid.clone(),
        )
        .unwrap();
        // k = 0.5, lambda = 0.25 hits (k+0)^2 = lambda exactly
        let scan = band_scan(&mc, &[vec![0.5]], &[0.25], &grid).unwrap();
        assert!(scan.rows[0].skipped);
        assert!(!scan.witness[0]);
    }
}
