//! Spectral densities from the continued resolvent and the direct-integral
//! spectral measure over the quasimomentum cube.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::coefficients::ModelCoefficients;
use crate::geometry::contour::gauss_legendre;
use crate::geometry::field::WeightedField;
use crate::geometry::grid::CylinderGrid;
use crate::perturbation::fredholm::PerturbedResolvent;
use crate::spectral::auto_context;

#[derive(Debug, Clone)]
pub struct DensitySample {
    pub lambda: f64,
    /// (1/pi) Im <R_H(lambda + i0) f, f>
    pub density: f64,
    pub eps_used: f64,
    /// |density - density from a two-point Richardson ladder above the axis|
    pub extrapolation_error: f64,
    /// set when the determinant certification failed at this sample
    pub flagged: bool,
}

#[derive(Debug, Clone)]
pub struct DensityCurve {
    pub k: Vec<f64>,
    pub samples: Vec<DensitySample>,
}

fn density_at(
    coeffs: &ModelCoefficients,
    k: &[f64],
    lambda: f64,
    f: &WeightedField,
    grid: &Arc<CylinderGrid>,
    diagnostics: bool,
) -> Result<DensitySample> {
    let ctx = auto_context(k, lambda, grid)?;
    let kc: Vec<Complex64> = k.iter().map(|t| Complex64::new(*t, 0.0)).collect();
    let pr = match PerturbedResolvent::assemble(
        &ctx.window,
        ctx.contour.as_ref(),
        coeffs,
        &kc,
        Complex64::new(lambda, 0.0),
        grid,
        ctx.weight_a,
    ) {
        Ok(pr) => pr,
        Err(Error::NearSingular { .. }) => {
            return Ok(DensitySample {
                lambda,
                density: f64::NAN,
                eps_used: 0.0,
                extrapolation_error: f64::NAN,
                flagged: true,
            })
        }
        Err(e) => return Err(e),
    };
    let val = pr.apply(f)?.inner(f);
    let density = val.im / std::f64::consts::PI;
    let (eps_used, extrapolation_error) = if diagnostics {
        let mut vals = Vec::new();
        for eps in [0.1, 0.05] {
            let pr_eps = PerturbedResolvent::assemble(
                &ctx.window,
                ctx.contour.as_ref(),
                coeffs,
                &kc,
                Complex64::new(lambda, eps),
                grid,
                ctx.weight_a,
            )?;
            vals.push(pr_eps.apply(f)?.inner(f));
        }
        let extrap = vals[1] * 2.0 - vals[0];
        (0.05, (extrap.im / std::f64::consts::PI - density).abs())
    } else {
        (0.0, 0.0)
    };
    Ok(DensitySample { lambda, density, eps_used, extrapolation_error, flagged: false })
}

/// Density curve over an interval: density(lambda) = (1/pi) Im <R_H f, f>
/// from the continued resolvent at the axis, with an epsilon-extrapolation
/// diagnostic per sample. Near-singular samples are flagged, not fatal.
pub fn spectral_density(
    coeffs: &ModelCoefficients,
    k: &[f64],
    interval: (f64, f64),
    n_samples: usize,
    f: &WeightedField,
    grid: &Arc<CylinderGrid>,
) -> Result<DensityCurve> {
    let (alpha, beta) = interval;
    if !(beta > alpha) || n_samples < 2 {
        return Err(Error::Validation("density interval or sample count invalid".into()));
    }
    let lambdas: Vec<f64> = (0..n_samples)
        .map(|i| alpha + (beta - alpha) * (i as f64 + 0.5) / n_samples as f64)
        .collect();
    let samples: Vec<DensitySample> = lambdas
        .par_iter()
        .map(|l| density_at(coeffs, k, *l, f, grid, true))
        .collect::<Result<Vec<_>>>()?;
    Ok(DensityCurve { k: k.to_vec(), samples })
}

#[derive(Debug, Clone)]
pub struct MeasureReport {
    pub value: f64,
    /// k nodes skipped because certification failed, with the error kind
    pub skipped: Vec<(Vec<f64>, String)>,
}

/// Channel thresholds (k+n)^2 inside the interval.
fn thresholds_in(grid: &CylinderGrid, k: &[f64], interval: (f64, f64)) -> Vec<f64> {
    let mut t: Vec<f64> = grid
        .modes()
        .iter()
        .map(|n| {
            k.iter()
                .zip(n)
                .map(|(ki, ni)| (ki + *ni as f64).powi(2))
                .sum::<f64>()
        })
        .filter(|s| *s > interval.0 && *s < interval.1)
        .collect();
    t.sort_by(|a, b| a.partial_cmp(b).unwrap());
    t.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    t
}

/// Per-fiber spectral mass over the interval by threshold-split quadrature
/// of the continued density. The cosine endpoint map absorbs the square-root
/// band edges.
pub fn fiber_spectral_mass(
    coeffs: &ModelCoefficients,
    k: &[f64],
    interval: (f64, f64),
    f: &WeightedField,
    grid: &Arc<CylinderGrid>,
    points_per_piece: usize,
) -> Result<f64> {
    let mut cuts = vec![interval.0];
    cuts.extend(thresholds_in(grid, k, interval));
    cuts.push(interval.1);
    let (xs, ws) = gauss_legendre(points_per_piece);
    let mut total = 0.0;
    for piece in cuts.windows(2) {
        let (s1, s2) = (piece[0], piece[1]);
        if s2 - s1 < 1e-12 {
            continue;
        }
        // lambda(u) = s1 + (s2-s1)(1 - cos(pi u))/2, u in [0,1]
        for (x, w) in xs.iter().zip(&ws) {
            let u = 0.5 * (x + 1.0);
            let lam = s1 + (s2 - s1) * 0.5 * (1.0 - (std::f64::consts::PI * u).cos());
            let jac = (s2 - s1) * 0.5 * std::f64::consts::PI * (std::f64::consts::PI * u).sin();
            let sample = density_at(coeffs, k, lam, f, grid, false)?;
            if sample.flagged {
                return Err(Error::NearSingular { h_abs: 0.0, gap: f64::NAN });
            }
            total += w * 0.5 * jac * sample.density;
        }
    }
    Ok(total)
}

/// Direct-integral spectral measure: quadrature over the quasimomentum cube
/// of the per-fiber masses. Nodes whose window or certification fails are
/// skipped and reported (they form the measure-zero exceptional set).
pub fn direct_integral_measure<FF>(
    coeffs: &ModelCoefficients,
    k_quadrature: &[(Vec<f64>, f64)],
    interval: (f64, f64),
    f_family: FF,
    grid: &Arc<CylinderGrid>,
) -> Result<MeasureReport>
where
    FF: Fn(&[f64]) -> WeightedField + Sync,
{
    let results: Vec<std::result::Result<f64, String>> = k_quadrature
        .par_iter()
        .map(|(k, w)| -> Result<std::result::Result<f64, String>> {
            let f = f_family(k);
            match fiber_spectral_mass(coeffs, k, interval, &f, grid, 24) {
                Ok(mass) => Ok(Ok(w * mass)),
                // certification failures mark the exceptional k set; anything
                // else is a real error and must propagate
                Err(
                    e @ (Error::BraggResonance { .. }
                    | Error::NearSingular { .. }
                    | Error::BoundaryZero { .. }
                    | Error::DenominatorUnderflow { .. }),
                ) => Ok(Err(e.kind().to_string())),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let mut value = 0.0;
    let mut skipped = Vec::new();
    for ((k, _), r) in k_quadrature.iter().zip(results) {
        match r {
            Ok(v) => value += v,
            Err(reason) => skipped.push((k.clone(), reason)),
        }
    }
    Ok(MeasureReport { value, skipped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::coefficients::CoefficientFamily;

    fn free_coeffs(grid: &Arc<CylinderGrid>) -> ModelCoefficients {
        ModelCoefficients::new(
            CoefficientFamily::GaussianWell { v0: 0.0, width: 1.0 },
            8.0,
            grid.clone(),
        )
        .unwrap()
    }

    #[test]
    fn density_vanishes_below_thresholds() {
        let grid = Arc::new(CylinderGrid::new(1, 1, 16.0, 96, 3).unwrap());
        let mc = free_coeffs(&grid);
        let f = WeightedField::from_mode_profile(grid.clone(), 0.0, &[0], |x| {
            Complex64::new((-x[0] * x[0]).exp(), 0.0)
        })
        .unwrap();
        let curve = spectral_density(&mc, &[0.3], (-1.5, -0.5), 4, &f, &grid).unwrap();
        for s in &curve.samples {
            assert!(!s.flagged);
            assert!(s.density.abs() < 1e-9, "density below spectrum: {}", s.density);
        }
    }

    #[test]
    fn free_density_matches_explicit_formula() {
        // single open channel: density = (2pi)^{m+d}/pi * (|fhat(p)|^2 + |fhat(-p)|^2)/(2p)
        let grid = Arc::new(CylinderGrid::new(1, 1, 16.0, 128, 3).unwrap());
        let mc = free_coeffs(&grid);
        let f = WeightedField::from_mode_profile(grid.clone(), 4.0, &[0], |x| {
            Complex64::new((-x[0] * x[0]).exp(), 0.0)
        })
        .unwrap();
        let k = 0.3;
        let lam = 0.8; // only n = 0 open: (0.3)^2 < 0.8 < (1.3)^2 wait (0.3-1)^2 = 0.49 < 0.8
        // modes open at 0.8: n=0 (0.09) and n=-1 (0.49): both open
        let curve = spectral_density(&mc, &[k], (lam - 0.01, lam + 0.01), 1, &f, &grid);
        // n_samples < 2 invalid; use 2 samples and take the first
        assert!(curve.is_err());
        let curve = spectral_density(&mc, &[k], (lam - 0.005, lam + 0.005), 2, &f, &grid).unwrap();
        let got = curve.samples[0].density;
        let lam0 = curve.samples[0].lambda;
        let fhat = |z: f64| {
            std::f64::consts::PI.sqrt() / (2.0 * std::f64::consts::PI) * (-z * z / 4.0).exp()
        };
        // the probe carries the n = 0 channel only:
        // density = (2pi)^{m+d} (|fhat(p)|^2 + |fhat(-p)|^2) / (2p)
        let thr = k * k;
        let p = (lam0 - thr).sqrt();
        let expect = (2.0 * std::f64::consts::PI).powi(2)
            * (fhat(p).powi(2) + fhat(-p).powi(2))
            / (2.0 * p);
        assert!(
            (got - expect).abs() < 1e-5 * expect.max(1.0),
            "density {got} vs oracle {expect}"
        );
    }
}
