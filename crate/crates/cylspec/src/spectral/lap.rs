//! Limiting-absorption boundary values and the point-mass probe.

use num_complex::Complex64;

use crate::error::Result;
use crate::geometry::coefficients::ModelCoefficients;
use crate::geometry::contour::Contour;
use crate::geometry::field::WeightedField;
use crate::geometry::window::SpectralWindow;
use crate::perturbation::fredholm::PerturbedResolvent;

/// Default epsilon ladder for the vertical approach to the axis.
pub const EPS_LADDER: [f64; 4] = [0.1, 0.05, 0.025, 0.0125];

#[derive(Debug, Clone)]
pub struct LapDiagnostics {
    /// <R_H(lambda + i0) f, f> from the continued resolvent at the axis
    pub continued: Complex64,
    /// quadratic-Richardson extrapolation of the upper-half-plane solves
    pub extrapolated: Complex64,
    /// (eps, <R_H(lambda + i eps) f, f>) ladder
    pub ladder: Vec<(f64, Complex64)>,
    /// observed convergence rate of the ladder toward the continued value
    pub rate: f64,
}

fn richardson(ladder: &[(f64, Complex64)]) -> Complex64 {
    // halving sequence assumed; successive levels kill the eps, eps^2, eps^3
    // terms of the boundary-value expansion (three levels on the default
    // four-point ladder: the quadratic floor sits above 1e-5 at desk scale)
    let mut vals: Vec<Complex64> = ladder.iter().map(|(_, v)| *v).collect();
    for level in 0..3usize.min(vals.len().saturating_sub(1)) {
        let fac = 2f64.powi(level as i32 + 1);
        let mut next = Vec::with_capacity(vals.len() - 1);
        for i in 0..vals.len() - 1 {
            next.push((vals[i + 1] * fac - vals[i]) / (fac - 1.0));
        }
        vals = next;
    }
    *vals.last().unwrap()
}

/// Boundary value of <R_H(k, lambda + i0) f, f> computed two ways: the
/// continued resolvent at the axis, and a Richardson ladder of upper-half-
/// plane solves (whose kernel branches are the physical ones; no contour
/// continuation is involved for Im lambda > 0). Returns (continued value,
/// observed convergence rate).
pub fn lap_boundary_value(
    window: &SpectralWindow,
    contour: Option<&Contour>,
    coeffs: &ModelCoefficients,
    k: &[f64],
    lambda_real: f64,
    f: &WeightedField,
    weight_a: f64,
) -> Result<(Complex64, f64)> {
    let d = lap_diagnostics(window, contour, coeffs, k, lambda_real, f, weight_a)?;
    Ok((d.continued, d.rate))
}

pub fn lap_diagnostics(
    window: &SpectralWindow,
    contour: Option<&Contour>,
    coeffs: &ModelCoefficients,
    k: &[f64],
    lambda_real: f64,
    f: &WeightedField,
    weight_a: f64,
) -> Result<LapDiagnostics> {
    let kc: Vec<Complex64> = k.iter().map(|t| Complex64::new(*t, 0.0)).collect();
    let grid = f.grid.clone();
    let pr = PerturbedResolvent::assemble(
        window,
        contour,
        coeffs,
        &kc,
        Complex64::new(lambda_real, 0.0),
        &grid,
        weight_a,
    )?;
    let continued = pr.apply(f)?.inner(f);
    let mut ladder = Vec::new();
    for eps in EPS_LADDER {
        let pr_eps = PerturbedResolvent::assemble(
            window,
            contour,
            coeffs,
            &kc,
            Complex64::new(lambda_real, eps),
            &grid,
            weight_a,
        )?;
        ladder.push((eps, pr_eps.apply(f)?.inner(f)));
    }
    let extrapolated = richardson(&ladder);
    // rate from the last two distances to the continued value
    let d: Vec<f64> = ladder.iter().map(|(_, v)| (v - continued).norm()).collect();
    let n = d.len();
    let rate = if d[n - 1] > 0.0 && d[n - 2] > 0.0 {
        (d[n - 2] / d[n - 1]).log2()
    } else {
        f64::INFINITY
    };
    Ok(LapDiagnostics { continued, extrapolated, ladder, rate })
}

/// Point-mass probe: the products eps * Im <R_H(lambda + i eps) f, f>.
/// They vanish linearly in eps when no eigenvalue sits at lambda and converge
/// to |<f, psi>|^2 at an eigenvalue with normalized eigenfunction psi.
pub fn point_mass_probe(
    window: &SpectralWindow,
    contour: Option<&Contour>,
    coeffs: &ModelCoefficients,
    k: &[f64],
    lambda_real: f64,
    f: &WeightedField,
    eps_list: &[f64],
    weight_a: f64,
) -> Result<Vec<(f64, f64)>> {
    let kc: Vec<Complex64> = k.iter().map(|t| Complex64::new(*t, 0.0)).collect();
    let grid = f.grid.clone();
    let mut out = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let pr = PerturbedResolvent::assemble(
            window,
            contour,
            coeffs,
            &kc,
            Complex64::new(lambda_real, eps),
            &grid,
            weight_a,
        )?;
        let val = pr.apply(f)?.inner(f);
        out.push((eps, eps * val.im));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::coefficients::CoefficientFamily;
    use crate::geometry::grid::CylinderGrid;
    use crate::spectral::auto_context;
    use std::sync::Arc;

    #[test]
    fn free_gap_value_is_real_and_paths_agree() {
        // W = 0, lambda below every channel threshold: the boundary value is
        // real and both paths agree
        let grid = Arc::new(CylinderGrid::new(1, 1, 16.0, 128, 3).unwrap());
        let ctx = auto_context(&[0.3], -1.0, &grid).unwrap();
        let mc = ModelCoefficients::new(
            CoefficientFamily::GaussianWell { v0: 0.0, width: 1.0 },
            8.0,
            grid.clone(),
        )
        .unwrap();
        let f = WeightedField::from_mode_profile(grid.clone(), ctx.weight_a, &[0], |x| {
            Complex64::new((-x[0] * x[0]).exp(), 0.0)
        })
        .unwrap();
        let d = lap_diagnostics(
            &ctx.window,
            ctx.contour.as_ref(),
            &mc,
            &[0.3],
            -1.0,
            &f,
            ctx.weight_a,
        )
        .unwrap();
        assert!(d.continued.im.abs() < 1e-10, "gap value not real: {}", d.continued);
        assert!(
            (d.extrapolated - d.continued).norm() < 1e-5,
            "paths disagree: {} vs {}",
            d.extrapolated,
            d.continued
        );
        // Cauchy property with monotone decreasing gaps
        for w in d.ladder.windows(2) {
            let (_, v1) = w[0];
            let (_, v2) = w[1];
            assert!((v2 - d.continued).norm() < (v1 - d.continued).norm());
        }
    }

    #[test]
    fn open_channel_gives_positive_imaginary_part() {
        let grid = Arc::new(CylinderGrid::new(1, 1, 16.0, 128, 3).unwrap());
        let ctx = auto_context(&[0.3], 2.0, &grid).unwrap();
        let mc = ModelCoefficients::new(
            CoefficientFamily::GaussianWell { v0: 0.0, width: 1.0 },
            8.0,
            grid.clone(),
        )
        .unwrap();
        let f = WeightedField::from_mode_profile(grid.clone(), ctx.weight_a, &[0], |x| {
            Complex64::new((-x[0] * x[0]).exp(), 0.0)
        })
        .unwrap();
        let (val, _rate) = lap_boundary_value(
            &ctx.window,
            ctx.contour.as_ref(),
            &mc,
            &[0.3],
            2.0,
            &f,
            ctx.weight_a,
        )
        .unwrap();
        assert!(val.im > 1e-3, "Im boundary value should be positive: {val}");
    }
}
