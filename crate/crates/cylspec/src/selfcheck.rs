//! Cross-module invariant suite behind `cylspec selfcheck`: every check runs
//! at a small desk grid and reports (name, measured, threshold, pass).

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::free_resolvent::{
    apply_direct_resolvent, apply_ra, continued_left_inverse_residual, tau_decay_norm,
};
use crate::geometry::bounds::{verify_nonresonance_bounds, ProbeSpec};
use crate::geometry::coefficients::{CoefficientFamily, ModelCoefficients};
use crate::geometry::contour::{build_contour, default_eta, default_xi};
use crate::geometry::field::WeightedField;
use crate::geometry::grid::CylinderGrid;
use crate::geometry::window::build_window;
use crate::perturbation::fredholm::fredholm_h;
use crate::perturbation::potential::{effective_potential, factorization_residual};
use crate::transforms::{apply_free_fiber, cylinder_fourier, inverse_cylinder_fourier};

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub measured: f64,
    pub threshold: f64,
    pub passed: bool,
}

fn check(name: &'static str, measured: f64, threshold: f64) -> CheckResult {
    CheckResult { name, measured, threshold, passed: measured <= threshold && measured.is_finite() }
}

/// check where larger is better (measured must be >= threshold)
fn check_min(name: &'static str, measured: f64, threshold: f64) -> CheckResult {
    CheckResult { name, measured, threshold, passed: measured >= threshold }
}

fn random_decaying_field(grid: &Arc<CylinderGrid>, weight_a: f64, seed: u64) -> WeightedField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = WeightedField::zeros(grid.clone(), weight_a);
    // three random Gaussian bumps; the first always sits in the n = 0 channel
    // so open-channel paths are exercised on positive-lambda windows
    for bump in 0..3 {
        let mi = if bump == 0 {
            grid.mode_index(&vec![0; grid.d]).unwrap()
        } else {
            rng.gen_range(0..grid.n_modes())
        };
        let x0: f64 = rng.gen_range(-1.5..1.5);
        let s: f64 = rng.gen_range(0.8..1.4);
        let amp = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        for xf in 0..grid.n_x_total() {
            let x = grid.x_coords(xf);
            let r2: f64 = x.iter().map(|t| (t - x0) * (t - x0)).sum();
            f.values[[mi, xf]] += amp * (-r2 / (s * s)).exp();
        }
    }
    f
}

/// Run the full invariant suite. `tolerance_scale` multiplies every
/// threshold (CLI flag --tolerance-scale).
pub fn run_selfcheck(tolerance_scale: f64) -> Result<Vec<CheckResult>> {
    let ts = tolerance_scale;
    let mut out = Vec::new();
    let grid = Arc::new(CylinderGrid::new(1, 1, 16.0, 128, 4)?);

    // transforms: round trip
    {
        let f = random_decaying_field(&grid, 0.0, 11);
        let back = inverse_cylinder_fourier(&cylinder_fourier(&f))?;
        out.push(check(
            "transform-round-trip",
            back.sub(&f).norm_l2() / f.norm_l2(),
            1e-12 * ts,
        ));
    }

    // contour closure: quadrature of 1 equals the complex path length
    {
        let c = build_contour(2.0, default_eta(2.0), default_xi(default_eta(2.0), 2.0), 8)?;
        let defect = (c.path_integral_of_one() - c.exact_path_integral_of_one()).norm();
        out.push(check("contour-closure", defect, 1e-12 * ts));
    }

    // contour shift identity on a Gaussian:
    // int_R e^{i zeta x} fhat = int_gamma e^{i zeta x} fhat at moderate x
    {
        let c = build_contour(1.0, 1.5, 12.0, 10)?;
        let x = 0.7;
        let fhat = |z: Complex64| {
            (std::f64::consts::PI.sqrt() / (2.0 * std::f64::consts::PI))
                * (-z * z / 4.0).exp()
        };
        let gamma_val = c.integrate(|z| (Complex64::new(0.0, 1.0) * z * x).exp() * fhat(z));
        // real-axis reference by dense trapezoid
        let n = 20000;
        let zmax = 12.0;
        let h = 2.0 * zmax / n as f64;
        let mut axis = Complex64::default();
        for i in 0..=n {
            let z = -zmax + i as f64 * h;
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            axis += Complex64::from_polar(1.0, z * x) * fhat(Complex64::new(z, 0.0)) * w;
        }
        axis *= h;
        out.push(check("contour-shift-identity", (gamma_val - axis).norm(), 1e-9 * ts));
    }

    // channel dichotomy + nonresonance bounds
    {
        let w = build_window(&[0.3], 2.0, &grid)?;
        let eta = default_eta(2.0);
        let c = build_contour(2.0, eta, default_xi(eta, 2.0), 8)?;
        let rep = verify_nonresonance_bounds(&w, Some(&c), &grid, &ProbeSpec::default())?;
        out.push(check_min("bounds-c-closed-positive", rep.c_closed, 1e-6));
        out.push(check_min("bounds-c-open-positive", rep.c_open, 1e-6));
        out.push(check_min("bounds-tau-slope-positive", rep.c_tau_slope, 1e-6));
    }

    // weight-norm monotonicity on random fields
    {
        let f = random_decaying_field(&grid, 0.0, 23);
        let mut worst: f64 = 0.0;
        let mut prev = f.norm_weighted(0.0);
        for a in [0.5, 1.0, 1.5, 2.0] {
            let cur = f.norm_weighted(a);
            worst = worst.max(prev - cur);
            prev = cur;
        }
        out.push(check("weight-norm-monotone", worst.max(0.0), 0.0));
    }

    // plane-wave diagonalization of A(k)
    {
        let f = WeightedField::from_mode_profile(grid.clone(), 0.0, &[2], |x| {
            Complex64::new((-x[0] * x[0]).exp(), 0.0)
        })?;
        let k = [Complex64::new(0.3, 0.0)];
        let au = apply_free_fiber(&k, &f);
        let spec_in = cylinder_fourier(&f);
        let spec_out = cylinder_fourier(&au);
        let mi = grid.mode_index(&[2]).unwrap();
        let mut worst: f64 = 0.0;
        for p in 0..grid.n_x {
            let z = grid.zeta(p);
            let sym = z * z + (0.3 + 2.0) * (0.3 + 2.0);
            let expect = spec_in.coeffs[[p, mi]] * sym;
            worst = worst.max((spec_out.coeffs[[p, mi]] - expect).norm());
        }
        out.push(check("fiber-plane-wave-diagonal", worst, 1e-10 * ts));
    }

    // continuation agreement R_A vs direct oracle
    {
        let w = build_window(&[0.3], 2.0, &grid)?;
        let eta = default_eta(2.0);
        let c = build_contour(2.0, eta, default_xi(eta, 2.0), 8)?;
        let a = 1.25 * eta;
        let mut worst: f64 = 0.0;
        for seed in [3, 5] {
            let f = random_decaying_field(&grid, a, seed);
            for im in [0.1, 0.5] {
                let lam = Complex64::new(2.0, im);
                let ra = apply_ra(&w, Some(&c), &[Complex64::new(0.3, 0.0)], lam, &f)?;
                let dr = apply_direct_resolvent(&[0.3], lam, &f)?;
                worst = worst.max(ra.sub(&dr).norm_weighted(-a) / f.norm_weighted(a));
            }
        }
        out.push(check("continuation-agreement", worst, 1e-6 * ts));
    }

    // continued left-inverse residual at and below the axis
    {
        let w = build_window(&[0.3], 2.0, &grid)?;
        let eta = default_eta(2.0);
        let c = build_contour(2.0, eta, default_xi(eta, 2.0), 8)?;
        let a = 1.25 * eta;
        let f = random_decaying_field(&grid, a, 7);
        let mut worst: f64 = 0.0;
        for im in [0.0, -w.delta / 2.0] {
            let r = continued_left_inverse_residual(
                &w,
                Some(&c),
                &[Complex64::new(0.3, 0.0)],
                Complex64::new(2.0, im),
                &f,
            )?;
            worst = worst.max(r);
        }
        out.push(check("continued-left-inverse", worst, 1e-5 * ts));
    }

    // Herglotz property of direct solves
    {
        let f = random_decaying_field(&grid, 0.0, 31);
        let v = apply_direct_resolvent(&[0.3], Complex64::new(1.3, 0.4), &f)?.inner(&f);
        out.push(check_min("herglotz-positive-imag", v.im, 0.0));
    }

    // tau decay of the dilated-family norms
    {
        let w = build_window(&[0.3], 2.0, &grid)?;
        let eta = default_eta(2.0);
        let c = build_contour(2.0, eta, default_xi(eta, 2.0), 8)?;
        let a = 1.25 * eta;
        let norms = tau_decay_norm(&w, Some(&c), &grid, Complex64::new(2.0, 0.0), &[5.0, 10.0, 20.0, 40.0], a)?;
        let prods: Vec<f64> = norms.iter().map(|(t, n)| t * n).collect();
        let maxmin = prods.iter().fold(0.0f64, |m, p| m.max(*p))
            / prods.iter().fold(f64::INFINITY, |m, p| m.min(*p));
        out.push(check("tau-decay-spread", maxmin, 4.0));
    }

    // factorization residual + convergence
    {
        let g1 = Arc::new(CylinderGrid::new(1, 1, 16.0, 128, 3)?);
        let g2 = Arc::new(CylinderGrid::new(1, 1, 16.0, 160, 3)?);
        let mut rs = Vec::new();
        for g in [&g1, &g2] {
            let mc = ModelCoefficients::new(
                CoefficientFamily::MetricBump { amplitude: 0.5, width: 1.0 },
                8.0,
                (*g).clone(),
            )?;
            let u = WeightedField::sample((*g).clone(), 0.0, |x, y| {
                Complex64::from_polar((-x[0] * x[0]).exp(), y[0].cos())
            });
            rs.push(factorization_residual(
                &mc,
                &[Complex64::new(0.3, 0.0)],
                Complex64::new(1.0, 0.0),
                &u,
            )?);
        }
        out.push(check("factorization-residual", rs[0], 1e-5 * ts));
        out.push(check_min("factorization-converges", rs[0] / rs[1], 2.0));
    }

    // effective-potential affinity in lambda (exact)
    {
        let mc = ModelCoefficients::new(
            CoefficientFamily::MetricBump { amplitude: 0.5, width: 1.0 },
            8.0,
            grid.clone(),
        )?;
        let l1 = Complex64::new(0.4, 0.3);
        let l2 = Complex64::new(-0.9, -0.1);
        let w1 = effective_potential(&mc, l1, &grid);
        let w2 = effective_potential(&mc, l2, &grid);
        let mut worst: f64 = 0.0;
        for xf in 0..grid.n_x_total() {
            let x = grid.x_coords(xf);
            let gv = mc.g(&x, &[0.0]);
            let expect = (l1 - l2) * ((gv - 1.0) / gv);
            worst = worst.max((w1.values[[xf, 0]] - w2.values[[xf, 0]] - expect).norm());
        }
        out.push(check("effective-potential-affine", worst, 1e-13 * ts));
    }

    // determinant sanity: h = 1 for W = 0, trace agreement at weak coupling,
    // gap decreasing under refinement
    {
        let w = build_window(&[0.3], 2.0, &grid)?;
        let eta = default_eta(2.0);
        let c = build_contour(2.0, eta, default_xi(eta, 2.0), 8)?;
        let a = 1.25 * eta;
        let k = [Complex64::new(0.3, 0.0)];
        let lam = Complex64::new(2.0, 0.3);
        let free = ModelCoefficients::new(
            CoefficientFamily::GaussianWell { v0: 0.0, width: 1.0 },
            8.0,
            grid.clone(),
        )?;
        let s0 = fredholm_h(&w, Some(&c), &free, &k, lam, &grid, a)?;
        out.push(check(
            "determinant-identity",
            (s0.h_value - Complex64::new(1.0, 0.0)).norm(),
            0.0,
        ));
        let eps = 1e-3;
        let mc = ModelCoefficients::new(
            CoefficientFamily::GaussianWell { v0: -eps, width: 1.0 },
            8.0,
            grid.clone(),
        )?;
        let s1 = fredholm_h(&w, Some(&c), &mc, &k, lam, &grid, a)?;
        // trace oracle over the determinant mode set:
        // tr(V R_A) = eps sqrt(pi) sum_n i/(2 v_n)
        let sys = crate::perturbation::nystrom::assemble_for_determinant(
            &w, Some(&c), &mc, &k, lam, &grid, a,
        )?;
        let mut tr = Complex64::default();
        for n in &sys.det_modes {
            let shift = Complex64::new((0.3 + n[0] as f64).powi(2), 0.0);
            let v = crate::free_resolvent::kernels::branch_v(shift, lam, w.is_open(n));
            tr += Complex64::new(0.0, 0.5) / v;
        }
        let oracle = Complex64::new(1.0, 0.0)
            + tr * Complex64::new(eps * std::f64::consts::PI.sqrt(), 0.0);
        out.push(check("determinant-trace-first-order", (s1.h_value - oracle).norm(), 1e-5 * ts));
        // gap shrinks when the sample itself is refined
        let rg = crate::perturbation::fredholm::refined_grid(&grid)?;
        let rc = crate::perturbation::fredholm::refine_coefficients(&mc, &rg)?;
        let s2 = fredholm_h(&w, Some(&c), &rc, &k, lam, &rg, a)?;
        out.push(check_min(
            "determinant-gap-shrinks",
            if s2.refinement_gap > 0.0 { s1.refinement_gap / s2.refinement_gap } else { f64::INFINITY },
            1.0,
        ));
    }

    // resonance-free large tau: |h(k(tau), lambda) - 1| < 0.5
    {
        let w = build_window(&[0.3], 2.0, &grid)?;
        let eta = default_eta(2.0);
        let c = build_contour(2.0, eta, default_xi(eta, 2.0), 8)?;
        let a = 1.25 * eta;
        let mc = ModelCoefficients::new(
            CoefficientFamily::GaussianWell { v0: 2.0, width: 1.0 },
            8.0,
            grid.clone(),
        )?;
        let kt = w.dilated_momentum(40.0);
        let s = fredholm_h(&w, Some(&c), &mc, &kt, Complex64::new(2.0, 0.0), &grid, a)?;
        out.push(check(
            "large-tau-invertible",
            (s.h_value - Complex64::new(1.0, 0.0)).norm(),
            0.5,
        ));
    }

    Ok(out)
}
