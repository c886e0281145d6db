//! Command implementations: each writes CSV outputs plus a manifest into the
//! output directory and is bit-reproducible across runs and worker counts.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use serde_json::json;

use cylspec::error::{Error, Result};
use cylspec::free_resolvent::{
    apply_direct_resolvent, apply_ra, continued_left_inverse_residual, tau_decay_norm,
};
use cylspec::geometry::{
    build_window, verify_nonresonance_bounds, CylinderGrid, ProbeSpec as BoundProbe,
    WeightedField,
};
use cylspec::io::{csv_row, fmt_f64, WindowSpecDoc};
use cylspec::perturbation::{factorization_residual, fredholm_h};
use cylspec::spectral::{
    self, find_resonances, k_quadrature, lap_diagnostics, point_mass_probe, ComplexRect,
};

use crate::config::{Materialized, ProbeSpec, RunConfig};

pub fn write_manifest(dir: &Path, command: &str, cfg: &RunConfig) -> Result<()> {
    let manifest = json!({
        "command": command,
        "library": "cylspec",
        "version": env!("CARGO_PKG_VERSION"),
        "config": cfg,
    });
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(())
}

fn probe_field(grid: &Arc<CylinderGrid>, spec: &ProbeSpec, weight_a: f64) -> Result<WeightedField> {
    let mode = if spec.mode.len() == grid.d {
        spec.mode.clone()
    } else {
        vec![0; grid.d]
    };
    let width = spec.width;
    let center = spec.center;
    WeightedField::from_mode_profile(grid.clone(), weight_a, &mode, move |x| {
        let r2: f64 = x.iter().map(|t| (t - center) * (t - center)).sum();
        Complex64::new((-r2 / (width * width)).exp(), 0.0)
    })
}

fn require_window(cfg: &RunConfig) -> Result<(Vec<f64>, f64)> {
    let w = cfg
        .window
        .as_ref()
        .ok_or_else(|| Error::Validation("this command needs a \"window\" section".into()))?;
    Ok((w.k0.clone(), w.lambda0))
}

pub fn cmd_verify_bounds(m: &Materialized, dir: &Path) -> Result<()> {
    let (k0, lambda0) = require_window(&m.config)?;
    let window = build_window(&k0, lambda0, &m.grid)?;
    let contour = m.config.build_contour_for(lambda0)?;
    let report = verify_nonresonance_bounds(&window, contour.as_ref(), &m.grid, &BoundProbe::default())?;
    let doc = json!({
        "window": {
            "k0": window.k0,
            "lambda0": window.lambda0,
            "delta": window.delta,
            "open_modes": window.modes_open,
        },
        "c_closed": report.c_closed,
        "c_open": if report.c_open.is_finite() { json!(report.c_open) } else { json!(null) },
        "c_tau_slope": report.c_tau_slope,
    });
    fs::write(dir.join("bounds.json"), serde_json::to_string_pretty(&doc)?)?;
    // window/contour spec document (round-trippable)
    if let Some(c) = &contour {
        let spec = WindowSpecDoc {
            m: m.grid.m,
            d: m.grid.d,
            k0: window.k0.clone(),
            lambda0: window.lambda0,
            eta: c.eta,
            xi: c.xi,
            n_x: m.grid.n_x,
            n_y: m.grid.n_y,
            l: m.grid.l,
        };
        fs::write(dir.join("window_spec.json"), spec.to_json())?;
    }
    println!(
        "bounds: c_closed = {:.6e}, c_open = {:.6e}, c_tau_slope = {:.6e}",
        report.c_closed, report.c_open, report.c_tau_slope
    );
    Ok(())
}

pub fn cmd_free_resolvent(m: &Materialized, dir: &Path) -> Result<()> {
    let (k0, lambda0) = require_window(&m.config)?;
    let window = build_window(&k0, lambda0, &m.grid)?;
    let contour = m.config.build_contour_for(lambda0)?;
    let a = m.config.resolve_weight(contour.as_ref(), m.grid.m);
    let f = probe_field(&m.grid, m.config.probe.as_ref().unwrap(), a)?;
    let kc: Vec<Complex64> = k0.iter().map(|t| Complex64::new(*t, 0.0)).collect();
    let mut rows = vec!["im_lambda,continuation_gap,left_inverse_residual".to_string()];
    for im in [0.1, 0.5] {
        let lam = Complex64::new(lambda0, im);
        let ra = apply_ra(&window, contour.as_ref(), &kc, lam, &f)?;
        let dr = apply_direct_resolvent(&k0, lam, &f)?;
        let gap = ra.sub(&dr).norm_weighted(-a) / f.norm_weighted(a);
        rows.push(csv_row(&[im, gap, f64::NAN]));
    }
    for im in [0.0, -window.delta / 2.0] {
        let lam = Complex64::new(lambda0, im);
        let resid = continued_left_inverse_residual(&window, contour.as_ref(), &kc, lam, &f)?;
        rows.push(csv_row(&[im, f64::NAN, resid]));
    }
    // tau decay
    let taus = m.config.taus.clone().unwrap_or_else(|| vec![5.0, 10.0, 20.0, 40.0]);
    let norms = tau_decay_norm(&window, contour.as_ref(), &m.grid, Complex64::new(lambda0, 0.0), &taus, a)?;
    let mut tau_rows = vec!["tau,norm,norm_times_tau".to_string()];
    for (t, n) in &norms {
        tau_rows.push(csv_row(&[*t, *n, t * n]));
    }
    fs::write(dir.join("free_resolvent.csv"), rows.join("\n") + "\n")?;
    fs::write(dir.join("tau_decay.csv"), tau_rows.join("\n") + "\n")?;
    println!("free-resolvent diagnostics written ({} tau values)", norms.len());
    Ok(())
}

pub fn cmd_factorization(m: &Materialized, dir: &Path) -> Result<()> {
    let lambda = m.config.lambda.unwrap_or(1.0);
    let grids = [
        m.grid.clone(),
        Arc::new(CylinderGrid::new(
            m.grid.m,
            m.grid.d,
            m.grid.l,
            (m.grid.n_x * 5).div_ceil(4) + (m.grid.n_x * 5).div_ceil(4) % 2,
            m.grid.n_y,
        )?),
    ];
    let mut rows = vec!["n_x,residual".to_string()];
    for g in &grids {
        let coeffs = cylspec::perturbation::fredholm::refine_coefficients(&m.coeffs, g)?;
        let u = WeightedField::sample(g.clone(), 0.0, |x, y| {
            let r2: f64 = x.iter().map(|t| t * t).sum();
            Complex64::from_polar((-r2).exp(), y.iter().map(|t| t.cos()).sum())
        });
        let k = vec![Complex64::new(0.3, 0.0); g.d];
        let r = factorization_residual(&coeffs, &k, Complex64::new(lambda, 0.0), &u)?;
        rows.push(format!("{},{}", g.n_x, fmt_f64(r)));
    }
    fs::write(dir.join("factorization.csv"), rows.join("\n") + "\n")?;
    println!("factorization residuals written");
    Ok(())
}

pub fn cmd_determinant_scan(m: &Materialized, dir: &Path) -> Result<()> {
    let (k0, _) = match require_window(&m.config) {
        Ok(w) => w,
        Err(_) => (vec![0.3; m.grid.d], 0.0),
    };
    let lambdas = match (&m.config.lambda_values, &m.config.lambda_range) {
        (Some(v), _) => v.clone(),
        (None, Some(r)) => r.values(),
        _ => return Err(Error::Validation("determinant-scan needs lambda_values or lambda_range".into())),
    };
    let mut rows = Vec::with_capacity(lambdas.len() + 1);
    let mut header: Vec<String> = (0..m.grid.d).map(|i| format!("k{}", i + 1)).collect();
    header.extend(["re_lambda", "im_lambda", "re_h", "im_h", "refinement_gap"].map(String::from));
    rows.push(header.join(","));
    for lam in &lambdas {
        let ctx = spectral::auto_context(&k0, *lam, &m.grid)?;
        let kc: Vec<Complex64> = k0.iter().map(|t| Complex64::new(*t, 0.0)).collect();
        let s = fredholm_h(
            &ctx.window,
            ctx.contour.as_ref(),
            &m.coeffs,
            &kc,
            Complex64::new(*lam, 0.0),
            &m.grid,
            ctx.weight_a,
        )?;
        let mut vals = k0.clone();
        vals.extend([*lam, 0.0, s.h_value.re, s.h_value.im, s.refinement_gap]);
        rows.push(csv_row(&vals));
    }
    fs::write(dir.join("determinant_scan.csv"), rows.join("\n") + "\n")?;
    println!("determinant scan: {} samples", lambdas.len());
    Ok(())
}

pub fn cmd_resonances(m: &Materialized, dir: &Path) -> Result<()> {
    let (k0, lambda0) = require_window(&m.config)?;
    let window = build_window(&k0, lambda0, &m.grid)?;
    let contour = m.config.build_contour_for(lambda0)?;
    let a = m.config.resolve_weight(contour.as_ref(), m.grid.m);
    let r = m
        .config
        .rect
        .as_ref()
        .ok_or_else(|| Error::Validation("resonances needs a \"rect\" section".into()))?;
    let rect = ComplexRect {
        re_min: r.re_min,
        re_max: r.re_max,
        im_min: r.im_min,
        im_max: r.im_max,
    };
    let found = find_resonances(&window, contour.as_ref(), &m.coeffs, &k0, rect, &m.grid, a)?;
    let mut rows = Vec::with_capacity(found.len() + 1);
    let mut header: Vec<String> = (0..m.grid.d).map(|i| format!("k{}", i + 1)).collect();
    header.extend(["re_lambda", "im_lambda", "h_residual", "winding"].map(String::from));
    rows.push(header.join(","));
    for res in &found {
        let mut vals = res.k.clone();
        vals.extend([res.lambda.re, res.lambda.im, res.h_residual, res.winding as f64]);
        rows.push(csv_row(&vals));
    }
    fs::write(dir.join("resonances.csv"), rows.join("\n") + "\n")?;
    println!("resonances found: {}", found.len());
    Ok(())
}

pub fn cmd_lap(m: &Materialized, dir: &Path) -> Result<()> {
    let (k0, lambda0) = require_window(&m.config)?;
    let window = build_window(&k0, lambda0, &m.grid)?;
    let contour = m.config.build_contour_for(lambda0)?;
    let a = m.config.resolve_weight(contour.as_ref(), m.grid.m);
    let f = probe_field(&m.grid, m.config.probe.as_ref().unwrap(), a)?;
    let lambdas = m.config.lambda_values.clone().unwrap_or_else(|| {
        let d = window.delta;
        (0..5).map(|i| lambda0 + d * (i as f64 - 2.0) / 2.5).collect()
    });
    let mut rows =
        vec!["lambda,re_continued,im_continued,re_extrapolated,im_extrapolated,rate".to_string()];
    for lam in &lambdas {
        let diag = lap_diagnostics(&window, contour.as_ref(), &m.coeffs, &k0, *lam, &f, a)?;
        rows.push(csv_row(&[
            *lam,
            diag.continued.re,
            diag.continued.im,
            diag.extrapolated.re,
            diag.extrapolated.im,
            diag.rate,
        ]));
    }
    fs::write(dir.join("lap.csv"), rows.join("\n") + "\n")?;
    // point-mass probe at the center
    let eps_list = m.config.eps_list.clone().unwrap_or_else(|| vec![0.1, 0.05, 0.025, 0.0125]);
    let products = point_mass_probe(&window, contour.as_ref(), &m.coeffs, &k0, lambda0, &f, &eps_list, a)?;
    let mut prows = vec!["eps,eps_times_im".to_string()];
    for (e, p) in &products {
        prows.push(csv_row(&[*e, *p]));
    }
    fs::write(dir.join("point_mass.csv"), prows.join("\n") + "\n")?;
    println!("lap table written ({} lambda values)", lambdas.len());
    Ok(())
}

pub fn cmd_density(m: &Materialized, dir: &Path) -> Result<()> {
    let k0 = m
        .config
        .window
        .as_ref()
        .map(|w| w.k0.clone())
        .unwrap_or_else(|| vec![0.3; m.grid.d]);
    let interval = m
        .config
        .interval
        .ok_or_else(|| Error::Validation("density needs an \"interval\" [alpha, beta]".into()))?;
    let n = m.config.n_samples.unwrap_or(32);
    // the probe weight must clear every window's eta on the interval
    let eta_max = cylspec::geometry::default_eta(interval[1].max(0.0));
    let a = m.config.weight_a.unwrap_or(1.25 * eta_max * (m.grid.m as f64).sqrt());
    let f = probe_field(&m.grid, m.config.probe.as_ref().unwrap(), a)?;
    let curve = spectral::spectral_density(&m.coeffs, &k0, (interval[0], interval[1]), n, &f, &m.grid)?;
    let mut rows = vec!["lambda,density,eps_used,extrapolation_error,flagged".to_string()];
    for s in &curve.samples {
        rows.push(format!(
            "{},{},{},{},{}",
            fmt_f64(s.lambda),
            fmt_f64(s.density),
            fmt_f64(s.eps_used),
            fmt_f64(s.extrapolation_error),
            u8::from(s.flagged)
        ));
    }
    fs::write(dir.join("density.csv"), rows.join("\n") + "\n")?;
    println!("density curve: {} samples", curve.samples.len());
    Ok(())
}

pub fn cmd_band_scan(m: &Materialized, dir: &Path) -> Result<()> {
    let k_range = m
        .config
        .k_range
        .clone()
        .ok_or_else(|| Error::Validation("band-scan needs a \"k_range\" section".into()))?;
    let lambdas = match (&m.config.lambda_values, &m.config.lambda_range) {
        (Some(v), _) => v.clone(),
        (None, Some(r)) => r.values(),
        _ => return Err(Error::Validation("band-scan needs lambda_values or lambda_range".into())),
    };
    if m.grid.d != 1 {
        return Err(Error::Unsupported("band-scan CLI emits d = 1 grids".into()));
    }
    let ks: Vec<Vec<f64>> = k_range.values().into_iter().map(|k| vec![k]).collect();
    let scan = spectral::band_scan(&m.coeffs, &ks, &lambdas, &m.grid)?;
    let mut rows = vec!["k1,lambda,re_h,im_h,refinement_gap,certified,skipped".to_string()];
    for r in &scan.rows {
        rows.push(format!(
            "{},{},{},{},{},{},{}",
            fmt_f64(r.k[0]),
            fmt_f64(r.lambda),
            fmt_f64(r.h_value.re),
            fmt_f64(r.h_value.im),
            fmt_f64(r.refinement_gap),
            u8::from(r.certified),
            u8::from(r.skipped)
        ));
    }
    fs::write(dir.join("band_scan.csv"), rows.join("\n") + "\n")?;
    let mut wrows = vec!["lambda,witness".to_string()];
    for (l, w) in scan.lambda_values.iter().zip(&scan.witness) {
        wrows.push(format!("{},{}", fmt_f64(*l), u8::from(*w)));
    }
    fs::write(dir.join("band_witness.csv"), wrows.join("\n") + "\n")?;
    println!("band scan: {} samples", scan.rows.len());
    Ok(())
}

pub fn cmd_measure(m: &Materialized, dir: &Path) -> Result<()> {
    let interval = m
        .config
        .interval
        .ok_or_else(|| Error::Validation("measure needs an \"interval\"".into()))?;
    let nodes = m.config.k_quadrature_nodes.unwrap_or(8);
    let quad = k_quadrature(m.grid.d, nodes);
    let probe = m.config.probe.clone().unwrap();
    let eta_max = cylspec::geometry::default_eta(interval[1].max(0.0));
    let a = m.config.weight_a.unwrap_or(1.25 * eta_max * (m.grid.m as f64).sqrt());
    let grid = m.grid.clone();
    let family = move |k: &[f64]| -> WeightedField {
        // cell-supported probe modulated by e^{i k y}: sampled and projected
        let width = probe.width;
        let center = probe.center;
        let kv = k.to_vec();
        WeightedField::sample(grid.clone(), a, |x, y| {
            let r2: f64 = x.iter().map(|t| (t - center) * (t - center)).sum();
            let bump: f64 = y
                .iter()
                .map(|yi| {
                    let s = (yi / 2.0).sin();
                    s * s * s * s
                })
                .product();
            let phase: f64 = kv.iter().zip(y).map(|(ki, yi)| ki * yi).sum();
            Complex64::from_polar((-r2 / (width * width)).exp() * bump, phase)
        })
    };
    let report = cylspec::spectral::direct_integral_measure(
        &m.coeffs,
        &quad,
        (interval[0], interval[1]),
        family,
        &m.grid,
    )?;
    let doc = json!({
        "value": report.value,
        "skipped": report.skipped.iter().map(|(k, r)| json!({"k": k, "reason": r})).collect::<Vec<_>>(),
    });
    fs::write(dir.join("measure.json"), serde_json::to_string_pretty(&doc)?)?;
    println!("direct-integral measure = {:.8e} ({} skipped)", report.value, report.skipped.len());
    Ok(())
}

pub fn cmd_selfcheck(dir: &Path, tolerance_scale: f64) -> Result<bool> {
    let results = cylspec::selfcheck::run_selfcheck(tolerance_scale)?;
    let mut rows = vec!["name,measured,threshold,passed".to_string()];
    let mut all = true;
    println!("{:<36} {:>14} {:>14}  status", "check", "measured", "threshold");
    for r in &results {
        all &= r.passed;
        println!(
            "{:<36} {:>14.4e} {:>14.4e}  {}",
            r.name,
            r.measured,
            r.threshold,
            if r.passed { "pass" } else { "FAIL" }
        );
        rows.push(format!(
            "{},{},{},{}",
            r.name,
            fmt_f64(r.measured),
            fmt_f64(r.threshold),
            u8::from(r.passed)
        ));
    }
    fs::write(dir.join("selfcheck.csv"), rows.join("\n") + "\n")?;
    Ok(all)
}
