//! Numerically certified lower bounds for the resolvent denominators
//! |zeta^2 + (k+n)^2 - lambda| over the window, the contour, and the dilated
//! momentum family.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::contour::Contour;
use crate::geometry::grid::CylinderGrid;
use crate::geometry::window::SpectralWindow;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbeSpec {
    /// points per zeta dimension on the real-axis probe grid
    pub zeta_points: usize,
    /// samples per k axis and per lambda axis over the window ball
    pub ball_points: usize,
    /// dilation parameters (|tau| >= 1) for the slope bound
    pub taus: Vec<f64>,
    /// half-width of the real zeta probe grid; None picks sqrt(lambda0+2)+3
    pub zeta_max: Option<f64>,
}

impl Default for ProbeSpec {
    fn default() -> Self {
        ProbeSpec {
            zeta_points: 33,
            ball_points: 5,
            taus: vec![1.0, 2.0, 5.0, 10.0, 20.0, 40.0],
            zeta_max: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundReport {
    /// min |zeta^2+(k+n)^2-lambda| over real zeta, closed channels
    pub c_closed: f64,
    /// same over the contour power gamma^m, open channels; infinite when J is empty
    pub c_open: f64,
    /// min |zeta^2+(k(tau)+n)^2-lambda| / |tau| over the dilated family
    pub c_tau_slope: f64,
}

const UNDERFLOW: f64 = 1e-12;

fn mode_box(d: usize, bound: i64) -> Vec<Vec<i64>> {
    let span = (2 * bound + 1) as usize;
    let mut out = Vec::with_capacity(span.pow(d as u32));
    for flat in 0..span.pow(d as u32) {
        let mut rem = flat;
        let mut n = vec![0i64; d];
        for i in (0..d).rev() {
            n[i] = (rem % span) as i64 - bound;
            rem /= span;
        }
        out.push(n);
    }
    out
}

fn shifted_sq_c(k: &[Complex64], n: &[i64]) -> Complex64 {
    k.iter()
        .zip(n)
        .map(|(ki, ni)| {
            let s = ki + Complex64::new(*ni as f64, 0.0);
            s * s
        })
        .sum()
}

/// Real-zeta tensor probe values of zeta^2 (m-fold).
fn real_zeta_sq(grid: &CylinderGrid, spec: &ProbeSpec, lambda0: f64) -> Vec<f64> {
    let z = spec
        .zeta_max
        .unwrap_or_else(|| (lambda0.max(0.0) + 2.0).sqrt() + 3.0);
    let pts = spec.zeta_points;
    let axis: Vec<f64> = (0..pts)
        .map(|i| -z + 2.0 * z * i as f64 / (pts - 1) as f64)
        .collect();
    let mut out = Vec::new();
    match grid.m {
        1 => {
            for t in &axis {
                out.push(t * t);
            }
        }
        _ => {
            for a in &axis {
                for b in &axis {
                    out.push(a * a + b * b);
                }
            }
        }
    }
    out
}

/// Contour tensor probe values of zeta^2 over gamma^m.
fn contour_zeta_sq(grid: &CylinderGrid, contour: &Contour) -> Vec<Complex64> {
    let zs: Vec<Complex64> = contour.nodes.iter().map(|n| n.zeta).collect();
    let mut out = Vec::new();
    match grid.m {
        1 => {
            for z in &zs {
                out.push(z * z);
            }
        }
        _ => {
            for a in &zs {
                for b in &zs {
                    out.push(a * a + b * b);
                }
            }
        }
    }
    out
}

/// (k, lambda) samples over the window ball (real axis points only).
fn ball_samples(window: &SpectralWindow, pts: usize) -> Vec<(Vec<f64>, f64)> {
    let mut out = Vec::new();
    let d = window.d();
    for axis in 0..d {
        for ik in 0..pts {
            let mut k = window.k0.clone();
            k[axis] += window.delta * (2.0 * ik as f64 / (pts - 1) as f64 - 1.0) * 0.98;
            for il in 0..pts {
                let lam = window.lambda0
                    + window.delta * (2.0 * il as f64 / (pts - 1) as f64 - 1.0) * 0.98;
                out.push((k.clone(), lam));
            }
        }
    }
    out
}

pub fn verify_nonresonance_bounds(
    window: &SpectralWindow,
    contour: Option<&Contour>,
    grid: &CylinderGrid,
    spec: &ProbeSpec,
) -> Result<BoundReport> {
    let modes = mode_box(grid.d, window.scan_bound.max(grid.n_y as i64 + 2));
    let samples = ball_samples(window, spec.ball_points);
    let rsq = real_zeta_sq(grid, spec, window.lambda0);

    let mut c_closed = f64::INFINITY;
    for (k, lam) in &samples {
        let kc: Vec<Complex64> = k.iter().map(|t| Complex64::new(*t, 0.0)).collect();
        for n in &modes {
            if window.is_open(n) {
                continue;
            }
            let base = shifted_sq_c(&kc, n) - Complex64::new(*lam, 0.0);
            for zz in &rsq {
                let v = (Complex64::new(*zz, 0.0) + base).norm();
                c_closed = c_closed.min(v);
            }
        }
    }

    let mut c_open = f64::INFINITY;
    if !window.modes_open.is_empty() {
        let contour = contour.ok_or_else(|| {
            Error::Validation("open channels present: contour required for bound probe".into())
        })?;
        let csq = contour_zeta_sq(grid, contour);
        for (k, lam) in &samples {
            let kc: Vec<Complex64> = k.iter().map(|t| Complex64::new(*t, 0.0)).collect();
            for n in &window.modes_open {
                let base = shifted_sq_c(&kc, n) - Complex64::new(*lam, 0.0);
                for zz in &csq {
                    c_open = c_open.min((zz + base).norm());
                }
            }
        }
    }

    // dilated family: closed channels over real zeta, open over the contour
    let mut c_tau_slope = f64::INFINITY;
    let lam_samples: Vec<f64> = samples.iter().map(|(_, l)| *l).collect();
    for tau in &spec.taus {
        if tau.abs() < 1.0 {
            continue;
        }
        let kt = window.dilated_momentum(*tau);
        for n in &modes {
            let base = shifted_sq_c(&kt, n);
            if window.is_open(n) {
                if let Some(contour) = contour {
                    for zz in contour_zeta_sq(grid, contour) {
                        for lam in &lam_samples {
                            let v = (zz + base - Complex64::new(*lam, 0.0)).norm() / tau.abs();
                            c_tau_slope = c_tau_slope.min(v);
                        }
                    }
                }
            } else {
                for zz in &rsq {
                    for lam in &lam_samples {
                        let v = (Complex64::new(*zz, 0.0) + base - Complex64::new(*lam, 0.0))
                            .norm()
                            / tau.abs();
                        c_tau_slope = c_tau_slope.min(v);
                    }
                }
            }
        }
    }

    for (which, value) in [
        ("c_closed", c_closed),
        ("c_open", c_open),
        ("c_tau_slope", c_tau_slope),
    ] {
        if value < UNDERFLOW {
            return Err(Error::BoundViolation { which, value });
        }
    }
    Ok(BoundReport { c_closed, c_open, c_tau_slope })
}
