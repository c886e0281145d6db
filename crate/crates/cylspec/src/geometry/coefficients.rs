//! Model coefficients g, V on the cylinder: the built-in families used by the
//! CLI and tests, hypothesis validation (periodicity, uniform ellipticity,
//! decay certificate), and the potential-truncation helper.

use std::sync::Arc;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::grid::CylinderGrid;

/// Built-in coefficient families. All decay certificates are with respect to
/// <x> = sqrt(|x|^2+1). Depth conventions: `v0 > 0` is an attractive well.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum CoefficientFamily {
    /// g = 1, V(x) = -v0 * exp(-(|x|/width)^2)
    GaussianWell { v0: f64, width: f64 },
    /// g = 1 + amplitude * exp(-(|x|/width)^2), V = 0
    MetricBump { amplitude: f64, width: f64 },
    /// g = 1, V(x) = -v0 on |x| < width/2 (midpoint value at the edges); m = 1 only
    SquareWell { v0: f64, width: f64 },
    /// g = 1, V(x,y) = v0 * cos(y_1) * exp(-(|x|/width)^2)
    CosineLattice { v0: f64, width: f64 },
    /// g = 1, V given by x-profiles per y-mode on the run grid
    Tabulated {
        n_y: usize,
        /// v_modes[mode_flat][x_flat] as (re, im) pairs; mode order matches
        /// CylinderGrid::modes() for the stated n_y
        v_modes: Vec<Vec<(f64, f64)>>,
    },
}

#[derive(Debug, Clone)]
pub struct ModelCoefficients {
    pub family: CoefficientFamily,
    /// decay exponent of the certificate |g-1|,|grad g|,|lap g|,|V| <= C e^{-b<x>}
    pub decay_b: f64,
    /// certificate constant C, computed on the grid at build time
    pub decay_c: f64,
    /// uniform lower bound of g on the sampled grid
    pub c0: f64,
    /// optional W-truncation radius (ball cutoff applied to the
    /// effective potential at |x| >= radius)
    pub truncation_radius: Option<f64>,
    grid: Arc<CylinderGrid>,
}

impl ModelCoefficients {
    pub fn new(family: CoefficientFamily, decay_b: f64, grid: Arc<CylinderGrid>) -> Result<Self> {
        if !(decay_b > 0.0) {
            return Err(Error::Validation("decay exponent b must be > 0".into()));
        }
        if let CoefficientFamily::SquareWell { .. } = family {
            if grid.m != 1 {
                return Err(Error::Unsupported("square-well family needs m = 1".into()));
            }
        }
        if let CoefficientFamily::Tabulated { n_y, v_modes } = &family {
            if *n_y != grid.n_y {
                return Err(Error::Validation(format!(
                    "tabulated n_y {} does not match grid n_y {}",
                    n_y, grid.n_y
                )));
            }
            if v_modes.len() != grid.n_modes() {
                return Err(Error::Validation("tabulated mode count mismatch".into()));
            }
            for vm in v_modes {
                if vm.len() != grid.n_x_total() {
                    return Err(Error::Validation("tabulated x length mismatch".into()));
                }
            }
        }
        let mut mc = ModelCoefficients {
            family,
            decay_b,
            decay_c: 0.0,
            c0: 0.0,
            truncation_radius: None,
            grid,
        };
        mc.validate()?;
        Ok(mc)
    }

    pub fn grid(&self) -> &Arc<CylinderGrid> {
        &self.grid
    }

    pub fn is_g_identity(&self) -> bool {
        !matches!(self.family, CoefficientFamily::MetricBump { .. })
    }

    pub fn is_y_independent(&self) -> bool {
        match &self.family {
            CoefficientFamily::CosineLattice { .. } => false,
            CoefficientFamily::Tabulated { v_modes, .. } => {
                let g = &self.grid;
                let zero_mode = g.mode_index(&vec![0i64; g.d]).unwrap();
                v_modes.iter().enumerate().all(|(mi, vm)| {
                    mi == zero_mode || vm.iter().all(|&(re, im)| re == 0.0 && im == 0.0)
                })
            }
            _ => true,
        }
    }

    fn radial2(x: &[f64]) -> f64 {
        x.iter().map(|t| t * t).sum()
    }

    pub fn g(&self, x: &[f64], _y: &[f64]) -> f64 {
        match &self.family {
            CoefficientFamily::MetricBump { amplitude, width } => {
                1.0 + amplitude * (-Self::radial2(x) / (width * width)).exp()
            }
            _ => 1.0,
        }
    }

    /// gradient of g over (x, y) directions; length m + d
    pub fn grad_g(&self, x: &[f64], _y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.m + self.grid.d];
        if let CoefficientFamily::MetricBump { amplitude, width } = &self.family {
            let e = (-Self::radial2(x) / (width * width)).exp();
            for (i, xi) in x.iter().enumerate() {
                out[i] = amplitude * e * (-2.0 * xi / (width * width));
            }
        }
        out
    }

    pub fn lap_g(&self, x: &[f64], _y: &[f64]) -> f64 {
        match &self.family {
            CoefficientFamily::MetricBump { amplitude, width } => {
                let w2 = width * width;
                let r2 = Self::radial2(x);
                let e = (-r2 / w2).exp();
                amplitude * e * (4.0 * r2 / (w2 * w2) - 2.0 * self.grid.m as f64 / w2)
            }
            _ => 0.0,
        }
    }

    pub fn v(&self, x: &[f64], y: &[f64]) -> f64 {
        match &self.family {
            CoefficientFamily::GaussianWell { v0, width } => {
                -v0 * (-Self::radial2(x) / (width * width)).exp()
            }
            CoefficientFamily::SquareWell { v0, width } => {
                let r = x[0].abs();
                let half = width / 2.0;
                if (r - half).abs() < 1e-12 {
                    -v0 / 2.0
                } else if r < half {
                    -*v0
                } else {
                    0.0
                }
            }
            CoefficientFamily::CosineLattice { v0, width } => {
                v0 * y[0].cos() * (-Self::radial2(x) / (width * width)).exp()
            }
            CoefficientFamily::Tabulated { v_modes, .. } => {
                // synthesis at a grid node; x must be a node of the run grid
                let g = &self.grid;
                let dx = g.dx();
                let mut flat = 0usize;
                for &xi in x {
                    let j = ((xi + g.l) / dx).round();
                    if (xi + g.l - j * dx).abs() > 1e-9 {
                        return f64::NAN;
                    }
                    flat = flat * g.n_x + (j as usize).min(g.n_x - 1);
                }
                let mut acc = 0.0;
                for (mi, n) in g.modes().iter().enumerate() {
                    let (re, im) = v_modes[mi][flat];
                    let phase: f64 = n.iter().zip(y).map(|(ni, yi)| *ni as f64 * yi).sum();
                    acc += re * phase.cos() - im * phase.sin();
                }
                acc
            }
            CoefficientFamily::MetricBump { .. } => 0.0,
        }
    }

    /// Locations and jump values [V](s) = V(s+) - V(s-) of x_1-discontinuities
    /// of V; empty for smooth families. Used by the quadrature edge corrections.
    pub fn v_jumps(&self) -> Vec<(f64, f64)> {
        match &self.family {
            CoefficientFamily::SquareWell { v0, width } => {
                let half = width / 2.0;
                vec![(-half, -v0), (half, *v0)]
            }
            _ => Vec::new(),
        }
    }

    /// Hypothesis checks: periodicity at sampled nodes, g >= c0 > 0, decay
    /// certificate with the stored constant. Fills `c0` and `decay_c`.
    fn validate(&mut self) -> Result<()> {
        let g = self.grid.clone();
        let ypts = g.y_points();
        let two_pi = 2.0 * std::f64::consts::PI;
        let mut gmin = f64::INFINITY;
        let mut cert: f64 = 0.0;
        for xf in 0..g.n_x_total() {
            let x = g.x_coords(xf);
            let ebx = (self.decay_b * g.x_bracket(xf)).exp();
            for y in &ypts {
                let gv = self.g(&x, y);
                gmin = gmin.min(gv);
                // periodicity (hypothesis 1) at sampled nodes
                for i in 0..g.d {
                    let mut ys = y.clone();
                    ys[i] += two_pi;
                    if (self.g(&x, &ys) - gv).abs() > 1e-12
                        || (self.v(&x, &ys) - self.v(&x, y)).abs() > 1e-12
                    {
                        return Err(Error::Validation(
                            "coefficients are not 2pi-periodic in y".into(),
                        ));
                    }
                }
                let grad = self.grad_g(&x, y);
                let gn = grad.iter().map(|t| t * t).sum::<f64>().sqrt();
                let worst = (gv - 1.0)
                    .abs()
                    .max(self.lap_g(&x, y).abs())
                    .max(gn)
                    .max(self.v(&x, y).abs());
                cert = cert.max(worst * ebx);
            }
        }
        if !(gmin > 0.0) {
            return Err(Error::Validation(format!(
                "g is not uniformly positive on the grid: min = {gmin:.3e}"
            )));
        }
        if !cert.is_finite() {
            return Err(Error::Validation("decay certificate is not finite".into()));
        }
        self.c0 = gmin;
        self.decay_c = cert;
        Ok(())
    }
}

/// Ball truncation of the potential: the effective potential computed from the
/// returned coefficients vanishes for |x| >= rho. rho >= L is the identity on
/// the grid; rho = 0 kills W entirely.
pub fn truncate_potential(coeffs: &ModelCoefficients, rho: f64) -> ModelCoefficients {
    let mut out = coeffs.clone();
    out.truncation_radius = Some(rho.max(0.0));
    out
}


/// Sample g, V and the derived quantities of g on (x-grid) x (physical
/// y-grid). Rows are x_flat, columns y-point index.
pub struct CoefficientSamples {
    pub g: Array2<f64>,
    pub v: Array2<f64>,
    pub grad_g: Vec<Array2<f64>>, // one per (m+d) direction
    pub lap_g: Array2<f64>,
}

pub fn sample_coefficients(coeffs: &ModelCoefficients) -> CoefficientSamples {
    let g = coeffs.grid();
    let ypts = g.y_points();
    let nx = g.n_x_total();
    let nyp = ypts.len();
    let mut gs = Array2::zeros((nx, nyp));
    let mut vs = Array2::zeros((nx, nyp));
    let mut lap = Array2::zeros((nx, nyp));
    let mut grads = vec![Array2::zeros((nx, nyp)); g.m + g.d];
    for xf in 0..nx {
        let x = g.x_coords(xf);
        for (s, y) in ypts.iter().enumerate() {
            gs[[xf, s]] = coeffs.g(&x, y);
            vs[[xf, s]] = coeffs.v(&x, y);
            lap[[xf, s]] = coeffs.lap_g(&x, y);
            let gr = coeffs.grad_g(&x, y);
            for (dir, val) in gr.into_iter().enumerate() {
                grads[dir][[xf, s]] = val;
            }
        }
    }
    CoefficientSamples { g: gs, v: vs, grad_g: grads, lap_g: lap }
}
