//! Resonance search: zeros of h(k, .) inside a rectangle by the argument
//! principle, recursive bisection, and multiplicity-aware Newton polish.

use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::coefficients::ModelCoefficients;
use crate::geometry::contour::Contour;
use crate::geometry::grid::CylinderGrid;
use crate::geometry::window::SpectralWindow;
use crate::perturbation::fredholm::{fredholm_h, FredholmSample};

#[derive(Debug, Clone, Copy)]
pub struct ComplexRect {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl ComplexRect {
    pub fn center(&self) -> Complex64 {
        Complex64::new(0.5 * (self.re_min + self.re_max), 0.5 * (self.im_min + self.im_max))
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z.re >= self.re_min && z.re <= self.re_max && z.im >= self.im_min && z.im <= self.im_max
    }

    fn diameter(&self) -> f64 {
        (self.re_max - self.re_min).hypot(self.im_max - self.im_min)
    }
}

#[derive(Debug, Clone)]
pub struct Resonance {
    pub k: Vec<f64>,
    pub lambda: Complex64,
    /// |h| at the located zero
    pub h_residual: f64,
    /// argument-principle multiplicity
    pub winding: i32,
}

struct HCache<'a> {
    window: &'a SpectralWindow,
    contour: Option<&'a Contour>,
    coeffs: &'a ModelCoefficients,
    k: Vec<Complex64>,
    grid: Arc<CylinderGrid>,
    weight_a: f64,
    cache: HashMap<(u64, u64), FredholmSample>,
    evals: usize,
}

impl<'a> HCache<'a> {
    fn eval(&mut self, lambda: Complex64) -> Result<FredholmSample> {
        let key = (lambda.re.to_bits(), lambda.im.to_bits());
        if let Some(s) = self.cache.get(&key) {
            return Ok(s.clone());
        }
        let s = fredholm_h(
            self.window,
            self.contour,
            self.coeffs,
            &self.k,
            lambda,
            &self.grid,
            self.weight_a,
        )?;
        self.evals += 1;
        self.cache.insert(key, s.clone());
        Ok(s)
    }
}

/// Sample the boundary of `rect` (counterclockwise) densely enough that
/// consecutive phase increments stay below pi/2, and return the winding
/// number of h. Fails with BoundaryZero when |h| is uncertified on the
/// boundary.
fn winding_number(cache: &mut HCache, rect: &ComplexRect) -> Result<i32> {
    let corners = [
        Complex64::new(rect.re_min, rect.im_min),
        Complex64::new(rect.re_max, rect.im_min),
        Complex64::new(rect.re_max, rect.im_max),
        Complex64::new(rect.re_min, rect.im_max),
        Complex64::new(rect.re_min, rect.im_min),
    ];
    // initial parameter grid: 8 samples per edge
    let mut ts: Vec<f64> = Vec::new();
    for e in 0..4 {
        for j in 0..8 {
            ts.push(e as f64 + j as f64 / 8.0);
        }
    }
    ts.push(4.0);
    let point = |t: f64| -> Complex64 {
        let e = (t.floor() as usize).min(3);
        let s = t - e as f64;
        corners[e] + (corners[e + 1] - corners[e]) * s
    };
    let mut vals: Vec<(f64, Complex64)> = Vec::with_capacity(ts.len());
    for t in ts {
        let z = point(t);
        let s = cache.eval(z)?;
        if !s.certified_nonzero() {
            return Err(Error::BoundaryZero { re: z.re, im: z.im });
        }
        vals.push((t, s.h_value));
    }
    // refine until phase increments are small
    for _ in 0..14 {
        let mut refined = Vec::new();
        let mut any = false;
        for w in vals.windows(2) {
            let (t0, h0) = w[0];
            let (t1, h1) = w[1];
            refined.push((t0, h0));
            let dphi = (h1 / h0).arg().abs();
            if dphi > std::f64::consts::FRAC_PI_2 && t1 - t0 > 1e-6 {
                let tm = 0.5 * (t0 + t1);
                let z = point(tm);
                let s = cache.eval(z)?;
                if !s.certified_nonzero() {
                    return Err(Error::BoundaryZero { re: z.re, im: z.im });
                }
                refined.push((tm, s.h_value));
                any = true;
            }
        }
        refined.push(*vals.last().unwrap());
        vals = refined;
        if !any {
            break;
        }
    }
    let mut total = 0.0;
    for w in vals.windows(2) {
        total += (w[1].1 / w[0].1).arg();
    }
    let winding = total / (2.0 * std::f64::consts::PI);
    let rounded = winding.round();
    if (winding - rounded).abs() > 0.1 {
        return Err(Error::Validation(format!(
            "non-integral winding {winding:.4} on rectangle around {}",
            rect.center()
        )));
    }
    Ok(rounded as i32)
}

/// Multiplicity-aware Newton polish from the rectangle center:
/// lambda <- lambda - w h / h' with a centered finite-difference derivative.
fn polish(cache: &mut HCache, rect: &ComplexRect, w: i32) -> Result<(Complex64, f64)> {
    let mut z = rect.center();
    let mut step = rect.diameter() * 0.01;
    for _ in 0..40 {
        let h0 = cache.eval(z)?.h_value;
        let hp = cache.eval(z + Complex64::new(step, 0.0))?.h_value;
        let hm = cache.eval(z - Complex64::new(step, 0.0))?.h_value;
        let dh = (hp - hm) / (2.0 * step);
        if dh.norm() == 0.0 {
            break;
        }
        let delta = h0 / dh * (w as f64);
        let mut znew = z - delta;
        // stay inside (slightly enlarged) rectangle
        znew.re = znew.re.clamp(rect.re_min - step, rect.re_max + step);
        znew.im = znew.im.clamp(rect.im_min - step, rect.im_max + step);
        let moved = (znew - z).norm();
        z = znew;
        step = (moved * 0.1).clamp(1e-9, rect.diameter() * 0.01);
        if moved < 1e-11 {
            break;
        }
    }
    let h_res = cache.eval(z)?.h_value.norm();
    Ok((z, h_res))
}

fn search(
    cache: &mut HCache,
    rect: ComplexRect,
    min_size: f64,
    out: &mut Vec<Resonance>,
) -> Result<()> {
    let w = winding_number(cache, &rect)?;
    if w == 0 {
        return Ok(());
    }
    // polish-first: a multiplicity-w Newton step from the center resolves a
    // single (possibly degenerate) zero without splitting through it; the
    // located point is accepted when a small surrounding rectangle
    // reproduces the full winding.
    if let Ok((z, h_res)) = polish(cache, &rect, w) {
        if rect.contains(z) {
            // verification radius must clear the zero-location uncertainty of
            // the refinement gap; grow it until the boundary certifies
            let mut r = (rect.diameter() * 5e-3).max(min_size);
            while r < rect.diameter() / 4.0 {
                let tiny = ComplexRect {
                    re_min: z.re - r,
                    re_max: z.re + r,
                    im_min: z.im - r,
                    im_max: z.im + r,
                };
                match winding_number(cache, &tiny) {
                    Ok(wt) if wt == w => {
                        out.push(Resonance {
                            k: cache.k.iter().map(|c| c.re).collect(),
                            lambda: z,
                            h_residual: h_res,
                            winding: w,
                        });
                        return Ok(());
                    }
                    Ok(_) => break,
                    Err(Error::BoundaryZero { .. }) => {
                        r *= 3.0;
                    }
                    Err(e) => return Err(e),
                }
            }
        }
    }
    if w == 1 || rect.diameter() <= min_size {
        let (z, h_res) = polish(cache, &rect, w)?;
        out.push(Resonance {
            k: cache.k.iter().map(|c| c.re).collect(),
            lambda: z,
            h_residual: h_res,
            winding: w,
        });
        return Ok(());
    }
    // genuinely separated zeros: bisect the longer side; if a zero sits on
    // the split line the winding fails certification there, so nudge once
    let wide = (rect.re_max - rect.re_min) >= (rect.im_max - rect.im_min);
    for shift in [0.0, 0.07] {
        let frac = 0.5 + shift;
        let (ra, rb) = if wide {
            let mid = rect.re_min + frac * (rect.re_max - rect.re_min);
            (
                ComplexRect { re_max: mid, ..rect },
                ComplexRect { re_min: mid, ..rect },
            )
        } else {
            let mid = rect.im_min + frac * (rect.im_max - rect.im_min);
            (
                ComplexRect { im_max: mid, ..rect },
                ComplexRect { im_min: mid, ..rect },
            )
        };
        let attempt = (|| -> Result<Vec<Resonance>> {
            let mut tmp = Vec::new();
            search(cache, ra, min_size, &mut tmp)?;
            search(cache, rb, min_size, &mut tmp)?;
            Ok(tmp)
        })();
        match attempt {
            Ok(mut found) => {
                out.append(&mut found);
                return Ok(());
            }
            Err(Error::BoundaryZero { .. }) if shift == 0.0 => continue,
            Err(e) => return Err(e),
        }
    }
    unreachable!("both split attempts failed without propagating an error")
}

/// Locate the zeros of h(k, lambda) inside a rectangle of the continued
/// domain (Re lambda within 2 delta of the window center, |Im lambda| < delta).
#[allow(clippy::too_many_arguments)]
pub fn find_resonances(
    window: &SpectralWindow,
    contour: Option<&Contour>,
    coeffs: &ModelCoefficients,
    k: &[f64],
    rect: ComplexRect,
    grid: &Arc<CylinderGrid>,
    weight_a: f64,
) -> Result<Vec<Resonance>> {
    if rect.re_min >= rect.re_max || rect.im_min >= rect.im_max {
        return Err(Error::Validation("degenerate search rectangle".into()));
    }
    let two_delta = 2.0 * window.delta;
    if rect.re_min < window.lambda0 - two_delta
        || rect.re_max > window.lambda0 + two_delta
        || rect.im_min < -window.delta
        || rect.im_max > window.delta
    {
        return Err(Error::Validation(format!(
            "search rectangle exceeds the continued domain of the window \
             (|Re - lambda0| < {two_delta:.4}, |Im| < {:.4})",
            window.delta
        )));
    }
    let mut cache = HCache {
        window,
        contour,
        coeffs,
        k: k.iter().map(|t| Complex64::new(*t, 0.0)).collect(),
        grid: grid.clone(),
        weight_a,
        cache: HashMap::new(),
        evals: 0,
    };
    let min_size = (rect.diameter() * 1e-3).max(1e-6);
    let mut out = Vec::new();
    search(&mut cache, rect, min_size, &mut out)?;
    out.sort_by(|a, b| {
        (a.lambda.re, a.lambda.im)
            .partial_cmp(&(b.lambda.re, b.lambda.im))
            .unwrap()
    });
    Ok(out)
}

/// Winding number of h around a rectangle (exposed for additivity tests).
pub fn rect_winding(
    window: &SpectralWindow,
    contour: Option<&Contour>,
    coeffs: &ModelCoefficients,
    k: &[f64],
    rect: ComplexRect,
    grid: &Arc<CylinderGrid>,
    weight_a: f64,
) -> Result<i32> {
    let mut cache = HCache {
        window,
        contour,
        coeffs,
        k: k.iter().map(|t| Complex64::new(*t, 0.0)).collect(),
        grid: grid.clone(),
        weight_a,
        cache: HashMap::new(),
        evals: 0,
    };
    winding_number(&mut cache, &rect)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::coefficients::CoefficientFamily;
    use crate::spectral::auto_context;

    #[test]
    fn no_resonances_for_zero_potential() {
        let grid = Arc::new(CylinderGrid::new(1, 1, 16.0, 96, 3).unwrap());
        let ctx = auto_context(&[0.3], 2.0, &grid).unwrap();
        let mc = ModelCoefficients::new(
            CoefficientFamily::GaussianWell { v0: 0.0, width: 1.0 },
            8.0,
            grid.clone(),
        )
        .unwrap();
        let d = ctx.window.delta;
        let rect = ComplexRect {
            re_min: 2.0 - d,
            re_max: 2.0 + d,
            im_min: -0.8 * d,
            im_max: 0.8 * d,
        };
        let rs = find_resonances(
            &ctx.window,
            ctx.contour.as_ref(),
            &mc,
            &[0.3],
            rect,
            &grid,
            ctx.weight_a,
        )
        .unwrap();
        assert!(rs.is_empty());
    }
}
