//! Fields on the cylinder in mixed representation: physical samples along x,
//! Fourier modes along y, tagged with the weight exponent of the space
//! L_{2,a} they are measured in.

use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::grid::CylinderGrid;

#[derive(Debug, Clone)]
pub struct WeightedField {
    pub grid: Arc<CylinderGrid>,
    /// values[mode_flat, x_flat]
    pub values: Array2<Complex64>,
    /// exponent a of the weighted space L_{2,a} this field is tagged with
    pub weight_a: f64,
}

impl WeightedField {
    pub fn zeros(grid: Arc<CylinderGrid>, weight_a: f64) -> Self {
        let values = Array2::from_elem((grid.n_modes(), grid.n_x_total()), Complex64::default());
        WeightedField { grid, values, weight_a }
    }

    /// Build a single-mode field from an x-profile.
    pub fn from_mode_profile<F>(
        grid: Arc<CylinderGrid>,
        weight_a: f64,
        mode: &[i64],
        profile: F,
    ) -> Result<Self>
    where
        F: Fn(&[f64]) -> Complex64,
    {
        let mi = grid
            .mode_index(mode)
            .ok_or_else(|| Error::Validation(format!("mode {mode:?} outside cutoff")))?;
        let mut f = WeightedField::zeros(grid.clone(), weight_a);
        for xf in 0..grid.n_x_total() {
            let x = grid.x_coords(xf);
            f.values[[mi, xf]] = profile(&x);
        }
        Ok(f)
    }

    /// Sample an (x, y)-function on the grid: physical y samples on the
    /// dealiased grid, projected onto the mode set.
    pub fn sample<F>(grid: Arc<CylinderGrid>, weight_a: f64, func: F) -> Self
    where
        F: Fn(&[f64], &[f64]) -> Complex64,
    {
        let ypts = grid.y_points();
        let nyp = ypts.len();
        let modes = grid.modes();
        let mut f = WeightedField::zeros(grid.clone(), weight_a);
        let mut phys = vec![Complex64::default(); nyp];
        for xf in 0..grid.n_x_total() {
            let x = grid.x_coords(xf);
            for (s, y) in ypts.iter().enumerate() {
                phys[s] = func(&x, y);
            }
            // project: c_n = (1/Nyp) sum_s e^{-i n.y_s} phys_s  (exact for
            // trigonometric content below the dealiased cutoff)
            for (mi, n) in modes.iter().enumerate() {
                let mut acc = Complex64::default();
                for (s, y) in ypts.iter().enumerate() {
                    let phase: f64 = n.iter().zip(y).map(|(ni, yi)| *ni as f64 * yi).sum();
                    acc += phys[s] * Complex64::from_polar(1.0, -phase);
                }
                f.values[[mi, xf]] += acc / nyp as f64;
            }
        }
        f
    }

    /// Evaluate the mode synthesis at a physical point (x on the grid, flat
    /// index; y arbitrary).
    pub fn eval_at(&self, x_flat: usize, y: &[f64]) -> Complex64 {
        let modes = self.grid.modes();
        let mut acc = Complex64::default();
        for (mi, n) in modes.iter().enumerate() {
            let phase: f64 = n.iter().zip(y).map(|(ni, yi)| *ni as f64 * yi).sum();
            acc += self.values[[mi, x_flat]] * Complex64::from_polar(1.0, phase);
        }
        acc
    }

    /// Discrete L_{2,a} norm: quadrature of |e^{a<x>} f|^2 over the box and
    /// the exact mode Parseval in y.
    pub fn norm_weighted(&self, a: f64) -> f64 {
        let g = &self.grid;
        let mut acc = 0.0;
        for xf in 0..g.n_x_total() {
            let w = (2.0 * a * g.x_bracket(xf)).exp();
            let mut col = 0.0;
            for mi in 0..g.n_modes() {
                col += self.values[[mi, xf]].norm_sqr();
            }
            acc += w * col;
        }
        (acc * g.cell() * g.y_measure()).sqrt()
    }

    pub fn norm_l2(&self) -> f64 {
        self.norm_weighted(0.0)
    }

    /// Weighted norm restricted to interior nodes (collar of width L/8
    /// excluded); used by residual tests where box truncation pollutes the
    /// boundary region.
    pub fn norm_weighted_interior(&self, a: f64) -> f64 {
        let g = &self.grid;
        let mut acc = 0.0;
        for xf in 0..g.n_x_total() {
            if !g.interior(xf) {
                continue;
            }
            let w = (2.0 * a * g.x_bracket(xf)).exp();
            let mut col = 0.0;
            for mi in 0..g.n_modes() {
                col += self.values[[mi, xf]].norm_sqr();
            }
            acc += w * col;
        }
        (acc * g.cell() * g.y_measure()).sqrt()
    }

    /// Plain L2(Omega) inner product <self, other>.
    pub fn inner(&self, other: &WeightedField) -> Complex64 {
        let g = &self.grid;
        let mut acc = Complex64::default();
        for mi in 0..g.n_modes() {
            for xf in 0..g.n_x_total() {
                acc += self.values[[mi, xf]] * other.values[[mi, xf]].conj();
            }
        }
        acc * g.cell() * g.y_measure()
    }

    pub fn scaled(&self, c: Complex64) -> WeightedField {
        let mut out = self.clone();
        out.values.mapv_inplace(|z| z * c);
        out
    }

    pub fn add(&self, other: &WeightedField) -> WeightedField {
        let mut out = self.clone();
        out.values += &other.values;
        out
    }

    pub fn sub(&self, other: &WeightedField) -> WeightedField {
        let mut out = self.clone();
        out.values -= &other.values;
        out
    }

    /// Input validator: fields fed to transforms must decay below 1e-10
    /// (relative) on the outermost x shell, so the box stands in for R^m.
    pub fn validate_box_decay(&self) -> Result<()> {
        let g = &self.grid;
        let mut max_all: f64 = 0.0;
        let mut max_edge: f64 = 0.0;
        for xf in 0..g.n_x_total() {
            let idx = g.x_multi(xf);
            let on_edge = idx.iter().any(|&j| j == 0 || j == g.n_x - 1);
            for mi in 0..g.n_modes() {
                let v = self.values[[mi, xf]].norm();
                max_all = max_all.max(v);
                if on_edge {
                    max_edge = max_edge.max(v);
                }
            }
        }
        if max_all > 0.0 && max_edge > 1e-10 * max_all {
            return Err(Error::Validation(format!(
                "field does not decay at the box edge: edge/max = {:.3e}",
                max_edge / max_all
            )));
        }
        if !max_all.is_finite() {
            return Err(Error::Validation("field has non-finite samples".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Arc<CylinderGrid> {
        Arc::new(CylinderGrid::new(1, 1, 8.0, 64, 3).unwrap())
    }

    #[test]
    fn sample_matches_mode_profile() {
        let g = grid();
        let f1 = WeightedField::sample(g.clone(), 0.0, |x, y| {
            Complex64::from_polar((-x[0] * x[0]).exp(), 2.0 * y[0])
        });
        let f2 = WeightedField::from_mode_profile(g.clone(), 0.0, &[2], |x| {
            Complex64::new((-x[0] * x[0]).exp(), 0.0)
        })
        .unwrap();
        let diff = f1.sub(&f2).norm_l2();
        assert!(diff < 1e-12, "diff = {diff}");
    }

    #[test]
    fn gaussian_l2_norm_value() {
        // ||e^{-x^2} e^{i3y}||^2 = 2pi * sqrt(pi/2)
        let g = grid();
        let f = WeightedField::from_mode_profile(g.clone(), 0.0, &[3], |x| {
            Complex64::new((-x[0] * x[0]).exp(), 0.0)
        })
        .unwrap();
        let expect = (2.0 * std::f64::consts::PI * (std::f64::consts::PI / 2.0).sqrt()).sqrt();
        assert!((f.norm_l2() - expect).abs() < 1e-10);
    }

    #[test]
    fn box_decay_validator() {
        let g = grid();
        let ok = WeightedField::from_mode_profile(g.clone(), 0.0, &[0], |x| {
            Complex64::new((-x[0] * x[0]).exp(), 0.0)
        })
        .unwrap();
        ok.validate_box_decay().unwrap();
        let bad = WeightedField::from_mode_profile(g.clone(), 0.0, &[0], |x| {
            Complex64::new(1.0 / (1.0 + x[0] * x[0]), 0.0)
        })
        .unwrap();
        assert!(bad.validate_box_decay().is_err());
    }
}
