//! Discretization of the cylinder R^m x (0,2pi)^d.
//!
//! x lives on a uniform grid over [-L, L]^m (the decay directions, truncated
//! to a box), y is handled spectrally through the Fourier modes n in Z^d with
//! |n_i| <= n_y. Products with coefficient functions go through a dealiased
//! physical y-grid.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Hard cap on total degrees of freedom (x nodes times y modes).
pub const DOF_BUDGET: usize = 1 << 24;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CylinderGrid {
    /// number of decay (x) dimensions
    pub m: usize,
    /// number of periodic (y) dimensions
    pub d: usize,
    /// x-box half-width
    pub l: f64,
    /// x nodes per dimension, uniform on [-L, L)
    pub n_x: usize,
    /// Fourier-mode cutoff per periodic dimension
    pub n_y: usize,
}

impl CylinderGrid {
    pub fn new(m: usize, d: usize, l: f64, n_x: usize, n_y: usize) -> Result<Self> {
        if m < 1 {
            return Err(Error::Validation("m must be >= 1".into()));
        }
        if d < 1 {
            return Err(Error::Validation("d must be >= 1".into()));
        }
        if !(l > 0.0) {
            return Err(Error::Validation("L must be > 0".into()));
        }
        if n_x < 16 || n_x % 2 != 0 {
            return Err(Error::Validation(format!(
                "N_x must be even and >= 16, got {n_x}"
            )));
        }
        if n_y < 1 {
            return Err(Error::Validation("N_y must be >= 1".into()));
        }
        if m > 2 || d > 2 {
            return Err(Error::Unsupported(format!("m = {m}, d = {d}: v1 supports m, d <= 2")));
        }
        let grid = CylinderGrid { m, d, l, n_x, n_y };
        if grid.n_dof() > DOF_BUDGET {
            return Err(Error::Validation(format!(
                "total DOF {} exceeds budget {}",
                grid.n_dof(),
                DOF_BUDGET
            )));
        }
        Ok(grid)
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.l / self.n_x as f64
    }

    /// x-cell volume element dx^m
    pub fn cell(&self) -> f64 {
        self.dx().powi(self.m as i32)
    }

    /// (2 pi)^d, the y-cell measure carried by the mode representation
    pub fn y_measure(&self) -> f64 {
        (2.0 * std::f64::consts::PI).powi(self.d as i32)
    }

    /// nodes per x dimension
    pub fn x_axis(&self) -> Vec<f64> {
        (0..self.n_x).map(|j| -self.l + j as f64 * self.dx()).collect()
    }

    /// DFT frequency for index p (FFT storage order)
    pub fn zeta(&self, p: usize) -> f64 {
        let half = self.n_x / 2;
        let signed = if p < half { p as isize } else { p as isize - self.n_x as isize };
        std::f64::consts::PI * signed as f64 / self.l
    }

    pub fn zeta_axis(&self) -> Vec<f64> {
        (0..self.n_x).map(|p| self.zeta(p)).collect()
    }

    pub fn n_x_total(&self) -> usize {
        self.n_x.pow(self.m as u32)
    }

    pub fn modes_per_dim(&self) -> usize {
        2 * self.n_y + 1
    }

    pub fn n_modes(&self) -> usize {
        self.modes_per_dim().pow(self.d as u32)
    }

    pub fn n_dof(&self) -> usize {
        self.n_x_total() * self.n_modes()
    }

    /// Enumerate y-modes in a fixed row-major order, n_i in [-n_y, n_y].
    pub fn modes(&self) -> Vec<Vec<i64>> {
        let span = self.modes_per_dim();
        let mut out = Vec::with_capacity(self.n_modes());
        for flat in 0..self.n_modes() {
            let mut rem = flat;
            let mut n = vec![0i64; self.d];
            for i in (0..self.d).rev() {
                n[i] = (rem % span) as i64 - self.n_y as i64;
                rem /= span;
            }
            out.push(n);
        }
        out
    }

    pub fn mode_index(&self, n: &[i64]) -> Option<usize> {
        let span = self.modes_per_dim();
        let mut flat = 0usize;
        for &ni in n {
            if ni.unsigned_abs() as usize > self.n_y {
                return None;
            }
            flat = flat * span + (ni + self.n_y as i64) as usize;
        }
        Some(flat)
    }

    /// Decode a flat x index into per-dimension node indices (row-major,
    /// dimension 0 slowest).
    pub fn x_multi(&self, flat: usize) -> Vec<usize> {
        let mut rem = flat;
        let mut idx = vec![0usize; self.m];
        for i in (0..self.m).rev() {
            idx[i] = rem % self.n_x;
            rem /= self.n_x;
        }
        idx
    }

    pub fn x_flat(&self, multi: &[usize]) -> usize {
        let mut flat = 0usize;
        for &j in multi {
            flat = flat * self.n_x + j;
        }
        flat
    }

    /// Coordinates of a flat x index.
    pub fn x_coords(&self, flat: usize) -> Vec<f64> {
        let dx = self.dx();
        self.x_multi(flat)
            .into_iter()
            .map(|j| -self.l + j as f64 * dx)
            .collect()
    }

    /// <x> = sqrt(|x|^2 + 1) at a flat x index.
    pub fn x_bracket(&self, flat: usize) -> f64 {
        let x = self.x_coords(flat);
        (x.iter().map(|t| t * t).sum::<f64>() + 1.0).sqrt()
    }

    /// Interior mask: true away from a boundary collar of width L/8 in every
    /// x dimension (box-truncation artifacts live in the collar).
    pub fn interior(&self, flat: usize) -> bool {
        let lim = self.l * 7.0 / 8.0;
        self.x_coords(flat).iter().all(|t| t.abs() <= lim)
    }

    /// Dealiased physical y-grid size per dimension for coefficient products.
    pub fn y_phys(&self) -> usize {
        4 * (self.n_y + 1)
    }

    pub fn y_axis(&self) -> Vec<f64> {
        let np = self.y_phys();
        (0..np)
            .map(|s| 2.0 * std::f64::consts::PI * s as f64 / np as f64)
            .collect()
    }

    /// Enumerate physical y points (tensor over d dims), row-major.
    pub fn y_points(&self) -> Vec<Vec<f64>> {
        let axis = self.y_axis();
        let np = self.y_phys();
        let total = np.pow(self.d as u32);
        let mut out = Vec::with_capacity(total);
        for flat in 0..total {
            let mut rem = flat;
            let mut y = vec![0.0; self.d];
            for i in (0..self.d).rev() {
                y[i] = axis[rem % np];
                rem /= np;
            }
            out.push(y);
        }
        out
    }

    pub fn n_y_points(&self) -> usize {
        self.y_phys().pow(self.d as u32)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_invariants_rejected() {
        assert!(CylinderGrid::new(0, 1, 8.0, 64, 4).is_err());
        assert!(CylinderGrid::new(1, 1, 8.0, 63, 4).is_err()); // odd
        assert!(CylinderGrid::new(1, 1, 8.0, 8, 4).is_err()); // too small
        assert!(CylinderGrid::new(1, 1, -1.0, 64, 4).is_err());
        assert!(CylinderGrid::new(1, 1, 8.0, 64, 0).is_err());
        assert!(CylinderGrid::new(3, 1, 8.0, 64, 2).is_err()); // m > 2
    }

    #[test]
    fn mode_enumeration_round_trip() {
        let g = CylinderGrid::new(1, 2, 8.0, 32, 2).unwrap();
        let modes = g.modes();
        assert_eq!(modes.len(), 25);
        for (i, n) in modes.iter().enumerate() {
            assert_eq!(g.mode_index(n), Some(i));
        }
        assert_eq!(modes[0], vec![-2, -2]);
        assert_eq!(modes[24], vec![2, 2]);
    }

    #[test]
    fn zeta_frequencies_signed() {
        let g = CylinderGrid::new(1, 1, 4.0, 16, 1).unwrap();
        assert_eq!(g.zeta(0), 0.0);
        assert!((g.zeta(1) - std::f64::consts::PI / 4.0).abs() < 1e-15);
        assert!((g.zeta(15) + std::f64::consts::PI / 4.0).abs() < 1e-15);
    }

    #[test]
    fn x_multi_round_trip_m2() {
        let g = CylinderGrid::new(2, 1, 4.0, 16, 1).unwrap();
        for flat in [0usize, 5, 17, 255] {
            assert_eq!(g.x_flat(&g.x_multi(flat)), flat);
        }
    }
}
