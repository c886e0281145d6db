//! Spectral windows: a non-Bragg pair (k0, lambda0), its radius delta, the
//! open-channel set J, and the dilated momentum family k(tau).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::grid::CylinderGrid;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralWindow {
    pub k0: Vec<f64>,
    pub lambda0: f64,
    /// radius of the ball on which the channel dichotomy is certified
    pub delta: f64,
    /// open-channel modes J, sorted lexicographically
    pub modes_open: Vec<Vec<i64>>,
    /// perturbed real momentum with tilde_k_1 not an integer
    pub tilde_k: Vec<f64>,
    /// whether the deterministic offset was applied to reach tilde_k_1 ∉ Z
    pub tilde_offset_applied: bool,
    /// mode scan bound used for the dichotomy and Bragg checks
    pub scan_bound: i64,
}

const BRAGG_TOL: f64 = 1e-9;

/// Enumerate modes in the box |n_i| <= bound.
fn mode_box(d: usize, bound: i64) -> Vec<Vec<i64>> {
    let span = (2 * bound + 1) as usize;
    let total = span.pow(d as u32);
    let mut out = Vec::with_capacity(total);
    for flat in 0..total {
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

fn shifted_sq(k: &[f64], n: &[i64]) -> f64 {
    k.iter().zip(n).map(|(ki, ni)| (ki + *ni as f64).powi(2)).sum()
}

pub fn build_window(k0: &[f64], lambda0: f64, grid: &CylinderGrid) -> Result<SpectralWindow> {
    if k0.len() != grid.d {
        return Err(Error::Validation(format!(
            "k0 has {} components, grid.d = {}",
            k0.len(),
            grid.d
        )));
    }
    let k_inf = k0.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let scan_bound =
        (lambda0.max(0.0).sqrt().ceil() as i64) + (k_inf.ceil() as i64) + 1;
    let check_bound = scan_bound.max(grid.n_y as i64 + 2);

    // non-degeneracy check with a guard band beyond the grid mode cutoff
    for n in mode_box(grid.d, check_bound) {
        let margin = (shifted_sq(k0, &n) - lambda0).abs();
        if margin < BRAGG_TOL {
            return Err(Error::BraggResonance { mode: n, margin });
        }
    }

    // J and the delta radius from the scanned margins with a Lipschitz factor.
    let mut modes_open = Vec::new();
    let mut delta = 0.25f64;
    for n in mode_box(grid.d, scan_bound) {
        let sq = shifted_sq(k0, &n);
        let margin = (sq - lambda0).abs();
        let lip = 2.0 + 2.0 * sq.sqrt();
        delta = delta.min(0.5 * margin / lip);
        if sq < lambda0 {
            modes_open.push(n);
        }
    }
    modes_open.sort();

    // deterministic offset for tilde_k_1 ∉ Z
    let mut tilde_k = k0.to_vec();
    let mut offset = false;
    let frac_dist = (tilde_k[0] - tilde_k[0].round()).abs();
    if frac_dist < BRAGG_TOL {
        tilde_k[0] += (1e-2 / 2.0f64.sqrt()).min(delta / 2.0);
        offset = true;
    }

    // every open channel must live inside the grid's mode cutoff
    for n in &modes_open {
        if n.iter().any(|ni| ni.unsigned_abs() as usize > grid.n_y) {
            return Err(Error::Validation(format!(
                "open mode {n:?} exceeds the grid cutoff N_y = {}; raise N_y",
                grid.n_y
            )));
        }
    }

    let w = SpectralWindow {
        k0: k0.to_vec(),
        lambda0,
        delta,
        modes_open,
        tilde_k,
        tilde_offset_applied: offset,
        scan_bound,
    };
    w.certify_dichotomy(grid)?;
    Ok(w)
}

impl SpectralWindow {
    pub fn is_open(&self, n: &[i64]) -> bool {
        self.modes_open.iter().any(|m| m.as_slice() == n)
    }

    pub fn d(&self) -> usize {
        self.k0.len()
    }

    /// k(tau) = (tilde_k_1 + i tau, tilde_k')
    pub fn dilated_momentum(&self, tau: f64) -> Vec<Complex64> {
        let mut k: Vec<Complex64> = self.tilde_k.iter().map(|t| Complex64::new(*t, 0.0)).collect();
        k[0] += Complex64::new(0.0, tau);
        k
    }

    /// Probe-grid certification of the channel dichotomy on the closed ball
    /// of radius delta.
    fn certify_dichotomy(&self, grid: &CylinderGrid) -> Result<()> {
        let probes = 5;
        let modes = mode_box(grid.d, grid.n_y as i64);
        for ik in 0..probes {
            // k samples along each axis of the ball plus the center
            for axis in 0..grid.d {
                let mut k = self.k0.clone();
                k[axis] += self.delta * (ik as f64 / (probes - 1) as f64 * 2.0 - 1.0);
                for il in 0..probes {
                    let lam = self.lambda0
                        + self.delta * (il as f64 / (probes - 1) as f64 * 2.0 - 1.0);
                    for n in &modes {
                        let open_here = shifted_sq(&k, n) < lam;
                        if open_here != self.is_open(n) {
                            return Err(Error::Validation(format!(
                                "channel dichotomy fails at k={k:?}, lambda={lam}, n={n:?}"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// True when (k, lambda) lies in the validated neighborhood: k real in
    /// B_{2 delta}(k0) or on the dilated family, and |lambda - lambda0| < 2 delta.
    pub fn in_neighborhood(&self, k: &[Complex64], lambda: Complex64) -> bool {
        if (lambda - Complex64::new(self.lambda0, 0.0)).norm() >= 2.0 * self.delta {
            return false;
        }
        let real_dist2: f64 = k
            .iter()
            .zip(&self.k0)
            .map(|(ki, k0i)| (ki.re - k0i).powi(2))
            .sum();
        let is_real = k.iter().all(|ki| ki.im.abs() < 1e-14);
        if is_real && real_dist2.sqrt() < 2.0 * self.delta {
            return true;
        }
        // dilated family: Re k = tilde_k, Im k = (tau, 0, ..)
        let on_family = k
            .iter()
            .zip(&self.tilde_k)
            .enumerate()
            .all(|(i, (ki, tki))| {
                (ki.re - tki).abs() < 1e-12 && (i == 0 || ki.im.abs() < 1e-14)
            });
        on_family
    }
}
