//! Scaled discrete Fourier transforms along the x directions.
//!
//! Conventions: nodes x_j = -L + j dx, frequencies zeta_p = pi p~ / L with p~
//! the signed FFT index. The forward transform carries the full (2pi)^-m dx^m
//! scaling (the full normalization lives entirely on the forward side);
//! the inverse is the bare frequency sum with measure dzeta^m.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::geometry::grid::CylinderGrid;

fn fft_1d(data: &mut [Complex64], inverse: bool) {
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(data.len())
    } else {
        planner.plan_fft_forward(data.len())
    };
    fft.process(data);
}

/// Apply an in-place 1-D pass along every x axis of a flattened m-dim row.
fn fft_all_axes(grid: &CylinderGrid, row: &mut [Complex64], inverse: bool) {
    let n = grid.n_x;
    match grid.m {
        1 => fft_1d(row, inverse),
        2 => {
            // axis 1 (contiguous)
            for chunk in row.chunks_mut(n) {
                fft_1d(chunk, inverse);
            }
            // axis 0 (strided)
            let mut scratch = vec![Complex64::default(); n];
            for col in 0..n {
                for r in 0..n {
                    scratch[r] = row[r * n + col];
                }
                fft_1d(&mut scratch, inverse);
                for r in 0..n {
                    row[r * n + col] = scratch[r];
                }
            }
        }
        _ => unreachable!("grid validation caps m at 2"),
    }
}

/// Parity (-1)^{sum p_i} of a flat frequency index.
fn parity(grid: &CylinderGrid, flat: usize) -> f64 {
    let mut rem = flat;
    let mut s = 0usize;
    for _ in 0..grid.m {
        s += rem % grid.n_x;
        rem /= grid.n_x;
    }
    if s % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Physical samples -> spectral coefficients (in FFT index order):
/// F(p) = (2pi)^-m dx^m (-1)^{sum p} DFT(f).
pub fn forward_x(grid: &CylinderGrid, row: &mut [Complex64]) {
    fft_all_axes(grid, row, false);
    let scale = (grid.dx() / (2.0 * std::f64::consts::PI)).powi(grid.m as i32);
    for (p, z) in row.iter_mut().enumerate() {
        *z *= scale * parity(grid, p);
    }
}

/// Spectral coefficients (FFT order) -> physical samples:
/// f(x_j) = dzeta^m sum_p e^{i zeta_p x_j} F(p).
pub fn inverse_x(grid: &CylinderGrid, row: &mut [Complex64]) {
    for (p, z) in row.iter_mut().enumerate() {
        *z *= parity(grid, p);
    }
    fft_all_axes(grid, row, true);
    let dzeta = std::f64::consts::PI / grid.l;
    let scale = dzeta.powi(grid.m as i32);
    for z in row.iter_mut() {
        *z *= scale;
    }
}

/// Multiply spectral coefficients by a per-dimension symbol and return to
/// physical space: row <- InvDFT[ symbol(zeta) * DFT(row) ]. The symbol takes
/// the frequency vector.
pub fn apply_symbol<F>(grid: &CylinderGrid, row: &mut [Complex64], symbol: F)
where
    F: Fn(&[f64]) -> Complex64,
{
    // raw DFT both ways: the scalings cancel, only the symbol remains
    fft_all_axes(grid, row, false);
    let n = grid.n_x;
    let norm = 1.0 / (n as f64).powi(grid.m as i32);
    for (p, z) in row.iter_mut().enumerate() {
        let mut rem = p;
        let mut zeta = vec![0.0; grid.m];
        for i in (0..grid.m).rev() {
            zeta[i] = grid.zeta(rem % n);
            rem /= n;
        }
        *z *= symbol(&zeta) * norm;
    }
    fft_all_axes(grid, row, true);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_identity() {
        let grid = CylinderGrid::new(1, 1, 8.0, 64, 1).unwrap();
        let xs = grid.x_axis();
        let mut row: Vec<Complex64> = xs
            .iter()
            .map(|x| Complex64::new((-x * x).exp(), 0.3 * x.cos()))
            .collect();
        let orig = row.clone();
        forward_x(&grid, &mut row);
        inverse_x(&grid, &mut row);
        let err: f64 = row
            .iter()
            .zip(&orig)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-12, "round trip error {err}");
    }

    #[test]
    fn gaussian_transform_closed_form() {
        // (2pi)^-1 int e^{-i zeta x} e^{-x^2} dx = (2pi)^-1 sqrt(pi) e^{-zeta^2/4}
        let grid = CylinderGrid::new(1, 1, 12.0, 128, 1).unwrap();
        let xs = grid.x_axis();
        let mut row: Vec<Complex64> = xs
            .iter()
            .map(|x| Complex64::new((-x * x).exp(), 0.0))
            .collect();
        forward_x(&grid, &mut row);
        for p in 0..grid.n_x {
            let z = grid.zeta(p);
            let expect = std::f64::consts::PI.sqrt() / (2.0 * std::f64::consts::PI)
                * (-z * z / 4.0).exp();
            assert!(
                (row[p] - Complex64::new(expect, 0.0)).norm() < 1e-12,
                "p={p} zeta={z}"
            );
        }
    }

    #[test]
    fn symbol_is_second_derivative() {
        let grid = CylinderGrid::new(1, 1, 10.0, 128, 1).unwrap();
        let xs = grid.x_axis();
        let mut row: Vec<Complex64> = xs
            .iter()
            .map(|x| Complex64::new((-x * x).exp(), 0.0))
            .collect();
        apply_symbol(&grid, &mut row, |zeta| {
            Complex64::new(-zeta[0] * zeta[0], 0.0)
        });
        for (j, x) in xs.iter().enumerate() {
            let expect = (-x * x).exp() * (4.0 * x * x - 2.0);
            assert!((row[j].re - expect).abs() < 1e-9, "x={x}");
        }
    }

    #[test]
    fn round_trip_m2() {
        let grid = CylinderGrid::new(2, 1, 6.0, 32, 1).unwrap();
        let mut row = vec![Complex64::default(); grid.n_x_total()];
        for f in 0..grid.n_x_total() {
            let x = grid.x_coords(f);
            row[f] = Complex64::new((-x[0] * x[0] - 0.5 * x[1] * x[1]).exp(), x[0] * 0.1);
        }
        let orig = row.clone();
        forward_x(&grid, &mut row);
        inverse_x(&grid, &mut row);
        let err: f64 = row
            .iter()
            .zip(&orig)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-12);
    }
}
