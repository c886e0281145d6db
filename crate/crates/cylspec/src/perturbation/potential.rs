//! The effective potential W(lambda) that conjugates the metric operator H(k)
//! into A(k) + W(lambda), and the discrete witness of the factorization
//! identity (H(k)-lambda) g^{-1/2} u = g^{1/2} (A(k)+W(lambda)-lambda) u.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::Result;
use crate::geometry::coefficients::{sample_coefficients, ModelCoefficients};
use crate::geometry::field::WeightedField;
use crate::geometry::grid::CylinderGrid;
use crate::transforms::{apply_fiber_operator, apply_free_fiber, multiply_by_samples};

#[derive(Debug, Clone)]
pub struct EffectivePotential {
    pub lambda: Complex64,
    /// samples on (x-grid) x (physical y-grid)
    pub values: Array2<Complex64>,
    /// inherited decay exponent of the coefficient certificate
    pub decay_b: f64,
}

/// W(lambda) = (1/g)(lap g / 2 - |grad g|^2/(4 g) + V + lambda (g - 1)),
/// evaluated nodewise; the optional truncation radius of the coefficients
/// zeroes W outside |x| < rho.
pub fn effective_potential(
    coeffs: &ModelCoefficients,
    lambda: Complex64,
    grid: &CylinderGrid,
) -> EffectivePotential {
    debug_assert_eq!(grid, coeffs.grid().as_ref());
    let s = sample_coefficients(coeffs);
    let nx = grid.n_x_total();
    let nyp = grid.n_y_points();
    let mut values = Array2::from_elem((nx, nyp), Complex64::default());
    for xf in 0..nx {
        let truncated = match coeffs.truncation_radius {
            Some(rho) => {
                let r2: f64 = grid.x_coords(xf).iter().map(|t| t * t).sum();
                r2.sqrt() >= rho
            }
            None => false,
        };
        if truncated {
            continue;
        }
        for yp in 0..nyp {
            let gv = s.g[[xf, yp]];
            let grad2: f64 = s.grad_g.iter().map(|gr| gr[[xf, yp]] * gr[[xf, yp]]).sum();
            let real_part = s.lap_g[[xf, yp]] / 2.0 - grad2 / (4.0 * gv) + s.v[[xf, yp]];
            let w = (Complex64::new(real_part, 0.0) + lambda * (gv - 1.0)) / gv;
            values[[xf, yp]] = w;
        }
    }
    EffectivePotential { lambda, values, decay_b: coeffs.decay_b }
}

impl EffectivePotential {
    pub fn w_infinity(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// max_y |W| per x node
    pub fn x_profile_sup(&self) -> Vec<f64> {
        (0..self.values.nrows())
            .map(|xf| {
                (0..self.values.ncols())
                    .map(|yp| self.values[[xf, yp]].norm())
                    .fold(0.0, f64::max)
            })
            .collect()
    }

    pub fn is_y_independent(&self, tol: f64) -> bool {
        for xf in 0..self.values.nrows() {
            let first = self.values[[xf, 0]];
            for yp in 1..self.values.ncols() {
                if (self.values[[xf, yp]] - first).norm() > tol {
                    return false;
                }
            }
        }
        true
    }

    /// y-mode coupling table: What_q(x) for offsets |q_i| <= 2 n_y, projected
    /// from the physical samples. Returned indexed by [x, offset_flat] with
    /// offsets enumerated like modes but with bound 2 n_y.
    pub fn mode_table(&self, grid: &CylinderGrid) -> (Vec<Vec<i64>>, Array2<Complex64>) {
        let bound = 2 * grid.n_y as i64;
        let span = (2 * bound + 1) as usize;
        let total = span.pow(grid.d as u32);
        let mut offsets = Vec::with_capacity(total);
        for flat in 0..total {
            let mut rem = flat;
            let mut q = vec![0i64; grid.d];
            for i in (0..grid.d).rev() {
                q[i] = (rem % span) as i64 - bound;
                rem /= span;
            }
            offsets.push(q);
        }
        let ypts = grid.y_points();
        let nyp = ypts.len();
        let mut table = Array2::from_elem((grid.n_x_total(), total), Complex64::default());
        for xf in 0..grid.n_x_total() {
            for (qi, q) in offsets.iter().enumerate() {
                let mut acc = Complex64::default();
                for (s, y) in ypts.iter().enumerate() {
                    let phase: f64 = q.iter().zip(y).map(|(ni, yi)| *ni as f64 * yi).sum();
                    acc += self.values[[xf, s]] * Complex64::from_polar(1.0, -phase);
                }
                table[[xf, qi]] = acc / nyp as f64;
            }
        }
        (offsets, table)
    }

    /// Pointwise multiplication W * u in the mixed representation.
    pub fn multiply(&self, u: &WeightedField) -> WeightedField {
        // split into real and imaginary parts to reuse the real-sample path
        let nx = self.values.nrows();
        let nyp = self.values.ncols();
        let mut re = Array2::zeros((nx, nyp));
        let mut im = Array2::zeros((nx, nyp));
        for xf in 0..nx {
            for yp in 0..nyp {
                re[[xf, yp]] = self.values[[xf, yp]].re;
                im[[xf, yp]] = self.values[[xf, yp]].im;
            }
        }
        let wre = multiply_by_samples(&re, u);
        let wim = multiply_by_samples(&im, u);
        wre.add(&wim.scaled(Complex64::new(0.0, 1.0)))
    }
}

/// Discrete factorization residual
/// ||(H(k)-lambda) g^{-1/2} u - g^{1/2} (A(k)+W(lambda)-lambda) u||_interior / ||u||.
pub fn factorization_residual(
    coeffs: &ModelCoefficients,
    k: &[Complex64],
    lambda: Complex64,
    u: &WeightedField,
) -> Result<f64> {
    let grid = u.grid.clone();
    let s = sample_coefficients(coeffs);
    let nx = grid.n_x_total();
    let nyp = grid.n_y_points();
    let mut g_inv_sqrt = Array2::zeros((nx, nyp));
    let mut g_sqrt = Array2::zeros((nx, nyp));
    for xf in 0..nx {
        for yp in 0..nyp {
            g_sqrt[[xf, yp]] = s.g[[xf, yp]].sqrt();
            g_inv_sqrt[[xf, yp]] = 1.0 / s.g[[xf, yp]].sqrt();
        }
    }
    let w = effective_potential(coeffs, lambda, &grid);
    // lhs = (H(k) - lambda) g^{-1/2} u
    let gu = multiply_by_samples(&g_inv_sqrt, u);
    let hgu = apply_fiber_operator(Some(coeffs), k, &gu);
    let lhs = hgu.sub(&gu.scaled(lambda));
    // rhs = g^{1/2} (A(k) + W - lambda) u
    let au = apply_free_fiber(k, u);
    let wu = w.multiply(u);
    let inner = au.add(&wu).sub(&u.scaled(lambda));
    let rhs = multiply_by_samples(&g_sqrt, &inner);
    let diff = lhs.sub(&rhs);
    Ok(diff.norm_weighted_interior(0.0) / u.norm_l2())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::coefficients::CoefficientFamily;
    use std::sync::Arc;

    fn grid(n_x: usize) -> Arc<CylinderGrid> {
        Arc::new(CylinderGrid::new(1, 1, 12.0, n_x, 3).unwrap())
    }

    #[test]
    fn g_identity_gives_w_equals_v() {
        let g = grid(64);
        let mc = ModelCoefficients::new(
            CoefficientFamily::GaussianWell { v0: 2.0, width: 1.0 },
            4.0,
            g.clone(),
        )
        .unwrap();
        for lam in [Complex64::new(0.0, 0.0), Complex64::new(1.7, -0.3)] {
            let w = effective_potential(&mc, lam, &g);
            for xf in (0..g.n_x_total()).step_by(7) {
                let x = g.x_coords(xf);
                let expect = mc.v(&x, &[0.0]);
                assert!((w.values[[xf, 0]] - Complex64::new(expect, 0.0)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn w_zero_for_free_model() {
        let g = grid(64);
        let mc = ModelCoefficients::new(
            CoefficientFamily::GaussianWell { v0: 0.0, width: 1.0 },
            4.0,
            g.clone(),
        )
        .unwrap();
        let w = effective_potential(&mc, Complex64::new(0.3, 0.1), &g);
        assert!(w.w_infinity() == 0.0);
    }

    #[test]
    fn metric_bump_hand_value_at_origin() {
        // g = 1 + e^{-x^2}: at x = 0, W(0) = (1/2)(lap g / 2) = -0.5
        let g = grid(64);
        let mc = ModelCoefficients::new(
            CoefficientFamily::MetricBump { amplitude: 1.0, width: 1.0 },
            4.0,
            g.clone(),
        )
        .unwrap();
        let w = effective_potential(&mc, Complex64::default(), &g);
        let x0 = g.n_x / 2; // node at x = 0
        assert!(
            (w.values[[x0, 0]] - Complex64::new(-0.5, 0.0)).norm() < 1e-13,
            "W(0) = {}",
            w.values[[x0, 0]]
        );
    }

    #[test]
    fn affinity_in_lambda() {
        // W(l1) - W(l2) = (l1 - l2)(g-1)/g nodewise
        let g = grid(64);
        let mc = ModelCoefficients::new(
            CoefficientFamily::MetricBump { amplitude: 0.7, width: 1.2 },
            4.0,
            g.clone(),
        )
        .unwrap();
        let l1 = Complex64::new(0.9, 0.2);
        let l2 = Complex64::new(-0.3, -0.6);
        let w1 = effective_potential(&mc, l1, &g);
        let w2 = effective_potential(&mc, l2, &g);
        for xf in (0..g.n_x_total()).step_by(5) {
            let x = g.x_coords(xf);
            let gv = mc.g(&x, &[0.0]);
            let expect = (l1 - l2) * ((gv - 1.0) / gv);
            let got = w1.values[[xf, 0]] - w2.values[[xf, 0]];
            assert!((got - expect).norm() < 1e-13);
        }
    }

    #[test]
    fn truncation_radius_zeroes_tail() {
        let g = grid(64);
        let mc = ModelCoefficients::new(
            CoefficientFamily::GaussianWell { v0: 1.0, width: 2.0 },
            3.0,
            g.clone(),
        )
        .unwrap();
        let full = effective_potential(&mc, Complex64::default(), &g);
        let trunc = effective_potential(
            &crate::geometry::coefficients::truncate_potential(&mc, 3.0),
            Complex64::default(),
            &g,
        );
        for xf in 0..g.n_x_total() {
            let r = g.x_coords(xf)[0].abs();
            if r >= 3.0 {
                assert_eq!(trunc.values[[xf, 0]], Complex64::default());
            } else {
                assert_eq!(trunc.values[[xf, 0]], full.values[[xf, 0]]);
            }
        }
        // rho = 0 kills W; rho >= L is the identity on the grid
        let zero = effective_potential(
            &crate::geometry::coefficients::truncate_potential(&mc, 0.0),
            Complex64::default(),
            &g,
        );
        assert!(zero.w_infinity() == 0.0);
        let ident = effective_potential(
            &crate::geometry::coefficients::truncate_potential(&mc, g.l + 1.0),
            Complex64::default(),
            &g,
        );
        assert!(ident
            .values
            .iter()
            .zip(full.values.iter())
            .all(|(a, b)| a == b));
    }

    #[test]
    fn factorization_exact_for_identity_metric() {
        let g = grid(64);
        let mc = ModelCoefficients::new(
            CoefficientFamily::GaussianWell { v0: 1.5, width: 1.0 },
            4.0,
            g.clone(),
        )
        .unwrap();
        let u = WeightedField::sample(g.clone(), 0.0, |x, y| {
            Complex64::from_polar((-x[0] * x[0]).exp(), y[0].cos())
        });
        let k = [Complex64::new(0.4, 0.0)];
        let r = factorization_residual(&mc, &k, Complex64::new(0.7, 0.1), &u).unwrap();
        assert!(r < 1e-12, "identity-metric residual {r}");
    }

    #[test]
    fn factorization_residual_lambda_independent_for_identity_metric() {
        let g = grid(64);
        let mc = ModelCoefficients::new(
            CoefficientFamily::GaussianWell { v0: 0.8, width: 1.0 },
            4.0,
            g.clone(),
        )
        .unwrap();
        let u = WeightedField::sample(g.clone(), 0.0, |x, y| {
            Complex64::from_polar((-0.8 * x[0] * x[0]).exp(), (2.0 * y[0]).sin())
        });
        let k = [Complex64::new(0.2, 0.0)];
        let r1 = factorization_residual(&mc, &k, Complex64::new(0.0, 0.0), &u).unwrap();
        let r2 = factorization_residual(&mc, &k, Complex64::new(5.0, -1.0), &u).unwrap();
        assert!((r1 - r2).abs() < 1e-12);
    }

    #[test]
    fn factorization_converges_under_refinement() {
        let mk = |n_x: usize| {
            let g = grid(n_x);
            let mc = ModelCoefficients::new(
                CoefficientFamily::MetricBump { amplitude: 0.5, width: 1.0 },
                4.0,
                g.clone(),
            )
            .unwrap();
            let u = WeightedField::sample(g.clone(), 0.0, |x, y| {
                Complex64::from_polar((-x[0] * x[0]).exp(), y[0].cos())
            });
            let k = [Complex64::new(0.3, 0.0)];
            factorization_residual(&mc, &k, Complex64::new(1.0, 0.0), &u).unwrap()
        };
        let coarse = mk(128);
        let fine = mk(160);
        assert!(coarse < 1e-5, "coarse residual {coarse}");
        assert!(coarse / fine >= 2.0, "residual ratio {}", coarse / fine);
    }
}
