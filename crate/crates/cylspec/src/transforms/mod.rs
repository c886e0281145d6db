//! Cylinder Fourier analysis: the mixed transform (continuous in x, series in
//! y), its evaluation at complex frequencies on the deformation contour, the
//! Floquet-Gelfand transform, and application of the fiber operators H(k)/A(k).

pub mod fft;

use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::coefficients::{sample_coefficients, ModelCoefficients};
use crate::geometry::contour::Contour;
use crate::geometry::field::WeightedField;
use crate::geometry::grid::CylinderGrid;

#[derive(Debug, Clone)]
pub enum FrequencyKind {
    RealAxis,
    /// coefficients evaluated at the tensor nodes of the referenced contour
    Contour(Contour),
}

/// Transform coefficients indexed by (zeta node, y-mode). Real-axis rows run
/// over the grid's FFT frequency order; contour rows over the tensor product
/// of contour nodes (row-major over the m factors).
#[derive(Debug, Clone)]
pub struct CylinderSpectrum {
    pub grid: Arc<CylinderGrid>,
    pub coeffs: Array2<Complex64>,
    pub kind: FrequencyKind,
}

/// Forward mixed transform on the grid: exact Fourier series in y (the field
/// already stores modes), scaled DFT in x carrying the (2pi)^{-m-d} forward
/// normalization on the x side combined with the mode projection's (2pi)^{-d}.
pub fn cylinder_fourier(f: &WeightedField) -> CylinderSpectrum {
    let g = &f.grid;
    let mut coeffs = Array2::from_elem((g.n_x_total(), g.n_modes()), Complex64::default());
    let mut row = vec![Complex64::default(); g.n_x_total()];
    for mi in 0..g.n_modes() {
        for xf in 0..g.n_x_total() {
            row[xf] = f.values[[mi, xf]];
        }
        fft::forward_x(g, &mut row);
        for p in 0..g.n_x_total() {
            coeffs[[p, mi]] = row[p];
        }
    }
    CylinderSpectrum { grid: f.grid.clone(), coeffs, kind: FrequencyKind::RealAxis }
}

/// Inverse of `cylinder_fourier` (real-axis kind only): bare frequency sum.
pub fn inverse_cylinder_fourier(spec: &CylinderSpectrum) -> Result<WeightedField> {
    match spec.kind {
        FrequencyKind::RealAxis => {}
        _ => {
            return Err(Error::Validation(
                "inverse transform needs real-axis coefficients".into(),
            ))
        }
    }
    let g = &spec.grid;
    let mut f = WeightedField::zeros(spec.grid.clone(), 0.0);
    let mut row = vec![Complex64::default(); g.n_x_total()];
    for mi in 0..g.n_modes() {
        for p in 0..g.n_x_total() {
            row[p] = spec.coeffs[[p, mi]];
        }
        fft::inverse_x(g, &mut row);
        for xf in 0..g.n_x_total() {
            f.values[[mi, xf]] = row[xf];
        }
    }
    Ok(f)
}

/// Enumerate the tensor nodes zeta in gamma^m with their product weights.
pub fn contour_tensor_nodes(grid: &CylinderGrid, contour: &Contour) -> Vec<(Vec<Complex64>, Complex64)> {
    let base: Vec<(Complex64, Complex64)> =
        contour.nodes.iter().map(|n| (n.zeta, n.weight)).collect();
    match grid.m {
        1 => base.iter().map(|(z, w)| (vec![*z], *w)).collect(),
        2 => {
            let mut out = Vec::with_capacity(base.len() * base.len());
            for (za, wa) in &base {
                for (zb, wb) in &base {
                    out.push((vec![*za, *zb], wa * wb));
                }
            }
            out
        }
        _ => unreachable!(),
    }
}

/// Evaluate (Ff)(zeta, n) at every contour tensor node by direct weighted
/// quadrature of e^{-i zeta x} f over the x grid. Requires the field's weight
/// tag to exceed eta sqrt(m) so the continuation integral converges.
pub fn contour_fourier(f: &WeightedField, contour: &Contour) -> Result<CylinderSpectrum> {
    let g = &f.grid;
    let required = contour.eta * (g.m as f64).sqrt();
    if f.weight_a <= required {
        return Err(Error::WeightTooSmall { a: f.weight_a, required });
    }
    f.validate_box_decay()?;
    let nodes = contour_tensor_nodes(g, contour);
    let scale = (g.dx() / (2.0 * std::f64::consts::PI)).powi(g.m as i32);
    let mut coeffs = Array2::from_elem((nodes.len(), g.n_modes()), Complex64::default());
    // precompute per-dimension exponential tables e^{-i zeta x} for each base node
    let xs = g.x_axis();
    let base: Vec<Complex64> = contour.nodes.iter().map(|n| n.zeta).collect();
    let mut tables = Vec::with_capacity(base.len());
    for z in &base {
        let t: Vec<Complex64> = xs
            .iter()
            .map(|x| (Complex64::new(0.0, -1.0) * z * x).exp())
            .collect();
        tables.push(t);
    }
    for mi in 0..g.n_modes() {
        match g.m {
            1 => {
                for (row, t) in tables.iter().enumerate() {
                    let mut acc = Complex64::default();
                    for j in 0..g.n_x {
                        acc += t[j] * f.values[[mi, j]];
                    }
                    coeffs[[row, mi]] = acc * scale;
                }
            }
            2 => {
                let nb = base.len();
                for (ra, ta) in tables.iter().enumerate() {
                    for (rb, tb) in tables.iter().enumerate() {
                        let mut acc = Complex64::default();
                        for ja in 0..g.n_x {
                            let mut inner = Complex64::default();
                            for jb in 0..g.n_x {
                                inner += tb[jb] * f.values[[mi, ja * g.n_x + jb]];
                            }
                            acc += ta[ja] * inner;
                        }
                        coeffs[[ra * nb + rb, mi]] = acc * scale;
                    }
                }
            }
            _ => unreachable!(),
        }
    }
    Ok(CylinderSpectrum {
        grid: f.grid.clone(),
        coeffs,
        kind: FrequencyKind::Contour(contour.clone()),
    })
}

/// Floquet-Gelfand transform of a function on R^{m+d}: truncated lattice sum
/// over |l_i| <= periods, projected onto the grid's mode set.
pub fn floquet_gelfand<F>(
    func: F,
    periods: usize,
    k: &[f64],
    grid: Arc<CylinderGrid>,
) -> WeightedField
where
    F: Fn(&[f64], &[f64]) -> Complex64,
{
    let two_pi = 2.0 * std::f64::consts::PI;
    let d = grid.d;
    let span = 2 * periods + 1;
    let shifts: Vec<Vec<i64>> = (0..span.pow(d as u32))
        .map(|flat| {
            let mut rem = flat;
            let mut l = vec![0i64; d];
            for i in (0..d).rev() {
                l[i] = (rem % span) as i64 - periods as i64;
                rem /= span;
            }
            l
        })
        .collect();
    WeightedField::sample(grid, 0.0, |x, y| {
        let mut acc = Complex64::default();
        for l in &shifts {
            let yl: Vec<f64> = y.iter().zip(l).map(|(yi, li)| yi + two_pi * *li as f64).collect();
            let phase: f64 = k.iter().zip(&yl).map(|(ki, yi)| ki * yi).sum();
            acc += Complex64::from_polar(1.0, phase) * func(x, &yl);
        }
        acc
    })
}

/// Pointwise multiplication by coefficient samples (x-grid x physical y-grid)
/// in the mixed representation: synthesize y, multiply, project back.
pub fn multiply_by_samples(samples: &Array2<f64>, u: &WeightedField) -> WeightedField {
    let g = &u.grid;
    let modes = g.modes();
    let ypts = g.y_points();
    let nyp = ypts.len();
    // synthesis/projection phase tables
    let mut synth = Array2::from_elem((nyp, g.n_modes()), Complex64::default());
    for (s, y) in ypts.iter().enumerate() {
        for (mi, n) in modes.iter().enumerate() {
            let phase: f64 = n.iter().zip(y).map(|(ni, yi)| *ni as f64 * yi).sum();
            synth[[s, mi]] = Complex64::from_polar(1.0, phase);
        }
    }
    let mut out = WeightedField::zeros(u.grid.clone(), u.weight_a);
    let mut phys = vec![Complex64::default(); nyp];
    for xf in 0..g.n_x_total() {
        for (s, p) in phys.iter_mut().enumerate() {
            let mut acc = Complex64::default();
            for mi in 0..g.n_modes() {
                acc += synth[[s, mi]] * u.values[[mi, xf]];
            }
            *p = acc * samples[[xf, s]];
        }
        for mi in 0..g.n_modes() {
            let mut acc = Complex64::default();
            for s in 0..nyp {
                acc += phys[s] * synth[[s, mi]].conj();
            }
            out.values[[mi, xf]] = acc / nyp as f64;
        }
    }
    out
}

/// Spectral partial derivative along x dimension `dim`.
pub fn x_derivative(u: &WeightedField, dim: usize) -> WeightedField {
    let g = &u.grid;
    let mut out = u.clone();
    let mut row = vec![Complex64::default(); g.n_x_total()];
    for mi in 0..g.n_modes() {
        for xf in 0..g.n_x_total() {
            row[xf] = u.values[[mi, xf]];
        }
        fft::apply_symbol(g, &mut row, |zeta| Complex64::new(0.0, zeta[dim]));
        for xf in 0..g.n_x_total() {
            out.values[[mi, xf]] = row[xf];
        }
    }
    out
}

/// Spectral 1-D second derivative along x dimension `dim`.
pub fn x_second_derivative(u: &WeightedField, dim: usize) -> WeightedField {
    let g = &u.grid;
    let mut out = u.clone();
    let mut row = vec![Complex64::default(); g.n_x_total()];
    for mi in 0..g.n_modes() {
        for xf in 0..g.n_x_total() {
            row[xf] = u.values[[mi, xf]];
        }
        fft::apply_symbol(g, &mut row, |zeta| Complex64::new(-zeta[dim] * zeta[dim], 0.0));
        for xf in 0..g.n_x_total() {
            out.values[[mi, xf]] = row[xf];
        }
    }
    out
}

/// Mode-space partial derivative along y dimension `dim` (multiplier i n).
pub fn y_derivative(u: &WeightedField, dim: usize) -> WeightedField {
    let g = &u.grid;
    let mut out = u.clone();
    for (mi, n) in g.modes().iter().enumerate() {
        let mult = Complex64::new(0.0, n[dim] as f64);
        for xf in 0..g.n_x_total() {
            out.values[[mi, xf]] = u.values[[mi, xf]] * mult;
        }
    }
    out
}

/// Apply the free fiber operator A(k) = -Lap_x + (k + n)^2 (analytic in k).
pub fn apply_free_fiber(k: &[Complex64], u: &WeightedField) -> WeightedField {
    let g = &u.grid;
    assert_eq!(k.len(), g.d);
    let mut out = WeightedField::zeros(u.grid.clone(), u.weight_a);
    let mut row = vec![Complex64::default(); g.n_x_total()];
    for (mi, n) in g.modes().iter().enumerate() {
        let shift: Complex64 = k
            .iter()
            .zip(n)
            .map(|(ki, ni)| {
                let s = ki + Complex64::new(*ni as f64, 0.0);
                s * s
            })
            .sum();
        for xf in 0..g.n_x_total() {
            row[xf] = u.values[[mi, xf]];
        }
        fft::apply_symbol(g, &mut row, |zeta| {
            Complex64::new(zeta.iter().map(|z| z * z).sum(), 0.0)
        });
        for xf in 0..g.n_x_total() {
            out.values[[mi, xf]] = row[xf] + shift * u.values[[mi, xf]];
        }
    }
    out
}

/// Apply the fiber operator H(k) (metric g, potential V) in expanded form:
/// H(k)u = -div(g grad u) - i k.(grad_y g) u - 2 i g k.(grad_y u) + g k^2 u + V u.
/// Reduces to A(k) for g = 1, V = 0. x-derivatives are spectral, y exact.
pub fn apply_fiber_operator(
    coeffs: Option<&ModelCoefficients>,
    k: &[Complex64],
    u: &WeightedField,
) -> WeightedField {
    let Some(mc) = coeffs else {
        return apply_free_fiber(k, u);
    };
    if mc.is_g_identity() {
        // A(k)u + V u
        let mut out = apply_free_fiber(k, u);
        let samples = sample_coefficients(mc);
        let vu = multiply_by_samples(&samples.v, u);
        out.values += &vu.values;
        return out;
    }
    let g = &u.grid;
    let samples = sample_coefficients(mc);
    let mut out = WeightedField::zeros(u.grid.clone(), u.weight_a);
    // -div(g grad u), x part
    for dim in 0..g.m {
        let w = x_derivative(u, dim);
        let gw = multiply_by_samples(&samples.g, &w);
        let t = x_derivative(&gw, dim);
        out.values -= &t.values;
    }
    // -div(g grad u), y part
    for dim in 0..g.d {
        let w = y_derivative(u, dim);
        let gw = multiply_by_samples(&samples.g, &w);
        let t = y_derivative(&gw, dim);
        out.values -= &t.values;
    }
    let ksq: Complex64 = k.iter().map(|ki| ki * ki).sum();
    // - i k.(grad_y g) u  - 2 i g k.(grad_y u)
    for dim in 0..g.d {
        let kd = k[dim];
        let gyu = multiply_by_samples(&samples.grad_g[g.m + dim], u);
        let t1 = gyu.scaled(Complex64::new(0.0, -1.0) * kd);
        out.values += &t1.values;
        let du = y_derivative(u, dim);
        let gdu = multiply_by_samples(&samples.g, &du);
        let t2 = gdu.scaled(Complex64::new(0.0, -2.0) * kd);
        out.values += &t2.values;
    }
    // g k^2 u + V u
    let gu = multiply_by_samples(&samples.g, u);
    out.values += &gu.scaled(ksq).values;
    let vu = multiply_by_samples(&samples.v, u);
    out.values += &vu.values;
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::coefficients::CoefficientFamily;
    use crate::geometry::contour::build_contour;

    fn grid() -> Arc<CylinderGrid> {
        Arc::new(CylinderGrid::new(1, 1, 12.0, 128, 3).unwrap())
    }

    fn gauss_mode(g: &Arc<CylinderGrid>, n: i64, a: f64) -> WeightedField {
        WeightedField::from_mode_profile(g.clone(), a, &[n], |x| {
            Complex64::new((-x[0] * x[0]).exp(), 0.0)
        })
        .unwrap()
    }

    #[test]
    fn forward_concentrates_on_single_mode() {
        let g = grid();
        let f = gauss_mode(&g, 3, 0.0);
        let spec = cylinder_fourier(&f);
        let mi3 = g.mode_index(&[3]).unwrap();
        let sqrt_pi = std::f64::consts::PI.sqrt();
        for p in 0..g.n_x {
            let z = g.zeta(p);
            // definition (2pi)^{-m-d} int_Omega e^{-i zeta x - i n y} f:
            // y integral gives 2pi on n=3, so profile = (2pi)^-1 sqrt(pi) e^{-zeta^2/4}
            let expect = sqrt_pi / (2.0 * std::f64::consts::PI) * (-z * z / 4.0).exp();
            assert!((spec.coeffs[[p, mi3]] - Complex64::new(expect, 0.0)).norm() < 1e-12);
            for mi in 0..g.n_modes() {
                if mi != mi3 {
                    assert!(spec.coeffs[[p, mi]].norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn zero_field_zero_coeffs() {
        let g = grid();
        let f = WeightedField::zeros(g.clone(), 0.0);
        let spec = cylinder_fourier(&f);
        assert!(spec.coeffs.iter().all(|z| z.norm() == 0.0));
        let c = build_contour(2.0, 2.0, 9.0, 4).unwrap();
        let f2 = WeightedField::zeros(g.clone(), 3.0);
        let cs = contour_fourier(&f2, &c).unwrap();
        assert!(cs.coeffs.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn round_trip_inverse_forward() {
        let g = grid();
        let f = WeightedField::sample(g.clone(), 0.0, |x, y| {
            Complex64::from_polar((-0.7 * x[0] * x[0]).exp(), y[0].sin())
        });
        let back = inverse_cylinder_fourier(&cylinder_fourier(&f)).unwrap();
        let err = back.sub(&f).norm_l2() / f.norm_l2();
        assert!(err < 1e-12, "round trip {err}");
    }

    #[test]
    fn contour_transform_gaussian_closed_form() {
        // f = e^{-x^2} e^{i 0 y}: (Ff)(zeta, 0) = (2pi)^-1 sqrt(pi) e^{-zeta^2/4}
        // at the complex node zeta = 1 - i
        let g = grid();
        let f = gauss_mode(&g, 0, 3.0);
        let c = build_contour(1.0, 2.0, 9.0, 6).unwrap();
        let spec = contour_fourier(&f, &c).unwrap();
        let m0 = g.mode_index(&[0]).unwrap();
        // find a node nearest to 1 - i on the middle segment
        let (row, node) = c
            .nodes
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| {
                let da = (a.zeta - Complex64::new(1.0, -1.0)).norm();
                let db = (b.zeta - Complex64::new(1.0, -1.0)).norm();
                da.partial_cmp(&db).unwrap()
            })
            .unwrap();
        let z = node.zeta;
        let expect = std::f64::consts::PI.sqrt() / (2.0 * std::f64::consts::PI)
            * (-z * z / 4.0).exp();
        let got = spec.coeffs[[row, m0]];
        assert!((got - expect).norm() < 1e-10, "got {got}, expect {expect}");
    }

    #[test]
    fn contour_transform_weight_gate() {
        let g = grid();
        let c = build_contour(1.0, 2.0, 9.0, 4).unwrap();
        // boundary case a = eta sqrt(m) exactly must be rejected
        let f = gauss_mode(&g, 0, 2.0);
        assert!(matches!(
            contour_fourier(&f, &c).unwrap_err(),
            Error::WeightTooSmall { .. }
        ));
    }

    #[test]
    fn floquet_gelfand_single_cell_support() {
        // f supported in one period cell: (Uf)(k,x,y) = e^{iky} f(x,y) there;
        // at k = 0 the transform restricted to the cell is f itself.
        let g = grid();
        let bump = |x: &[f64], y: &[f64]| {
            let yc = y[0];
            if yc > 0.0 && yc < 2.0 * std::f64::consts::PI {
                let s = (yc / 2.0).sin();
                Complex64::new((-x[0] * x[0]).exp() * s * s * s * s, 0.0)
            } else {
                Complex64::default()
            }
        };
        let uf = floquet_gelfand(
            |x, y| {
                // wrap y into the fundamental cell to emulate cell support
                let yc = y[0];
                if (0.0..2.0 * std::f64::consts::PI).contains(&yc) {
                    bump(x, &[yc])
                } else {
                    Complex64::default()
                }
            },
            3,
            &[0.0],
            g.clone(),
        );
        let direct = WeightedField::sample(g.clone(), 0.0, bump);
        let err = uf.sub(&direct).norm_l2() / direct.norm_l2();
        assert!(err < 1e-12, "single-cell support: {err}");
    }

    #[test]
    fn floquet_gelfand_two_term_sum() {
        // f nonzero on cells l = 0 and l = 1 only: (Uf)(k) is the sum of two
        // phase-shifted copies; checked against a hand-built expression.
        let g = grid();
        let two_pi = 2.0 * std::f64::consts::PI;
        let cell = |x: &[f64], y: f64| -> Complex64 {
            let s = (y / 2.0).sin();
            Complex64::new((-x[0] * x[0]).exp() * s * s, 0.0)
        };
        let f = |x: &[f64], y: &[f64]| -> Complex64 {
            let yc = y[0];
            if (0.0..two_pi).contains(&yc) {
                cell(x, yc)
            } else if (two_pi..2.0 * two_pi).contains(&yc) {
                cell(x, yc - two_pi).scale(0.5)
            } else {
                Complex64::default()
            }
        };
        let k = 0.5;
        let uf = floquet_gelfand(f, 3, &[k], g.clone());
        let expect = WeightedField::sample(g.clone(), 0.0, |x, y| {
            let phase0 = Complex64::from_polar(1.0, k * y[0]);
            let phase1 = Complex64::from_polar(1.0, k * (y[0] + two_pi));
            phase0 * cell(x, y[0]) + phase1 * cell(x, y[0]).scale(0.5)
        });
        let err = uf.sub(&expect).norm_l2() / expect.norm_l2();
        assert!(err < 1e-12, "two-term sum: {err}");
    }

    #[test]
    fn free_fiber_plane_wave_multiplier() {
        // A(k) on e^{-x^2} e^{iny} acts as (-d2/dx2 + (k+n)^2)
        let g = grid();
        let u = gauss_mode(&g, 2, 0.0);
        let k = [Complex64::new(0.3, 0.0)];
        let au = apply_free_fiber(&k, &u);
        let mi = g.mode_index(&[2]).unwrap();
        for (j, x) in g.x_axis().iter().enumerate() {
            if !g.interior(j) {
                continue;
            }
            let lap = (-x * x).exp() * (4.0 * x * x - 2.0);
            let expect = -lap + (0.3 + 2.0) * (0.3 + 2.0) * (-x * x).exp();
            assert!(
                (au.values[[mi, j]] - Complex64::new(expect, 0.0)).norm() < 1e-9,
                "x = {x}"
            );
        }
    }

    #[test]
    fn fiber_operator_discrete_self_adjointness() {
        let g = grid();
        let mc = ModelCoefficients::new(
            CoefficientFamily::MetricBump { amplitude: 1.0, width: 1.0 },
            4.0,
            g.clone(),
        )
        .unwrap();
        let u = WeightedField::sample(g.clone(), 0.0, |x, y| {
            Complex64::from_polar((-x[0] * x[0]).exp(), y[0].cos() + 0.2 * x[0])
        });
        let v = WeightedField::sample(g.clone(), 0.0, |x, y| {
            Complex64::from_polar((-0.8 * x[0] * x[0]).exp(), (2.0 * y[0]).sin())
        });
        let k = [Complex64::new(0.4, 0.0)];
        let hu = apply_fiber_operator(Some(&mc), &k, &u);
        let hv = apply_fiber_operator(Some(&mc), &k, &v);
        let lhs = hu.inner(&v);
        let rhs = u.inner(&hv);
        assert!(
            (lhs - rhs).norm() < 1e-10 * (lhs.norm() + 1.0),
            "<Hu,v> = {lhs}, <u,Hv> = {rhs}"
        );
    }
}
