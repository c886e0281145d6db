//! Nystrom discretization of the Lippmann-Schwinger operator.
//!
//! The assembled system realizes I + R_A(k,lambda) W(lambda) on the active
//! x-range (the post-resolvent representation; its determinant and solves
//! coincide with those of I + W R_A by similarity). Entries are conjugated by
//! Theta = diag(e^{-a<x>}) so both index directions decay and the
//! factorization stays well conditioned. Quadrature: corrected trapezoid
//! kernels (see free_resolvent::kernels) plus Euler-Maclaurin edge weights at
//! declared jumps of the potential.

use std::ops::Range;
use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::free_resolvent::kernels::{branch_v, convolve_corrected, kernel_matrix, ModeKernel};
use crate::geometry::coefficients::ModelCoefficients;
use crate::geometry::contour::Contour;
use crate::geometry::field::WeightedField;
use crate::geometry::grid::CylinderGrid;
use crate::geometry::window::SpectralWindow;
use crate::linalg::{lu_factor, LuFactors};
use crate::perturbation::potential::{effective_potential, EffectivePotential};

const ACTIVE_CUT: f64 = 1e-14;
/// 5-point centered first-derivative stencil (offset, coefficient/h)
const D5: [(isize, f64); 4] = [(-2, 1.0 / 12.0), (-1, -8.0 / 12.0), (1, 8.0 / 12.0), (2, -1.0 / 12.0)];

pub struct NystromSystem {
    pub window: SpectralWindow,
    pub grid: Arc<CylinderGrid>,
    pub weight_a: f64,
    pub k: Vec<Complex64>,
    pub lambda: Complex64,
    pub w: EffectivePotential,
    /// contiguous active x-range; empty when W vanishes on the grid
    pub active: Range<usize>,
    /// determinant mode set: channels not provably invertible by the
    /// Neumann bound ||W R^(n)|| <= W_inf / ((k0+n)^2 - lambda_max) < 1/2
    pub det_modes: Vec<Vec<i64>>,
    y_independent: bool,
    kernels: Vec<ModeKernel>,
    /// per-mode product blocks B_n = Theta (K_n W + edge) Theta^{-1} on the
    /// active range (y-independent path)
    blocks: Vec<Array2<Complex64>>,
    factors: Vec<Option<LuFactors>>,
    /// coupled block and factorization for y-dependent W (all grid modes)
    coupled: Option<(Array2<Complex64>, LuFactors)>,
    /// coupled determinant block (det modes only, y-dependent path)
    coupled_det: Option<Array2<Complex64>>,
    theta: Vec<f64>,
    w_active: Array2<Complex64>, // [mode grid? no: [x_in_active, y_pt]] not needed; keep per-x sup
    jumps: Vec<(usize, f64)>,   // (grid index of jump node, jump value)
}

fn det_mode_set(
    window: &SpectralWindow,
    grid: &CylinderGrid,
    w_inf: f64,
) -> Result<Vec<Vec<i64>>> {
    if w_inf == 0.0 {
        // no potential, no Lippmann-Schwinger blocks
        return Ok(Vec::new());
    }
    let lam_max = window.lambda0 + 2.0 * window.delta;
    let cut = lam_max + 2.0 * w_inf + 1.0;
    let mut out = Vec::new();
    let mut max_comp = 0i64;
    for n in grid.modes() {
        let sq: f64 = window
            .k0
            .iter()
            .zip(&n)
            .map(|(ki, ni)| (ki + *ni as f64).powi(2))
            .sum();
        if sq < cut {
            max_comp = max_comp.max(n.iter().map(|t| t.abs()).max().unwrap_or(0));
            out.push(n);
        }
    }
    if max_comp >= grid.n_y as i64 {
        return Err(Error::Validation(format!(
            "mode cutoff N_y = {} too small: determinant needs all |n_i| <= {max_comp}",
            grid.n_y
        )));
    }
    Ok(out)
}

impl NystromSystem {
    pub fn n_active(&self) -> usize {
        self.active.len()
    }

    pub fn det_dof_count(&self) -> usize {
        self.det_modes.len() * self.active.len()
    }

    /// log of the determinant of the reduced Lippmann-Schwinger block
    /// (modulus, argument).
    pub fn log_det(&self) -> (f64, f64) {
        if self.active.is_empty() {
            return (0.0, 0.0);
        }
        if let Some(cd) = &self.coupled_det {
            return lu_factor(cd).log_det();
        }
        let mut la = 0.0;
        let mut arg = 0.0;
        for n in &self.det_modes {
            let mi = self.grid.mode_index(n).unwrap();
            let (l, a) = lu_factor(&self.blocks[mi]).log_det();
            la += l;
            arg += a;
        }
        (la, arg)
    }

    pub fn det(&self) -> Complex64 {
        let (la, arg) = self.log_det();
        Complex64::from_polar(la.exp(), arg)
    }

    /// Dense materialization of the determinant block (det modes x active),
    /// mode-major. For inspection and tests.
    pub fn to_dense(&self) -> Array2<Complex64> {
        let na = self.active.len();
        let nm = self.det_modes.len();
        let dim = na * nm;
        let mut m = Array2::from_elem((dim, dim), Complex64::default());
        for i in 0..dim {
            m[[i, i]] = Complex64::new(1.0, 0.0);
        }
        if self.active.is_empty() {
            return m;
        }
        if let Some(cd) = &self.coupled_det {
            return cd.clone();
        }
        for (b, n) in self.det_modes.iter().enumerate() {
            let mi = self.grid.mode_index(n).unwrap();
            let blk = &self.blocks[mi];
            for i in 0..na {
                for j in 0..na {
                    m[[b * na + i, b * na + j]] = blk[[i, j]];
                }
            }
        }
        m
    }

    /// Kernel application of the continued free resolvent to a full-grid
    /// field (all modes), consistent with the assembled blocks.
    pub fn apply_kernels(&self, f: &WeightedField) -> WeightedField {
        let g = &self.grid;
        let h = g.dx();
        let mut out = WeightedField::zeros(self.grid.clone(), -self.weight_a);
        for mi in 0..g.n_modes() {
            let frow: Vec<Complex64> = (0..g.n_x).map(|j| f.values[[mi, j]]).collect();
            let row = convolve_corrected(&self.kernels[mi], h, g.n_x, &frow);
            for (j, v) in row.into_iter().enumerate() {
                out.values[[mi, j]] = v;
            }
        }
        out
    }

    /// (R W u)(x_i) over the full grid for one mode, using the active-range
    /// data plus the edge corrections (y-independent path).
    fn apply_rw_full(&self, mi: usize, u_active: &[Complex64]) -> Vec<Complex64> {
        let g = &self.grid;
        let h = g.dx();
        let xs = g.x_axis();
        let kern = &self.kernels[mi];
        let mut out = vec![Complex64::default(); g.n_x];
        let lo = self.active.start;
        // W u on the active range
        let wu: Vec<Complex64> = u_active
            .iter()
            .enumerate()
            .map(|(t, u)| self.w_active[[t, 0]] * u)
            .collect();
        for i in 0..g.n_x {
            let mut acc = Complex64::default();
            for (t, w) in wu.iter().enumerate() {
                acc += kern.eval(xs[i] - xs[lo + t]) * w * h;
            }
            out[i] = acc;
        }
        // kink stencil acting on (W u) extended by zero
        let st = kern.stencil(h);
        for i in 0..g.n_x {
            let mut acc = Complex64::default();
            for (o, a) in st.iter().enumerate() {
                let off = o + 1;
                if i >= off {
                    if let Some(t) = (i - off).checked_sub(lo) {
                        if t < wu.len() {
                            acc += a * wu[t];
                        }
                    }
                }
                let up = i + off;
                if let Some(t) = up.checked_sub(lo) {
                    if t < wu.len() {
                        acc += a * wu[t];
                    }
                }
            }
            out[i] += acc;
        }
        // edge corrections
        for (js, dv) in &self.jumps {
            let s = xs[*js];
            for i in 0..g.n_x {
                let ck = kern.eval(xs[i] - s);
                let ckp = kern.deriv(xs[i] - s);
                // (h^2/12) dV [ -K'(x_i - s) u(s) + K(x_i - s) u'(s) ]
                let mut corr = Complex64::default();
                if let Some(t) = js.checked_sub(lo) {
                    if t < u_active.len() {
                        corr -= ckp * u_active[t];
                    }
                }
                for (off, c) in D5 {
                    let jn = (*js as isize + off) as usize;
                    if let Some(t) = jn.checked_sub(lo) {
                        if t < u_active.len() {
                            corr += ck * u_active[t] * (c / h);
                        }
                    }
                }
                out[i] += corr * (h * h / 12.0 * dv);
            }
        }
        out
    }

    /// Solve u + R W u = R v for u over the full grid (the inner field of the
    /// perturbed resolvent: u = R_A (I + W R_A)^{-1} v).
    pub fn solve_inner(&self, v: &WeightedField) -> Result<WeightedField> {
        let g = &self.grid;
        let rv = self.apply_kernels(v);
        if self.active.is_empty() {
            return Ok(rv);
        }
        let na = self.active.len();
        let lo = self.active.start;
        let mut out = rv.clone();
        if self.y_independent {
            for mi in 0..g.n_modes() {
                let fac = self.factors[mi]
                    .as_ref()
                    .ok_or_else(|| Error::Validation("missing factorization".into()))?;
                // theta coordinates on the active range
                let mut rhs: Vec<Complex64> = (0..na)
                    .map(|t| rv.values[[mi, lo + t]] * self.theta[t])
                    .collect();
                fac.solve(&mut rhs);
                let u_active: Vec<Complex64> =
                    rhs.iter().enumerate().map(|(t, z)| z / self.theta[t]).collect();
                let rwu = self.apply_rw_full(mi, &u_active);
                for j in 0..g.n_x {
                    out.values[[mi, j]] = rv.values[[mi, j]] - rwu[j];
                }
                // enforce consistency on the active range
                for (t, u) in u_active.iter().enumerate() {
                    out.values[[mi, lo + t]] = *u;
                }
            }
        } else {
            let (_, fac) = self
                .coupled
                .as_ref()
                .ok_or_else(|| Error::Validation("missing coupled factorization".into()))?;
            let nm = g.n_modes();
            let mut rhs = vec![Complex64::default(); nm * na];
            for mi in 0..nm {
                for t in 0..na {
                    rhs[mi * na + t] = rv.values[[mi, lo + t]] * self.theta[t];
                }
            }
            fac.solve(&mut rhs);
            let u_active: Vec<Complex64> = rhs
                .iter()
                .enumerate()
                .map(|(i, z)| z / self.theta[i % na])
                .collect();
            // full-grid extension: u = Rv - R W u with the mode-coupled W
            let (offsets, table) = self.w.mode_table(g);
            let modes = g.modes();
            let h = g.dx();
            let xs = g.x_axis();
            // wu[mode][active index] = sum_q W_q u_{mode-q}
            let mut wu = vec![vec![Complex64::default(); na]; nm];
            for (mi, n) in modes.iter().enumerate() {
                for (mj, npr) in modes.iter().enumerate() {
                    let q: Vec<i64> = n.iter().zip(npr).map(|(a, b)| a - b).collect();
                    let Some(qi) = offsets.iter().position(|o| o == &q) else {
                        continue;
                    };
                    for t in 0..na {
                        wu[mi][t] += table[[lo + t, qi]] * u_active[mj * na + t];
                    }
                }
            }
            for (mi, wrow) in wu.iter().enumerate() {
                let kern = &self.kernels[mi];
                for i in 0..g.n_x {
                    let mut acc = Complex64::default();
                    for (t, w) in wrow.iter().enumerate() {
                        acc += kern.eval(xs[i] - xs[lo + t]) * w * h;
                    }
                    out.values[[mi, i]] = rv.values[[mi, i]] - acc;
                }
                let st = kern.stencil(h);
                for i in 0..g.n_x {
                    let mut acc = Complex64::default();
                    for (o, a) in st.iter().enumerate() {
                        let off = o + 1;
                        if i >= off {
                            if let Some(t) = (i - off).checked_sub(lo) {
                                if t < na {
                                    acc += a * wrow[t];
                                }
                            }
                        }
                        if let Some(t) = (i + off).checked_sub(lo) {
                            if t < na {
                                acc += a * wrow[t];
                            }
                        }
                    }
                    out.values[[mi, i]] -= acc;
                }
                for t in 0..na {
                    out.values[[mi, lo + t]] = u_active[mi * na + t];
                }
            }
        }
        out.weight_a = -self.weight_a;
        Ok(out)
    }

    /// Residual of the inner solve against the full-grid kernel application:
    /// || u - R(v - W u) || / || v ||, the honest measure of the active-range
    /// reduction and factorization backward error.
    pub fn inner_solve_residual(&self, v: &WeightedField, u: &WeightedField) -> f64 {
        let wu = self.w.multiply(u);
        let rhs = v.sub(&wu);
        let ru = self.apply_kernels(&rhs);
        u.sub(&ru).norm_weighted(-self.weight_a) / v.norm_weighted(self.weight_a).max(1e-300)
    }
}

/// Assemble the Nystrom system for I + W(lambda) R_A(k, lambda) on the grid.
/// Requires the coefficient decay certificate b > 2a.
pub fn assemble_lippmann_schwinger(
    window: &SpectralWindow,
    contour: Option<&Contour>,
    coeffs: &ModelCoefficients,
    k: &[Complex64],
    lambda: Complex64,
    grid: &Arc<CylinderGrid>,
    weight_a: f64,
) -> Result<NystromSystem> {
    assemble_inner(window, contour, coeffs, k, lambda, grid, weight_a, false)
}

/// Assembly variant that only prepares the determinant blocks (skips the
/// solve factorizations of channels outside the determinant set).
pub fn assemble_for_determinant(
    window: &SpectralWindow,
    contour: Option<&Contour>,
    coeffs: &ModelCoefficients,
    k: &[Complex64],
    lambda: Complex64,
    grid: &Arc<CylinderGrid>,
    weight_a: f64,
) -> Result<NystromSystem> {
    assemble_inner(window, contour, coeffs, k, lambda, grid, weight_a, true)
}

#[allow(clippy::too_many_arguments)]
fn assemble_inner(
    window: &SpectralWindow,
    contour: Option<&Contour>,
    coeffs: &ModelCoefficients,
    k: &[Complex64],
    lambda: Complex64,
    grid: &Arc<CylinderGrid>,
    weight_a: f64,
    det_only: bool,
) -> Result<NystromSystem> {
    if grid.m != 1 {
        return Err(Error::Unsupported(
            "Nystrom assembly is implemented for m = 1".into(),
        ));
    }
    if !window.modes_open.is_empty() && contour.is_none() {
        return Err(Error::Validation(
            "open channels present: contour required for assembly".into(),
        ));
    }
    let w = effective_potential(coeffs, lambda, grid);
    let w_inf = w.w_infinity();
    if w_inf > 0.0 && weight_a > 0.0 && coeffs.decay_b <= 2.0 * weight_a {
        return Err(Error::DecayTooSlow { b: coeffs.decay_b, two_a: 2.0 * weight_a });
    }
    let det_modes = det_mode_set(window, grid, w_inf)?;
    let eta_eff = contour.map(|c| c.eta).unwrap_or(0.0);

    // kernels per grid mode
    let modes = grid.modes();
    let mut kernels = Vec::with_capacity(modes.len());
    for n in &modes {
        let shift: Complex64 = k
            .iter()
            .zip(n)
            .map(|(ki, ni)| {
                let s = ki + Complex64::new(*ni as f64, 0.0);
                s * s
            })
            .sum();
        let v = branch_v(shift, lambda, window.is_open(n));
        if v.norm() < 1e-12 {
            return Err(Error::DenominatorUnderflow { mode: n.clone(), value: v.norm() });
        }
        kernels.push(ModeKernel::new(v));
    }

    // active x-range from the weighted-row indicator
    let sup = w.x_profile_sup();
    let mut inds: Vec<f64> = Vec::with_capacity(grid.n_x);
    let mut max_ind: f64 = 0.0;
    for (j, s) in sup.iter().enumerate() {
        let ind = s * ((weight_a + eta_eff) * grid.x_bracket(j)).exp();
        max_ind = max_ind.max(ind);
        inds.push(ind);
    }
    let xs = grid.x_axis();
    let h = grid.dx();
    let mut jumps: Vec<(usize, f64)> = Vec::new();
    for (s, dv) in coeffs.v_jumps() {
        let pos = (s + grid.l) / h;
        if (pos - pos.round()).abs() > 1e-9 {
            return Err(Error::Validation(format!(
                "potential jump at x = {s} does not lie on a grid node (L = {}, N_x = {})",
                grid.l, grid.n_x
            )));
        }
        jumps.push((pos.round() as usize, dv));
    }
    let mut lo = usize::MAX;
    let mut hi = 0usize;
    if max_ind > 0.0 {
        for (j, ind) in inds.iter().enumerate() {
            if *ind >= ACTIVE_CUT * max_ind {
                lo = lo.min(j);
                hi = hi.max(j);
            }
        }
        for (js, _) in &jumps {
            lo = lo.min(*js);
            hi = hi.max(*js);
        }
        lo = lo.saturating_sub(3);
        hi = (hi + 3).min(grid.n_x - 1);
    }
    let active = if max_ind == 0.0 { 0..0 } else { lo..(hi + 1) };
    let na = active.len();

    let theta: Vec<f64> = active
        .clone()
        .map(|j| (-weight_a * grid.x_bracket(j)).exp())
        .collect();
    let y_independent = w.is_y_independent(1e-13 * (1.0 + w_inf));

    // W on the active range (y-independent column; kept 2-D for symmetry)
    let mut w_active = Array2::from_elem((na, 1), Complex64::default());
    for (t, j) in active.clone().enumerate() {
        w_active[[t, 0]] = w.values[[j, 0]];
    }

    let mut blocks: Vec<Array2<Complex64>> = Vec::new();
    let mut factors: Vec<Option<LuFactors>> = Vec::new();
    let mut coupled = None;
    let mut coupled_det = None;

    if na > 0 && y_independent {
        let xs_active: Vec<f64> = active.clone().map(|j| xs[j]).collect();
        for (mi, n) in modes.iter().enumerate() {
            let kern = &kernels[mi];
            let km = kernel_matrix(kern, h, &xs_active);
            // B = Theta (K W + edge) Theta^{-1}
            let mut b = Array2::from_elem((na, na), Complex64::default());
            for i in 0..na {
                for j in 0..na {
                    b[[i, j]] = km[[i, j]] * w_active[[j, 0]] * (theta[i] / theta[j]);
                }
            }
            for (js, dv) in &jumps {
                let t_s = js - active.start;
                let s = xs[*js];
                for i in 0..na {
                    let ck = kern.eval(xs_active[i] - s);
                    let ckp = kern.deriv(xs_active[i] - s);
                    let scale = h * h / 12.0 * dv;
                    b[[i, t_s]] += -ckp * scale * (theta[i] / theta[t_s]);
                    for (off, c) in D5 {
                        let t = (t_s as isize + off) as usize;
                        if t < na {
                            b[[i, t]] += ck * (c / h) * scale * (theta[i] / theta[t]);
                        }
                    }
                }
            }
            for i in 0..na {
                b[[i, i]] += Complex64::new(1.0, 0.0);
            }
            let need_factor = !det_only || det_modes.iter().any(|dm| dm == n);
            factors.push(if need_factor { Some(lu_factor(&b)) } else { None });
            blocks.push(b);
        }
    } else if na > 0 {
        // coupled assembly over all grid modes
        if !jumps.is_empty() {
            return Err(Error::Unsupported(
                "edge-corrected quadrature requires a y-independent potential".into(),
            ));
        }
        let xs_active: Vec<f64> = active.clone().map(|j| xs[j]).collect();
        let (offsets, table) = w.mode_table(grid);
        let nm = modes.len();
        let dim = nm * na;
        let mut m = Array2::from_elem((dim, dim), Complex64::default());
        for (mi, _n) in modes.iter().enumerate() {
            let km = kernel_matrix(&kernels[mi], h, &xs_active);
            for (mj, npr) in modes.iter().enumerate() {
                let q: Vec<i64> = modes[mi].iter().zip(npr).map(|(a, b)| a - b).collect();
                let Some(qi) = offsets.iter().position(|o| o == &q) else {
                    continue;
                };
                for i in 0..na {
                    for j in 0..na {
                        m[[mi * na + i, mj * na + j]] +=
                            km[[i, j]] * table[[active.start + j, qi]] * (theta[i] / theta[j]);
                    }
                }
            }
        }
        // determinant sub-block before adding the identity
        let det_idx: Vec<usize> = det_modes
            .iter()
            .map(|n| grid.mode_index(n).unwrap())
            .collect();
        let ddim = det_idx.len() * na;
        let mut dm = Array2::from_elem((ddim, ddim), Complex64::default());
        for (bi, mi) in det_idx.iter().enumerate() {
            for (bj, mj) in det_idx.iter().enumerate() {
                for i in 0..na {
                    for j in 0..na {
                        dm[[bi * na + i, bj * na + j]] = m[[mi * na + i, mj * na + j]];
                    }
                }
            }
        }
        for i in 0..dim {
            m[[i, i]] += Complex64::new(1.0, 0.0);
        }
        for i in 0..ddim {
            dm[[i, i]] += Complex64::new(1.0, 0.0);
        }
        let fac = lu_factor(&m);
        coupled = Some((m, fac));
        coupled_det = Some(dm);
    }

    Ok(NystromSystem {
        window: window.clone(),
        grid: grid.clone(),
        weight_a,
        k: k.to_vec(),
        lambda,
        w,
        active,
        det_modes,
        y_independent,
        kernels,
        blocks,
        factors,
        coupled,
        coupled_det,
        theta,
        w_active,
        jumps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::coefficients::CoefficientFamily;
    use crate::geometry::contour::{build_contour, default_eta, default_xi};
    use crate::geometry::window::build_window;

    fn setup(
        v0: f64,
        lambda0: f64,
    ) -> (Arc<CylinderGrid>, SpectralWindow, Option<Contour>, ModelCoefficients) {
        let grid = Arc::new(CylinderGrid::new(1, 1, 16.0, 128, 4).unwrap());
        let w = build_window(&[0.3], lambda0, &grid).unwrap();
        let contour = if lambda0 > 0.0 {
            let eta = default_eta(lambda0);
            Some(build_contour(lambda0, eta, default_xi(eta, lambda0), 6).unwrap())
        } else {
            None
        };
        let mc = ModelCoefficients::new(
            CoefficientFamily::GaussianWell { v0, width: 1.0 },
            8.0,
            grid.clone(),
        )
        .unwrap();
        (grid, w, contour, mc)
    }

    #[test]
    fn identity_for_zero_potential() {
        let (grid, w, contour, mc) = setup(0.0, 2.0);
        let a = 1.25 * contour.as_ref().unwrap().eta;
        let sys = assemble_lippmann_schwinger(
            &w,
            contour.as_ref(),
            &mc,
            &[Complex64::new(0.3, 0.0)],
            Complex64::new(2.0, 0.2),
            &grid,
            a,
        )
        .unwrap();
        assert!(sys.active.is_empty());
        let dense = sys.to_dense();
        for i in 0..dense.nrows() {
            for j in 0..dense.ncols() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_eq!(dense[[i, j]], Complex64::new(expect, 0.0));
            }
        }
        assert!((sys.det() - Complex64::new(1.0, 0.0)).norm() == 0.0);
    }

    #[test]
    fn decay_gate_enforced() {
        let (grid, w, contour, mc) = setup(1.0, 2.0);
        // a chosen so 2a >= b
        let err = assemble_lippmann_schwinger(
            &w,
            contour.as_ref(),
            &mc,
            &[Complex64::new(0.3, 0.0)],
            Complex64::new(2.0, 0.2),
            &grid,
            4.5,
        )
        .err().unwrap();
        assert!(matches!(err, Error::DecayTooSlow { .. }));
    }

    #[test]
    fn entry_decay_follows_certificate() {
        let (grid, w, contour, mc) = setup(1.0, 2.0);
        let a = 1.25 * contour.as_ref().unwrap().eta;
        let sys = assemble_lippmann_schwinger(
            &w,
            contour.as_ref(),
            &mc,
            &[Complex64::new(0.3, 0.0)],
            Complex64::new(2.0, 0.2),
            &grid,
            a,
        )
        .unwrap();
        // column sups of (M - I) decay in the column node like the certificate
        let dense = sys.to_dense();
        let na = sys.n_active();
        let b_rate = mc.decay_b - 2.0 * a;
        assert!(b_rate > 0.0);
        let mut worst_ratio: f64 = 0.0;
        let mode0 = sys
            .det_modes
            .iter()
            .position(|n| n.iter().all(|t| *t == 0))
            .unwrap();
        for j in 0..na {
            let xj = grid.x_axis()[sys.active.start + j];
            let mut sup: f64 = 0.0;
            for i in 0..na {
                let mut v = dense[[mode0 * na + i, mode0 * na + j]];
                if i == j {
                    v -= Complex64::new(1.0, 0.0);
                }
                sup = sup.max(v.norm());
            }
            let envelope = (-b_rate * (xj * xj + 1.0).sqrt()).exp();
            if envelope > 1e-280 {
                worst_ratio = worst_ratio.max(sup / envelope);
            }
        }
        // finite constant: every column obeys sup <= C e^{-(b-2a)<x>}
        assert!(worst_ratio.is_finite() && worst_ratio > 0.0);
        // and the far columns are genuinely small
        let far = (0..na)
            .filter(|j| grid.x_axis()[sys.active.start + j].abs() > 4.0)
            .map(|j| {
                (0..na)
                    .map(|i| {
                        let mut v = dense[[mode0 * na + i, mode0 * na + j]];
                        if i == j {
                            v -= Complex64::new(1.0, 0.0);
                        }
                        v.norm()
                    })
                    .fold(0.0f64, f64::max)
            })
            .fold(0.0f64, f64::max);
        assert!(far < 1e-4, "far-column sup {far}");
    }

    #[test]
    fn solve_consistency_full_grid() {
        let (grid, w, contour, mc) = setup(1.5, 2.0);
        let a = 1.25 * contour.as_ref().unwrap().eta;
        let k = [Complex64::new(0.3, 0.0)];
        let lam = Complex64::new(2.0, 0.4);
        let sys =
            assemble_lippmann_schwinger(&w, contour.as_ref(), &mc, &k, lam, &grid, a).unwrap();
        let v = WeightedField::from_mode_profile(grid.clone(), a, &[0], |x| {
            Complex64::new((-x[0] * x[0]).exp(), 0.0)
        })
        .unwrap();
        let u = sys.solve_inner(&v).unwrap();
        let r = sys.inner_solve_residual(&v, &u);
        assert!(r < 1e-10, "inner solve residual {r}");
    }

    #[test]
    fn neumann_series_agreement_weak_coupling() {
        let (grid, w, contour, mc) = setup(0.05, 2.0);
        let a = 1.25 * contour.as_ref().unwrap().eta;
        let k = [Complex64::new(0.3, 0.0)];
        let lam = Complex64::new(2.0, 0.3);
        let sys =
            assemble_lippmann_schwinger(&w, contour.as_ref(), &mc, &k, lam, &grid, a).unwrap();
        let v = WeightedField::from_mode_profile(grid.clone(), a, &[0], |x| {
            Complex64::new((-x[0] * x[0]).exp(), 0.0)
        })
        .unwrap();
        let u = sys.solve_inner(&v).unwrap();
        // Neumann: u = sum_{j=0..10} (-RW)^j R v
        let mut term = sys.apply_kernels(&v);
        let mut acc = term.clone();
        let mut rho: f64 = 0.0;
        for _ in 0..10 {
            let wterm = sys.w.multiply(&term);
            term = sys.apply_kernels(&wterm).scaled(Complex64::new(-1.0, 0.0));
            rho = rho.max(term.norm_weighted(-a));
            acc = acc.add(&term);
        }
        let diff = u.sub(&acc).norm_weighted(-a) / u.norm_weighted(-a);
        assert!(diff < 1e-8, "neumann disagreement {diff}");
    }
}
