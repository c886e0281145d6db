//! Small dense complex linear algebra: pivoted LU (determinant + solve)
//! and a weighted power iteration for operator-norm estimates.
//!
//! The Nystrom blocks this crate factorizes are a few hundred rows at desk
//! scale, so a straightforward O(n^3) LU with partial pivoting is adequate
//! and keeps the build free of a LAPACK link.

use ndarray::Array2;
use num_complex::Complex64;

pub struct LuFactors {
    lu: Array2<Complex64>,
    piv: Vec<usize>,
    /// parity of the permutation: +1.0 or -1.0
    sign: f64,
}

/// Factorize `a` in place (copy) with partial pivoting. Never fails outright;
/// a singular matrix shows up as a (near-)zero pivot in `log_det`.
pub fn lu_factor(a: &Array2<Complex64>) -> LuFactors {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "lu_factor needs a square matrix");
    let mut lu = a.clone();
    let mut piv = Vec::with_capacity(n);
    let mut sign = 1.0;
    for col in 0..n {
        // pivot search
        let mut p = col;
        let mut best = lu[[col, col]].norm_sqr();
        for r in (col + 1)..n {
            let v = lu[[r, col]].norm_sqr();
            if v > best {
                best = v;
                p = r;
            }
        }
        if p != col {
            sign = -sign;
            for c in 0..n {
                let tmp = lu[[col, c]];
                lu[[col, c]] = lu[[p, c]];
                lu[[p, c]] = tmp;
            }
        }
        piv.push(p);
        let d = lu[[col, col]];
        if d == Complex64::new(0.0, 0.0) {
            continue; // exactly singular; leave zero column
        }
        for r in (col + 1)..n {
            let m = lu[[r, col]] / d;
            lu[[r, col]] = m;
            if m != Complex64::new(0.0, 0.0) {
                for c in (col + 1)..n {
                    let sub = m * lu[[col, c]];
                    lu[[r, c]] -= sub;
                }
            }
        }
    }
    LuFactors { lu, piv, sign }
}

impl LuFactors {
    pub fn n(&self) -> usize {
        self.lu.nrows()
    }

    /// log|det| and arg(det); the determinant itself is exp(log_abs)*e^{i arg},
    /// overflow-safe for large blocks.
    pub fn log_det(&self) -> (f64, f64) {
        let mut log_abs = 0.0;
        let mut arg = 0.0;
        for i in 0..self.n() {
            let d = self.lu[[i, i]];
            log_abs += d.norm().ln();
            arg += d.arg();
        }
        if self.sign < 0.0 {
            arg += std::f64::consts::PI;
        }
        (log_abs, arg)
    }

    pub fn det(&self) -> Complex64 {
        let (la, arg) = self.log_det();
        Complex64::from_polar(la.exp(), arg)
    }

    /// Solve A x = b in place.
    pub fn solve(&self, b: &mut [Complex64]) {
        let n = self.n();
        assert_eq!(b.len(), n);
        for i in 0..n {
            b.swap(i, self.piv[i]);
            let bi = b[i];
            if bi != Complex64::new(0.0, 0.0) {
                for r in (i + 1)..n {
                    let sub = self.lu[[r, i]] * bi;
                    b[r] -= sub;
                }
            }
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for c in (i + 1)..n {
                s -= self.lu[[i, c]] * b[c];
            }
            b[i] = s / self.lu[[i, i]];
        }
    }
}

/// Largest generalized singular value of a linear map `apply` between weighted
/// spaces, estimated by power iteration on T^H T. `apply_adj` must implement
/// the adjoint with respect to the *plain* Euclidean pairing; the weights
/// (in-metric `win`, out-metric `wout`, both as diagonal squared-weight
/// vectors) are folded in here. Returns the norm estimate.
pub fn weighted_operator_norm<F, G>(
    dim: usize,
    iters: usize,
    rel_tol: f64,
    seed: u64,
    win: &[f64],
    wout: &[f64],
    apply: F,
    apply_adj: G,
) -> f64
where
    F: Fn(&[Complex64]) -> Vec<Complex64>,
    G: Fn(&[Complex64]) -> Vec<Complex64>,
{
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<Complex64> = (0..dim)
        .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
        .collect();
    let in_norm = |u: &[Complex64]| -> f64 {
        u.iter()
            .zip(win)
            .map(|(z, w)| z.norm_sqr() * w)
            .sum::<f64>()
            .sqrt()
    };
    let mut est = 0.0;
    let nv = in_norm(&v);
    for z in v.iter_mut() {
        *z /= nv;
    }
    for _ in 0..iters {
        // u = T v; norm in out-metric
        let u = apply(&v);
        let un2: f64 = u.iter().zip(wout).map(|(z, w)| z.norm_sqr() * w).sum();
        let new_est = un2.sqrt();
        // v <- Win^{-1} T^H (Wout u), renormalized in in-metric
        let wu: Vec<Complex64> = u
            .iter()
            .zip(wout)
            .map(|(z, w)| z * Complex64::new(*w, 0.0))
            .collect();
        let mut tv = apply_adj(&wu);
        for (z, w) in tv.iter_mut().zip(win) {
            *z /= Complex64::new(*w, 0.0);
        }
        let nv = in_norm(&tv);
        if nv == 0.0 {
            return 0.0;
        }
        for z in tv.iter_mut() {
            *z /= nv;
        }
        v = tv;
        if est > 0.0 && ((new_est - est) / est).abs() < rel_tol {
            return new_est;
        }
        est = new_est;
    }
    est
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn lu_det_and_solve_2x2() {
        let a = array![[c(2.0, 0.0), c(1.0, 1.0)], [c(0.0, -1.0), c(3.0, 0.0)]];
        let f = lu_factor(&a);
        // det = 2*3 - (1+i)(-i) = 6 - ( -i - i^2 ) = 6 - (1 - i) = 5 + i
        let d = f.det();
        assert!((d - c(5.0, 1.0)).norm() < 1e-12, "det = {d}");
        let mut b = vec![c(1.0, 0.0), c(0.0, 2.0)];
        f.solve(&mut b);
        // check A x = b
        let r0 = a[[0, 0]] * b[0] + a[[0, 1]] * b[1] - c(1.0, 0.0);
        let r1 = a[[1, 0]] * b[0] + a[[1, 1]] * b[1] - c(0.0, 2.0);
        assert!(r0.norm() < 1e-12 && r1.norm() < 1e-12);
    }

    #[test]
    fn lu_det_identity_large() {
        let n = 40;
        let mut a = Array2::from_elem((n, n), c(0.0, 0.0));
        for i in 0..n {
            a[[i, i]] = c(1.0, 0.0);
        }
        let f = lu_factor(&a);
        assert!((f.det() - c(1.0, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn power_iteration_diagonal() {
        // T = diag(3, 1, 0.5) in plain metric: norm 3
        let t = [3.0, 1.0, 0.5];
        let w = [1.0, 1.0, 1.0];
        let apply = |v: &[Complex64]| -> Vec<Complex64> {
            v.iter().zip(t).map(|(z, d)| z * d).collect()
        };
        let n = weighted_operator_norm(3, 60, 1e-10, 7, &w, &w, apply, apply);
        assert!((n - 3.0).abs() < 1e-6, "norm = {n}");
    }
}
