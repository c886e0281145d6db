//! Per-channel 1-D convolution kernels of the continued resolvent and the
//! corrected trapezoid quadrature shared by the field-apply and Nystrom paths.
//!
//! For one y-mode n the frequency integral over the deformed path equals
//! (i/2v) e^{i v |x - x'|} with v the continued branch of sqrt(lambda-(k+n)^2)
//! (shift of the real-axis formula, then analytic continuation in lambda; the
//! equality is unit-tested against contour quadrature). The |x-x'| kink makes
//! plain trapezoid O(h^2); a zero-diagonal 7-point stencil restores the
//! Euler-Maclaurin corrections -(h^2/12) f + (h^4/720)(3 f'' - v^2 f) without
//! perturbing the matrix trace.

use ndarray::Array2;
use num_complex::Complex64;

/// (k+n)^2, analytic in k (no conjugation).
pub fn mode_shift_sq(k: &[Complex64], n: &[i64]) -> Complex64 {
    k.iter()
        .zip(n)
        .map(|(ki, ni)| {
            let s = ki + Complex64::new(*ni as f64, 0.0);
            s * s
        })
        .sum()
}

/// Continued branch of v = sqrt(lambda - (k+n)^2):
/// - open channels (Re(lambda - shift) > 0 on the window): principal sqrt,
///   analytic across the real lambda axis (second sheet below);
/// - closed channels: i * principal sqrt(shift - lambda), analytic along the
///   dilated family and matching the upper-half-plane branch.
/// Both conventions agree with Im v > 0 for Im lambda > 0, real k.
pub fn branch_v(shift_sq: Complex64, lambda: Complex64, open: bool) -> Complex64 {
    if open {
        (lambda - shift_sq).sqrt()
    } else {
        Complex64::new(0.0, 1.0) * (shift_sq - lambda).sqrt()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ModeKernel {
    pub v: Complex64,
}

impl ModeKernel {
    pub fn new(v: Complex64) -> Self {
        ModeKernel { v }
    }

    /// K(delta) = (i / 2v) e^{i v |delta|}
    pub fn eval(&self, delta: f64) -> Complex64 {
        Complex64::new(0.0, 0.5) / self.v * (Complex64::new(0.0, 1.0) * self.v * delta.abs()).exp()
    }

    /// dK/d(delta); the symmetric value 0 at the kink.
    pub fn deriv(&self, delta: f64) -> Complex64 {
        if delta == 0.0 {
            return Complex64::default();
        }
        let s = if delta > 0.0 { 1.0 } else { -1.0 };
        Complex64::new(-0.5 * s, 0.0) * (Complex64::new(0.0, 1.0) * self.v * delta.abs()).exp()
    }

    /// Zero-diagonal correction stencil [A1, A2, A3] applied at offsets
    /// |i-j| = 1, 2, 3, realizing the kink corrections to O(h^6):
    ///   2(A1+A2+A3)      = -h^2/12 - (h^4/720) v^2
    ///   A1 + 4A2 + 9A3   =  h^2/240
    ///   A1 + 16A2 + 81A3 =  0
    pub fn stencil(&self, h: f64) -> [Complex64; 3] {
        let v2 = self.v * self.v;
        let r0 = Complex64::new(-h * h / 12.0, 0.0) - v2 * (h.powi(4) / 720.0);
        let r1 = Complex64::new(h * h / 240.0, 0.0);
        // solve [[2,2,2],[1,4,9],[1,16,81]] A = [r0, r1, 0] (Cramer, det = 240)
        let det = 240.0;
        let a1 = (r0 * 180.0 - r1 * 130.0) / det;
        let a2 = (-r0 * 72.0 + r1 * 160.0) / det;
        let a3 = (r0 * 12.0 - r1 * 30.0) / det;
        [a1, a2, a3]
    }
}

/// Corrected trapezoid convolution out_i = h sum_j K(x_i - x_j) f_j + stencil,
/// on a uniform axis with spacing h. O(N^2); N is a few hundred at desk scale.
pub fn convolve_corrected(kernel: &ModeKernel, h: f64, n: usize, f: &[Complex64]) -> Vec<Complex64> {
    // difference table K on (1-n..n-1) * h
    let mut table = vec![Complex64::default(); 2 * n - 1];
    for (t, slot) in table.iter_mut().enumerate() {
        let delta = (t as isize - (n as isize - 1)) as f64 * h;
        *slot = kernel.eval(delta) * h;
    }
    let mut out = vec![Complex64::default(); n];
    for i in 0..n {
        let mut acc = Complex64::default();
        let base = n - 1 - i;
        for (j, fj) in f.iter().enumerate() {
            acc += table[base + j] * fj;
        }
        out[i] = acc;
    }
    let st = kernel.stencil(h);
    for i in 0..n {
        let mut acc = Complex64::default();
        for (o, a) in st.iter().enumerate() {
            let off = o + 1;
            if i >= off {
                acc += a * f[i - off];
            }
            if i + off < n {
                acc += a * f[i + off];
            }
        }
        out[i] += acc;
    }
    out
}

/// Dense corrected kernel matrix on a contiguous index range of a uniform
/// axis: entries h K(x_i - x_j) plus the stencil on the band |i-j| <= 3.
pub fn kernel_matrix(kernel: &ModeKernel, h: f64, xs: &[f64]) -> Array2<Complex64> {
    let n = xs.len();
    let mut m = Array2::from_elem((n, n), Complex64::default());
    for i in 0..n {
        for j in 0..n {
            m[[i, j]] = kernel.eval(xs[i] - xs[j]) * h;
        }
    }
    let st = kernel.stencil(h);
    for i in 0..n {
        for (o, a) in st.iter().enumerate() {
            let off = o + 1;
            if i >= off {
                m[[i, i - off]] += a;
            }
            if i + off < n {
                m[[i, i + off]] += a;
            }
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    /// adaptive Simpson reference for the convolution integral
    fn simpson<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64, tol: f64) -> Complex64 {
        fn s<F: Fn(f64) -> Complex64>(f: &F, a: f64, m: f64, b: f64) -> Complex64 {
            (f(a) + f(m) * 4.0 + f(b)) * ((b - a) / 6.0)
        }
        fn rec<F: Fn(f64) -> Complex64>(
            f: &F,
            a: f64,
            b: f64,
            whole: Complex64,
            tol: f64,
            depth: usize,
        ) -> Complex64 {
            let m = 0.5 * (a + b);
            let left = s(f, a, 0.5 * (a + m), m);
            let right = s(f, m, 0.5 * (m + b), b);
            if depth > 40 || (left + right - whole).norm() < 15.0 * tol {
                left + right + (left + right - whole) / 15.0
            } else {
                rec(f, a, m, left, tol / 2.0, depth + 1)
                    + rec(f, m, b, right, tol / 2.0, depth + 1)
            }
        }
        let m = 0.5 * (a + b);
        rec(f, a, b, s(f, a, m, b), tol, 0)
    }

    #[test]
    fn corrected_convolution_matches_adaptive_quadrature() {
        let l = 16.0;
        let n = 256;
        let h = 2.0 * l / n as f64;
        let xs: Vec<f64> = (0..n).map(|j| -l + j as f64 * h).collect();
        let fr = |x: f64| {
            Complex64::new((-x * x).exp(), 0.0) * Complex64::from_polar(1.0, 0.3 * x)
        };
        let f: Vec<Complex64> = xs.iter().map(|x| fr(*x)).collect();
        for v in [
            Complex64::new(1.4, 0.05),
            Complex64::new(0.3, -0.02),
            Complex64::new(0.0, 2.5),
        ] {
            let k = ModeKernel::new(v);
            let out = convolve_corrected(&k, h, n, &f);
            // check at an interior node against adaptive quadrature, splitting
            // the integral at the kink
            let i0 = n / 2 + 7;
            let xi = xs[i0];
            let left = simpson(&|t: f64| k.eval(xi - t) * fr(t), -l, xi, 1e-14);
            let right = simpson(&|t: f64| k.eval(xi - t) * fr(t), xi, l, 1e-14);
            let reference = left + right;
            let err = (out[i0] - reference).norm();
            assert!(err < 2e-7, "v = {v}: err = {err:.3e}");
        }
    }

    #[test]
    fn matrix_and_convolution_agree() {
        let l = 8.0;
        let n = 64;
        let h = 2.0 * l / n as f64;
        let xs: Vec<f64> = (0..n).map(|j| -l + j as f64 * h).collect();
        let f: Vec<Complex64> = xs
            .iter()
            .map(|x| Complex64::new((-x * x).exp(), 0.1 * x))
            .collect();
        let k = ModeKernel::new(Complex64::new(1.0, 0.3));
        let out = convolve_corrected(&k, h, n, &f);
        let m = kernel_matrix(&k, h, &xs);
        for i in 0..n {
            let mut acc = Complex64::default();
            for j in 0..n {
                acc += m[[i, j]] * f[j];
            }
            assert!((acc - out[i]).norm() < 1e-13);
        }
    }

    #[test]
    fn branch_continues_across_axis_open() {
        // open channel: v(lambda) analytic across real lambda with Re(lambda-shift)>0
        let shift = Complex64::new(0.09, 0.0);
        let above = branch_v(shift, Complex64::new(2.0, 1e-9), true);
        let below = branch_v(shift, Complex64::new(2.0, -1e-9), true);
        assert!((above - below).norm() < 1e-8);
        assert!(above.re > 0.0);
        // and matches i sqrt(shift-lambda) convention for closed channels above axis
        let cshift = Complex64::new(5.29, 0.0);
        let c = branch_v(cshift, Complex64::new(2.0, 0.3), false);
        let p = (Complex64::new(2.0, 0.3) - cshift).sqrt();
        assert!((c - p).norm() < 1e-12, "closed branch {c} vs principal {p}");
    }
}
