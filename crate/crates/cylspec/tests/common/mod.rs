//! Shared oracles for the acceptance suite: 1-D Jost/matching conditions for
//! the square well, a shooting-method bound-state solver, and deterministic
//! probe fields. Everything here is independent of the library's resolvent
//! and determinant code paths.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cylspec::geometry::{CylinderGrid, WeightedField};

/// Bisection on a sign change.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, iters: usize) -> f64 {
    let mut flo = f(lo);
    assert!(
        flo * f(hi) < 0.0,
        "bisection bracket does not straddle a root: f({lo}) = {flo}, f({hi}) = {}",
        f(hi)
    );
    for _ in 0..iters {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if flo * fm < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            flo = fm;
        }
    }
    0.5 * (lo + hi)
}

/// Bound states of the 1-D square well V = -v0 on |x| < a: decay rates kappa
/// with eigenvalue mu = -kappa^2. Jost-function zeros on the positive
/// imaginary momentum axis, located from the even/odd matching conditions
///   even: q tan(q a) = kappa,   odd: q cot(q a) = -kappa,  q = sqrt(v0 - kappa^2).
pub fn square_well_bound_kappas(v0: f64, a: f64) -> Vec<(f64, &'static str)> {
    let mut out = Vec::new();
    let even = |kappa: f64| -> f64 {
        let q = (v0 - kappa * kappa).sqrt();
        q * (q * a).tan() - kappa
    };
    let odd = |kappa: f64| -> f64 {
        let q = (v0 - kappa * kappa).sqrt();
        q / (q * a).tan() + kappa
    };
    // scan for sign changes on a fine grid, avoiding the tan poles
    let n = 20_000;
    let eps = 1e-9;
    let kmax = v0.sqrt() - eps;
    let mut prev_e: Option<(f64, f64)> = None;
    let mut prev_o: Option<(f64, f64)> = None;
    for i in 0..=n {
        let kappa = eps + (kmax - eps) * i as f64 / n as f64;
        let q = (v0 - kappa * kappa).sqrt();
        let t = (q * a) % std::f64::consts::PI;
        let near_pole = (t - std::f64::consts::FRAC_PI_2).abs() < 1e-3;
        let near_zero = t.abs() < 1e-3 || (t - std::f64::consts::PI).abs() < 1e-3;
        if !near_pole {
            let fe = even(kappa);
            if let Some((pk, pf)) = prev_e {
                if pf * fe < 0.0 {
                    out.push((bisect(even, pk, kappa, 200), "even"));
                }
            }
            prev_e = Some((kappa, fe));
        } else {
            prev_e = None;
        }
        if !near_zero {
            let fo = odd(kappa);
            if let Some((pk, pf)) = prev_o {
                if pf * fo < 0.0 {
                    out.push((bisect(odd, pk, kappa, 200), "odd"));
                }
            }
            prev_o = Some((kappa, fo));
        } else {
            prev_o = None;
        }
    }
    out.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    out
}

/// Ground state of -psi'' + V psi = mu psi for an even attractive potential,
/// by RK4 shooting from x = 0 (psi(0)=1, psi'(0)=0) and bisection on the
/// sign of psi at the far boundary. Returns (mu, psi sampled on [0, xmax]).
pub fn shooting_ground_state<V: Fn(f64) -> f64>(
    v: V,
    mu_lo: f64,
    mu_hi: f64,
    xmax: f64,
    n_steps: usize,
) -> (f64, Vec<f64>) {
    let h = xmax / n_steps as f64;
    let integrate = |mu: f64| -> (f64, Vec<f64>) {
        let mut psi = 1.0f64;
        let mut dpsi = 0.0f64;
        let mut trace = Vec::with_capacity(n_steps + 1);
        trace.push(psi);
        let accel = |x: f64, p: f64| (v(x) - mu) * p;
        for i in 0..n_steps {
            let x = i as f64 * h;
            let k1p = dpsi;
            let k1d = accel(x, psi);
            let k2p = dpsi + 0.5 * h * k1d;
            let k2d = accel(x + 0.5 * h, psi + 0.5 * h * k1p);
            let k3p = dpsi + 0.5 * h * k2d;
            let k3d = accel(x + 0.5 * h, psi + 0.5 * h * k2p);
            let k4p = dpsi + h * k3d;
            let k4d = accel(x + h, psi + h * k3p);
            psi += h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
            dpsi += h / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d);
            trace.push(psi);
        }
        (psi, trace)
    };
    let mu = bisect(|m| integrate(m).0, mu_lo, mu_hi, 200);
    let (_, trace) = integrate(mu);
    (mu, trace)
}

/// Deterministic decaying probe with guaranteed n = 0 content.
pub fn probe_field(grid: &Arc<CylinderGrid>, weight_a: f64, seed: u64) -> WeightedField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = WeightedField::zeros(grid.clone(), weight_a);
    for bump in 0..3 {
        let mi = if bump == 0 {
            grid.mode_index(&vec![0; grid.d]).unwrap()
        } else {
            rng.gen_range(0..grid.n_modes())
        };
        let x0: f64 = rng.gen_range(-1.5..1.5);
        let s: f64 = rng.gen_range(0.8..1.4);
        let amp = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        for xf in 0..grid.n_x_total() {
            let x = grid.x_coords(xf);
            let r2: f64 = x.iter().map(|t| (t - x0) * (t - x0)).sum();
            f.values[[mi, xf]] += amp * (-r2 / (s * s)).exp();
        }
    }
    f
}

#[allow(dead_code)]
pub fn gaussian_mode(grid: &Arc<CylinderGrid>, n: &[i64], weight_a: f64) -> WeightedField {
    WeightedField::from_mode_profile(grid.clone(), weight_a, n, |x| {
        let r2: f64 = x.iter().map(|t| t * t).sum();
        Complex64::new((-r2).exp(), 0.0)
    })
    .unwrap()
}
