//! Step-index fiber references: Bessel functions by quadrature and the exact
//! characteristic equations.

#![allow(dead_code)]

use std::f64::consts::PI;

pub const LAMBDA: f64 = 1.3;

pub fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let mut flo = f(lo);
    assert!(flo * f(hi) < 0.0, "root not bracketed in [{lo}, {hi}]");
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `J_n(x) = 1/(2 pi) int_0^{2 pi} cos(n t - x sin t) dt`; the trapezoid rule
/// is spectrally accurate for the periodic integrand.
pub fn bessel_j(n: i32, x: f64) -> f64 {
    let m = 400;
    let h = 2.0 * PI / m as f64;
    (0..m)
        .map(|k| {
            let t = k as f64 * h;
            (n as f64 * t - x * t.sin()).cos()
        })
        .sum::<f64>()
        / m as f64
}

/// `K_n(x) = int_0^inf exp(-x cosh t) cosh(n t) dt`.
pub fn bessel_k(n: i32, x: f64) -> f64 {
    let h: f64 = 0.01;
    let mut sum = 0.5 * (-x).exp();
    let mut t = h;
    loop {
        let term = (-x * t.cosh()).exp() * (n as f64 * t).cosh();
        sum += term;
        if term < 1e-30 * sum {
            break;
        }
        t += h;
    }
    sum * h
}

/// Exact hybrid-mode characteristic equation of a step-index fiber for
/// azimuthal order 1, as a function of `n_eff`.
pub fn he1_residual(n: f64, radius_um: f64, n1: f64, n2: f64) -> f64 {
    let k0 = 2.0 * PI / LAMBDA;
    let u = radius_um * k0 * (n1 * n1 - n * n).sqrt();
    let w = radius_um * k0 * (n * n - n2 * n2).sqrt();
    let (j0, j1) = (bessel_j(0, u), bessel_j(1, u));
    let (k0w, k1w) = (bessel_k(0, w), bessel_k(1, w));
    let jp = (j0 - j1 / u) / (u * j1);
    let kp = (-k0w - k1w / w) / (w * k1w);
    let rhs = n * n * (1.0 / (u * u) + 1.0 / (w * w)).powi(2);
    (jp + kp) * (n1 * n1 * jp + n2 * n2 * kp) - rhs
}

pub fn he11_index(radius_um: f64, n1: f64, n2: f64) -> f64 {
    // HE11 is the root with the largest index; scan down from the core index
    // for the first sign change
    let f = |n| he1_residual(n, radius_um, n1, n2);
    let mut hi = n1 - 1e-9;
    let step = 1e-3;
    loop {
        let lo = hi - step;
        assert!(lo > n2, "no HE11 root found");
        if f(lo).signum() != f(hi).signum() && f(lo).is_finite() && f(hi).is_finite() {
            return bisect(lo, hi, f);
        }
        hi = lo;
    }
}

/// TE01 characteristic equation `J1/(u J0) + K1/(w K0) = 0`.
pub fn te01_residual(n: f64, radius_um: f64, n1: f64, n2: f64) -> f64 {
    let k0 = 2.0 * PI / LAMBDA;
    let u = radius_um * k0 * (n1 * n1 - n * n).sqrt();
    let w = radius_um * k0 * (n * n - n2 * n2).sqrt();
    bessel_j(1, u) / (u * bessel_j(0, u)) + bessel_k(1, w) / (w * bessel_k(0, w))
}

