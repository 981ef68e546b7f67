//! Independent oracles shared by the integration tests. Nothing here calls
//! the library routine it is used to check.

#![allow(dead_code)]

use std::f64::consts::PI;

use kspec_core::Complex64;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

pub fn symmetric_matrix(rng: &mut ChaCha8Rng, p: usize) -> DMatrix<f64> {
    let a = normal_matrix(rng, p, p);
    (&a + a.transpose()) * 0.5
}

/// MP support endpoints as the roots of the discriminant
/// `(x − σ²(1+y))² − 4yσ⁴`, i.e. `x² − 2σ²(1+y)x + σ⁴(1−y)² = 0`,
/// solved with the numerically stable quadratic formula.
pub fn mp_endpoints_by_discriminant(y: f64, s2: f64) -> (f64, f64) {
    let bq = -2.0 * s2 * (1.0 + y);
    let cq = s2 * s2 * (1.0 - y) * (1.0 - y);
    let disc = (bq * bq - 4.0 * cq).sqrt();
    let big = (-bq + disc) / 2.0;
    (cq / big, big)
}

/// `∫ f_MP(x) g(x) dx` by the trapezoid rule in the angle `w` of
/// `x = c + r cos w`. The transformed integrand is smooth and extends to an
/// even periodic function, so the rule converges geometrically.
pub fn mp_integral<T, G>(y: f64, s2: f64, panels: usize, g: G) -> T
where
    T: Copy + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T> + Default,
    G: Fn(f64) -> T,
{
    let (a, b) = mp_endpoints_by_discriminant(y, s2);
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    let dw = PI / panels as f64;
    let mut acc = T::default();
    // Endpoint terms vanish (sin w = 0).
    for k in 1..panels {
        let w = k as f64 * dw;
        let x = c + r * w.cos();
        let s = w.sin();
        let weight = r * r * s * s / (2.0 * PI * x * y * s2);
        acc = acc + g(x) * weight;
    }
    acc * dw
}

pub fn mp_mass(y: f64, s2: f64) -> f64 {
    mp_integral(y, s2, 4000, |_| 1.0)
}

pub fn mp_stieltjes_by_quadrature(y: f64, s2: f64, z: Complex64, panels: usize) -> Complex64 {
    mp_integral(y, s2, panels, |x| (Complex64::new(x, 0.0) - z).inv())
}

/// Density of MP(y, σ²), written out independently.
pub fn mp_pdf(y: f64, s2: f64, x: f64) -> f64 {
    let (a, b) = mp_endpoints_by_discriminant(y, s2);
    if x <= a || x >= b {
        return 0.0;
    }
    ((b - x) * (x - a)).sqrt() / (2.0 * PI * x * y * s2)
}

/// `Δ_n` from the materialized straightened matrices: columns
/// `d_ij = X_i − X_j` and `√p · d_ij / ‖d_ij‖`, over all `i < j`, scaled
/// by `1 / (2 p C(n,2))`.
pub fn delta_n_direct(x: &DMatrix<f64>) -> f64 {
    let (p, n) = x.shape();
    let pairs = n * (n - 1) / 2;
    let mut raw = DMatrix::zeros(p, pairs);
    let mut normalized = DMatrix::zeros(p, pairs);
    let mut col = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            let d = x.column(i) - x.column(j);
            let norm = d.norm();
            raw.set_column(col, &d);
            normalized.set_column(col, &(d * ((p as f64).sqrt() / norm)));
            col += 1;
        }
    }
    (raw - normalized).norm_squared() / (2.0 * p as f64 * pairs as f64)
}

/// `(1/(n(n−1))) Σ_{i<j} (X_i − X_j)(X_i − X_j)ᵀ`.
pub fn pairwise_covariance(x: &DMatrix<f64>) -> DMatrix<f64> {
    let (p, n) = x.shape();
    let mut acc = DMatrix::zeros(p, p);
    for i in 0..n {
        for j in (i + 1)..n {
            let d = x.column(i) - x.column(j);
            acc += &d * d.transpose();
        }
    }
    acc / (n * (n - 1)) as f64
}

/// Characteristic polynomial coefficients `c_0..c_p` of `det(λI − A)`
/// (`c_p = 1`) by Faddeev–LeVerrier.
pub fn charpoly(a: &DMatrix<f64>) -> Vec<f64> {
    let p = a.nrows();
    let mut coeffs = vec![0.0; p + 1];
    coeffs[p] = 1.0;
    let mut m = DMatrix::<f64>::zeros(p, p);
    for k in 1..=p {
        m = a * &m + DMatrix::identity(p, p) * coeffs[p + 1 - k];
        coeffs[p - k] = -(a * &m).trace() / k as f64;
    }
    coeffs
}

/// Eigenvalues of a symmetric matrix with simple spectrum: sign changes of
/// the characteristic polynomial on a fine grid inside the Gershgorin
/// bound, refined by bisection.
pub fn eigenvalues_by_charpoly(a: &DMatrix<f64>) -> Vec<f64> {
    let c = charpoly(a);
    let eval = |x: f64| c.iter().rev().fold(0.0, |acc, &ck| acc * x + ck);
    let bound = (0..a.nrows())
        .map(|i| a.row(i).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
        + 1.0;
    let steps = 200_000;
    let mut roots = Vec::new();
    let mut prev_x = -bound;
    let mut prev_v = eval(prev_x);
    for k in 1..=steps {
        let x = -bound + 2.0 * bound * k as f64 / steps as f64;
        let v = eval(x);
        if prev_v == 0.0 {
            roots.push(prev_x);
        } else if prev_v * v < 0.0 {
            let (mut lo, mut hi) = (prev_x, x);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if eval(lo) * eval(mid) <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        prev_x = x;
        prev_v = v;
    }
    roots
}

/// Step-CDF Kolmogorov distance to a continuous CDF, straight from the
/// definition at both one-sided limits of every jump.
pub fn ks_to_continuous<G: Fn(f64) -> f64>(sorted: &[f64], g: G) -> f64 {
    let m = sorted.len() as f64;
    let mut worst: f64 = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let x = sorted[i];
        let mut j = i;
        while j < sorted.len() && sorted[j] == x {
            j += 1;
        }
        let gx = g(x);
        worst = worst.max((gx - i as f64 / m).abs()).max((gx - j as f64 / m).abs());
        i = j;
    }
    worst
}
