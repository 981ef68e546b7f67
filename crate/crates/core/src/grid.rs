//! Evaluation grids.

use num_complex::Complex64;

/// `n` evenly spaced points from `lo` to `hi` inclusive. Endpoints are exact.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (n - 1) as f64;
            let mut v: Vec<f64> = (0..n).map(|i| lo + step * i as f64).collect();
            v[n - 1] = hi;
            v
        }
    }
}

/// `n` log-spaced points from `lo` to `hi` inclusive (`0 < lo < hi`).
pub fn geomspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = linspace(lo.ln(), hi.ln(), n).into_iter().map(f64::exp).collect();
    if let Some(first) = v.first_mut() {
        *first = lo;
    }
    if let Some(last) = v.last_mut() {
        *last = hi;
    }
    v
}

/// Cartesian grid `re × im`, real part varying fastest.
pub fn complex_grid(re: &[f64], im: &[f64]) -> Vec<Complex64> {
    im.iter()
        .flat_map(|&b| re.iter().map(move |&a| Complex64::new(a, b)))
        .collect()
}

/// The shared default z-grid: 20 real parts in `[-0.5, 3]` times 10
/// imaginary parts log-spaced in `[0.01, 10]`.
pub fn default_z_grid() -> Vec<Complex64> {
    complex_grid(&linspace(-0.5, 3.0, 20), &geomspace(0.01, 10.0, 10))
}
