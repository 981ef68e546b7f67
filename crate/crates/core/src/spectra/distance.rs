//! Lévy and Kolmogorov distances between step CDFs.

use super::SpectralDistribution;

/// `sup_x |F(x) − G(x)|`.
///
/// Both CDFs are right-continuous and constant between jumps, so the
/// supremum is attained at one of the merged jump points.
pub fn kolmogorov_distance(f: &SpectralDistribution, g: &SpectralDistribution) -> f64 {
    f.eigenvalues()
        .iter()
        .chain(g.eigenvalues())
        .map(|&x| (f.cdf(x) - g.cdf(x)).abs())
        .fold(0.0, f64::max)
}

/// `inf { ε > 0 : F(x − ε) − ε ≤ G(x) ≤ F(x + ε) + ε  ∀x }`, by bisection on ε.
///
/// Feasibility of a given ε is decided exactly: each side of the condition
/// is a right-continuous step function of x whose breakpoints are the jumps
/// of G and the jumps of F shifted by ∓ε, so checking those points suffices.
/// The returned value is the upper end of the final bracket.
pub fn levy_distance(f: &SpectralDistribution, g: &SpectralDistribution) -> f64 {
    let kolmogorov = kolmogorov_distance(f, g);
    if kolmogorov == 0.0 {
        return 0.0;
    }
    // L ≤ K: at ε = K, G(x) ≤ F(x) + K ≤ F(x + K) + K and symmetrically.
    let mut hi = kolmogorov;
    let mut lo = 0.0;
    if !levy_feasible(f, g, hi) {
        // Can only happen through rounding; ε = 1 always works.
        hi = 1.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if levy_feasible(f, g, mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

fn levy_feasible(f: &SpectralDistribution, g: &SpectralDistribution, eps: f64) -> bool {
    // Upper side: G(x) − F(x + ε) ≤ ε.
    for &t in g.eigenvalues() {
        if g.cdf(t) - f.cdf(t + eps) > eps {
            return false;
        }
    }
    for &s in f.eigenvalues() {
        // x = s − ε, where F(x + ε) = F(s).
        if g.cdf(s - eps) - f.cdf(s) > eps {
            return false;
        }
    }
    // Lower side: F(x − ε) − G(x) ≤ ε.
    for &s in f.eigenvalues() {
        // x = s + ε, where F(x − ε) = F(s).
        if f.cdf(s) - g.cdf(s + eps) > eps {
            return false;
        }
    }
    for &t in g.eigenvalues() {
        if f.cdf(t - eps) - g.cdf(t) > eps {
            return false;
        }
    }
    true
}

/// `sup_x |F(x) − G(x)|` against a continuous nondecreasing CDF `G`.
///
/// The supremum is attained at a jump of F, from one side or the other.
pub fn kolmogorov_distance_to_cdf<G: Fn(f64) -> f64>(f: &SpectralDistribution, g: G) -> f64 {
    let p = f.len() as f64;
    f.eigenvalues()
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let gx = g(x);
            (gx - i as f64 / p).abs().max((gx - (i + 1) as f64 / p).abs())
        })
        .fold(0.0, f64::max)
}

/// Lévy distance from a step CDF `F` to a continuous nondecreasing CDF `G`,
/// with the same bisection as [`levy_distance`].
///
/// For continuous G the condition reduces to `G(λ_k − ε) ≤ F(λ_k⁻) + ε` and
/// `F(λ_k) − ε ≤ G(λ_k + ε)` at the jumps λ_k of F.
pub fn levy_distance_to_cdf<G: Fn(f64) -> f64>(f: &SpectralDistribution, g: G) -> f64 {
    let p = f.len() as f64;
    let feasible = |eps: f64| {
        f.eigenvalues().iter().enumerate().all(|(i, &x)| {
            g(x - eps) <= i as f64 / p + eps && (i + 1) as f64 / p - eps <= g(x + eps)
        })
    };
    let mut hi = kolmogorov_distance_to_cdf(f, &g);
    if hi == 0.0 {
        return 0.0;
    }
    if !feasible(hi) {
        hi = 1.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}
