//! The Marčenko–Pastur law `MP(y, σ²)`: support, density, CDF, Stieltjes
//! transform, and the integrated squared error of a smoothed density
//! against it.
//!
//! `½ p K_n` has limit `MP(y, ½)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::linspace;
use crate::quadrature::{integrate, QuadConfig};
use crate::spectra::SmoothedDensity;

/// Number of uniform points over `[a, b]` used for ISE integration.
pub const ISE_GRID_POINTS: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MpParams {
    y: f64,
    sigma2: f64,
}

impl MpParams {
    pub fn new(y: f64, sigma2: f64) -> Result<Self> {
        if !(y > 0.0 && y < 1.0) {
            return Err(Error::InvalidInput(format!("aspect ratio y must lie in (0, 1), got {y}")));
        }
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::InvalidInput(format!("sigma2 must be positive, got {sigma2}")));
        }
        Ok(Self { y, sigma2 })
    }

    /// The limit of `½ p K_n` at aspect ratio `y`.
    pub fn kendall(y: f64) -> Result<Self> {
        Self::new(y, 0.5)
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn support(&self) -> (f64, f64) {
        mp_support(*self)
    }

    pub fn density(&self, x: f64) -> f64 {
        mp_density(*self, x)
    }
}

/// `a = σ²(1 − √y)²`, `b = σ²(1 + √y)²`.
pub fn mp_support(params: MpParams) -> (f64, f64) {
    let r = params.y.sqrt();
    (params.sigma2 * (1.0 - r).powi(2), params.sigma2 * (1.0 + r).powi(2))
}

/// `√((b − x)(x − a)) / (2π x y σ²)` on `[a, b]`, zero elsewhere.
pub fn mp_density(params: MpParams, x: f64) -> f64 {
    let (a, b) = mp_support(params);
    if x <= a || x >= b {
        return 0.0;
    }
    ((b - x) * (x - a)).sqrt() / (2.0 * PI * x * params.y * params.sigma2)
}

/// Density integrand after `x = c + r cos w`, which absorbs the square-root
/// edge behaviour: `f(c + r cos w) · r sin w`.
fn density_in_angle(params: MpParams, w: f64) -> f64 {
    let (a, b) = mp_support(params);
    let (c, r) = (0.5 * (a + b), 0.5 * (b - a));
    let x = c + r * w.cos();
    let s = r * w.sin();
    // √((b − x)(x − a)) = r sin w on [0, π]
    s * s / (2.0 * PI * x * params.y * params.sigma2)
}

fn angle_of(params: MpParams, x: f64) -> f64 {
    let (a, b) = mp_support(params);
    let (c, r) = (0.5 * (a + b), 0.5 * (b - a));
    ((x - c) / r).clamp(-1.0, 1.0).acos()
}

const CDF_QUAD: QuadConfig = QuadConfig {
    abs_tol: 1e-10,
    rel_tol: 1e-13,
    max_intervals: 500,
};

/// CDF by adaptive quadrature of the density (in the angle variable).
pub fn mp_cdf(params: MpParams, x: f64) -> f64 {
    let (a, b) = mp_support(params);
    if x <= a {
        return 0.0;
    }
    if x >= b {
        return 1.0;
    }
    let w = angle_of(params, x);
    // x runs from a to b as w runs from π down to 0.
    let r = integrate(|t| density_in_angle(params, t), w, PI, CDF_QUAD);
    r.value.clamp(0.0, 1.0)
}

/// Total mass by quadrature; equals 1 up to quadrature error.
pub fn mp_total_mass(params: MpParams) -> f64 {
    integrate(|t| density_in_angle(params, t), 0.0, PI, CDF_QUAD).value
}

/// Closed-form Stieltjes transform
///
/// `m(z) = (σ²(1 − y) − z ± √((z − σ²(1 + y))² − 4yσ⁴)) / (2 y z σ²)`
///
/// with the root chosen so that `Im m > 0`. Each candidate is evaluated by
/// whichever of the two equivalent forms avoids cancellation
/// (`N₊ / (2yzσ²) = 2 / N₋` since `N₊ N₋ = 4σ²yz`).
pub fn mp_stieltjes(params: MpParams, z: Complex64) -> Result<Complex64> {
    if !(z.im > 0.0) {
        return Err(Error::NotUpperHalfPlane { z });
    }
    let (y, s2) = (params.y, params.sigma2);
    let shifted = z - s2 * (1.0 + y);
    let root = (shifted * shifted - 4.0 * y * s2 * s2).sqrt();
    let base = Complex64::new(s2 * (1.0 - y), 0.0) - z;
    let denom = 2.0 * y * s2 * z;

    let candidate = |plus: Complex64, minus: Complex64| {
        if plus.norm() >= minus.norm() {
            plus / denom
        } else {
            2.0 / minus
        }
    };
    let m1 = candidate(base + root, base - root);
    let m2 = candidate(base - root, base + root);
    Ok(if m1.im >= m2.im { m1 } else { m2 })
}

/// Integrated squared error of `fhat` against `MP(y, σ²)` over `[a, b]`:
/// trapezoid rule on [`ISE_GRID_POINTS`] uniform points, `fhat` linearly
/// interpolated.
pub fn ise(fhat: &SmoothedDensity, params: MpParams) -> Result<f64> {
    let (a, b) = mp_support(params);
    ise_against(fhat, a, b, |x| mp_density(params, x))
}

/// Same as [`ise`] for an arbitrary target density on `[a, b]`.
pub fn ise_against<F: Fn(f64) -> f64>(fhat: &SmoothedDensity, a: f64, b: f64, target: F) -> Result<f64> {
    let lo = fhat.grid[0];
    let hi = fhat.grid[fhat.grid.len() - 1];
    if lo > a || hi < b {
        return Err(Error::GridDoesNotCoverSupport { lo, hi, a, b });
    }
    let xs = linspace(a, b, ISE_GRID_POINTS);
    let sq: Vec<f64> = xs
        .iter()
        .map(|&x| {
            let d = fhat.interpolate(x) - target(x);
            d * d
        })
        .collect();
    Ok(crate::spectra::trapezoid(&xs, &sq))
}
