//! Eigenvalues, empirical spectral distributions and their transforms.

mod bounds;
mod distance;
mod kde;

pub use bounds::{check_levy4_bound, check_levy_norm_bound, check_rank_bound, gram_spectrum, BoundCheck};
pub use distance::{kolmogorov_distance, kolmogorov_distance_to_cdf, levy_distance, levy_distance_to_cdf};
pub use kde::{kernel_smooth, SmoothedDensity};
pub(crate) use kde::{check_grid, trapezoid};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg;

/// Relative asymmetry accepted by [`eigenvalues_symmetric`].
pub const SYMMETRY_TOL: f64 = 1e-8;

/// Sorted eigenvalues `λ_1 ≤ … ≤ λ_p`, read as the uniform measure on them.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDistribution {
    eigenvalues: Vec<f64>,
}

impl SpectralDistribution {
    pub fn new(mut eigenvalues: Vec<f64>) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::InvalidInput("spectral distribution needs at least one eigenvalue".into()));
        }
        if eigenvalues.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite eigenvalue".into()));
        }
        eigenvalues.sort_by(f64::total_cmp);
        Ok(Self { eigenvalues })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn into_eigenvalues(self) -> Vec<f64> {
        self.eigenvalues
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues[self.eigenvalues.len() - 1]
    }

    /// Distribution of `factor · λ`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.eigenvalues.iter().map(|v| v * factor).collect())
    }

    /// Right-continuous ESD value `#{λ_i ≤ x} / p`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.count_le(x) as f64 / self.len() as f64
    }

    pub(crate) fn count_le(&self, x: f64) -> usize {
        self.eigenvalues.partition_point(|&v| v <= x)
    }

    /// Pools several spectra into one (uniform weight per eigenvalue).
    pub fn pooled<'a, I>(parts: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a SpectralDistribution>,
    {
        let all: Vec<f64> = parts
            .into_iter()
            .flat_map(|d| d.eigenvalues.iter().copied())
            .collect();
        Self::new(all)
    }
}

/// All eigenvalues of a real symmetric matrix, ascending.
pub fn eigenvalues_symmetric(m: &DMatrix<f64>) -> Result<SpectralDistribution> {
    linalg::require_symmetric(m, SYMMETRY_TOL)?;
    let eig = linalg::symmetric_eigen(m)?;

    let p = m.nrows();
    let norm = m.norm();
    let residual = (m * &eig.vectors - &eig.vectors * DMatrix::from_diagonal(&eig.values)).norm();
    if residual > 1e-8 * p as f64 * norm.max(f64::MIN_POSITIVE) {
        return Err(Error::ConvergenceFailure);
    }
    SpectralDistribution::new(eig.values.iter().copied().collect())
}

/// ESD value at `x`.
pub fn esd_eval(f: &SpectralDistribution, x: f64) -> f64 {
    f.cdf(x)
}

/// `m(z) = (1/p) Σ 1 / (λ_i − z)` for `Im z > 0`.
pub fn stieltjes_empirical(f: &SpectralDistribution, z: Complex64) -> Result<Complex64> {
    if !(z.im > 0.0) {
        return Err(Error::NotUpperHalfPlane { z });
    }
    let sum: Complex64 = f
        .eigenvalues
        .iter()
        .map(|&lambda| (Complex64::new(lambda, 0.0) - z).inv())
        .sum();
    Ok(sum / f.len() as f64)
}
