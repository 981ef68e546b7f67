//! Runtime checks of three matrix-perturbation inequalities for ESDs:
//!
//! * `L⁴(F^{AAᵀ}, F^{BBᵀ}) ≤ (2/p²) tr((A−B)(A−B)ᵀ) tr(AAᵀ + BBᵀ)`
//! * `L(F^A, F^B) ≤ ‖A − B‖` for symmetric `A`, `B`
//! * `‖F^{AAᵀ} − F^{BBᵀ}‖_∞ ≤ rank(A − B) / p`

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{eigenvalues_symmetric, kolmogorov_distance, levy_distance, SpectralDistribution};
use crate::error::{Error, Result};
use crate::linalg;

/// Singular values below this fraction of `σ_max` count as zero.
pub const RANK_REL_TOL: f64 = 1e-10;

/// Gram eigenvalues below this fraction of the largest are snapped to zero.
const GRAM_ZERO_REL_TOL: f64 = 1e-12;

const HOLDS_REL_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl BoundCheck {
    fn new(lhs: f64, rhs: f64) -> Self {
        Self {
            lhs,
            rhs,
            holds: lhs <= rhs * (1.0 + HOLDS_REL_SLACK),
        }
    }
}

fn same_shape(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch {
            left: a.shape(),
            right: b.shape(),
        });
    }
    if a.is_empty() {
        return Err(Error::InvalidInput("empty matrix".into()));
    }
    Ok(())
}

/// ESD of `A Aᵀ`.
///
/// A `p × m` factor with `m < p` has `p − m` structural zero eigenvalues
/// that the eigensolver returns as `±O(ε‖A‖²)` noise. Those are snapped to
/// exactly zero so that two Gram spectra with the same null space compare
/// equal there.
pub fn gram_spectrum(a: &DMatrix<f64>) -> Result<SpectralDistribution> {
    let gram = linalg::symmetrize(a * a.transpose());
    let spectrum = eigenvalues_symmetric(&gram)?;
    let top = spectrum.eigenvalues().iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let cutoff = GRAM_ZERO_REL_TOL * top;
    SpectralDistribution::new(
        spectrum
            .into_eigenvalues()
            .into_iter()
            .map(|v| if v.abs() <= cutoff { 0.0 } else { v })
            .collect(),
    )
}

pub fn check_levy4_bound(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<BoundCheck> {
    same_shape(a, b)?;
    let p = a.nrows() as f64;
    let levy = levy_distance(&gram_spectrum(a)?, &gram_spectrum(b)?);
    let diff = a - b;
    let rhs = 2.0 / (p * p) * diff.norm_squared() * (a.norm_squared() + b.norm_squared());
    Ok(BoundCheck::new(levy.powi(4), rhs))
}

pub fn check_levy_norm_bound(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<BoundCheck> {
    same_shape(a, b)?;
    let levy = levy_distance(&eigenvalues_symmetric(a)?, &eigenvalues_symmetric(b)?);
    let rhs = linalg::symmetric_spectral_norm(&(a - b))?;
    Ok(BoundCheck::new(levy, rhs))
}

pub fn check_rank_bound(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<BoundCheck> {
    same_shape(a, b)?;
    let p = a.nrows() as f64;
    let lhs = kolmogorov_distance(&gram_spectrum(a)?, &gram_spectrum(b)?);
    let rhs = linalg::numerical_rank(&(a - b), RANK_REL_TOL) as f64 / p;
    Ok(BoundCheck::new(lhs, rhs))
}
