//! Dense symmetric helpers shared by the spectral modules.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

const EIGEN_EPS: f64 = f64::EPSILON;
const EIGEN_MAX_ITER: usize = 0; // 0 = nalgebra's "iterate until convergence"

/// Returns `(M + Mᵀ) / 2`.
pub fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    let t = m.transpose();
    (m + t) * 0.5
}

/// Largest absolute entry.
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// `max |M - Mᵀ| / max |M|`, zero for the zero matrix.
pub fn relative_asymmetry(m: &DMatrix<f64>) -> f64 {
    let scale = max_abs(m);
    if scale == 0.0 {
        return 0.0;
    }
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for c in 0..n {
        for r in (c + 1)..n {
            worst = worst.max((m[(r, c)] - m[(c, r)]).abs());
        }
    }
    worst / scale
}

pub fn require_square(m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::ShapeMismatch {
            left: m.shape(),
            right: (m.ncols(), m.nrows()),
        });
    }
    if m.nrows() == 0 {
        return Err(Error::InvalidInput("empty matrix".into()));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    Ok(())
}

pub fn require_symmetric(m: &DMatrix<f64>, rel_tol: f64) -> Result<()> {
    require_square(m)?;
    let asymmetry = relative_asymmetry(m);
    if asymmetry > rel_tol {
        return Err(Error::NotSymmetric { asymmetry });
    }
    Ok(())
}

/// Eigenpairs of a symmetric matrix, eigenvalues ascending, eigenvectors as
/// the matching columns.
#[derive(Debug, Clone)]
pub struct SymmetricEigenpairs {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

/// Householder tridiagonalization followed by implicit symmetric QR.
///
/// Only the lower triangle is read, after symmetrization.
pub fn symmetric_eigen(m: &DMatrix<f64>) -> Result<SymmetricEigenpairs> {
    let sym = symmetrize(m.clone());
    let eig = SymmetricEigen::try_new(sym, EIGEN_EPS, EIGEN_MAX_ITER)
        .ok_or(Error::ConvergenceFailure)?;
    let p = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(p, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(p, p);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(SymmetricEigenpairs { values, vectors })
}

/// Spectral norm of a symmetric matrix (largest absolute eigenvalue).
pub fn symmetric_spectral_norm(m: &DMatrix<f64>) -> Result<f64> {
    let eig = symmetric_eigen(m)?;
    Ok(eig.values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs())))
}

/// Numerical rank: singular values above `rel_tol · σ_max`.
pub fn numerical_rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().singular_values();
    let smax = sv.iter().fold(0.0_f64, |acc, v| acc.max(*v));
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * smax).count()
}
