//! Sample matrices, the multivariate Kendall-tau matrix, covariance
//! companions and the Δ_n proximity diagnostic.
//!
//! All pair loops run over `i < j` in lexicographic order. Nothing of size
//! `p × C(n, 2)` is ever stored; each pair is folded in with `O(p)` scratch.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// A `p × n` data block: rows are dimensions, columns are samples.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    data: DMatrix<f64>,
}

impl SampleMatrix {
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        if data.nrows() < 1 {
            return Err(Error::InvalidInput("sample matrix needs p >= 1".into()));
        }
        if data.ncols() < 2 {
            return Err(Error::InsufficientSamples {
                needed: 2,
                got: data.ncols(),
            });
        }
        if let Some(idx) = data.iter().position(|v| !v.is_finite()) {
            let (r, c) = (idx % data.nrows(), idx / data.nrows());
            return Err(Error::InvalidInput(format!(
                "non-finite entry at row {r}, column {c}"
            )));
        }
        Ok(Self { data })
    }

    /// Builds from column-major storage (`p` rows, `n` columns).
    pub fn from_column_major(p: usize, n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != p * n {
            return Err(Error::InvalidInput(format!(
                "expected {} entries for a {p}x{n} matrix, got {}",
                p * n,
                values.len()
            )));
        }
        Self::new(DMatrix::from_vec(p, n, values))
    }

    /// Dimension.
    pub fn p(&self) -> usize {
        self.data.nrows()
    }

    /// Number of samples.
    pub fn n(&self) -> usize {
        self.data.ncols()
    }

    /// `y = p / n`.
    pub fn aspect_ratio(&self) -> f64 {
        self.p() as f64 / self.n() as f64
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.data
    }

    /// Multiplies every entry by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(&self.data * factor)
    }
}

/// What to do when two samples coincide.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DegeneratePolicy {
    #[default]
    Error,
    SkipPair,
}

/// How the pair sum is accumulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Accumulation {
    /// Rank-one updates folded left in lexicographic `(i, j)` order.
    #[default]
    PairwiseFold,
    /// `X L Xᵀ` with `L` the Laplacian of the pair weights `1/‖X_i − X_j‖²`.
    /// Same sum regrouped; `O(n²p + np²)` instead of `O(n²p²)`.
    ///
    /// The regrouping cancels: absolute error is about machine epsilon times
    /// the pair average of `(‖x_i‖² + ‖x_j‖²) / ‖x_i − x_j‖²` (rows centered).
    /// That ratio stays near 1 for high-dimensional data but is large when
    /// two observations nearly coincide; prefer the fold there.
    Laplacian,
}

/// The `p × p` multivariate Kendall-tau matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct KendallTauMatrix {
    matrix: DMatrix<f64>,
    n_samples: usize,
    pairs_used: usize,
}

impl KendallTauMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.matrix
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    /// Number of pairs that entered the average (`C(n, 2)` unless pairs were skipped).
    pub fn pairs_used(&self) -> usize {
        self.pairs_used
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CovarianceForm {
    /// `1/(n-1) Σ (X_i − X̄)(X_i − X̄)ᵀ`
    Centered,
    /// `1/n X Xᵀ`
    Uncentered,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    matrix: DMatrix<f64>,
    form: CovarianceForm,
}

impl CovarianceMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn form(&self) -> CovarianceForm {
        self.form
    }

    pub fn is_centered(&self) -> bool {
        self.form == CovarianceForm::Centered
    }
}

/// `K_n = 2/(n(n-1)) Σ_{i<j} (X_i − X_j)(X_i − X_j)ᵀ / ‖X_i − X_j‖²`, using the
/// lexicographic pairwise fold.
pub fn kendall_tau(x: &SampleMatrix, policy: DegeneratePolicy) -> Result<KendallTauMatrix> {
    kendall_tau_with(x, policy, Accumulation::PairwiseFold)
}

pub fn kendall_tau_with(
    x: &SampleMatrix,
    policy: DegeneratePolicy,
    accumulation: Accumulation,
) -> Result<KendallTauMatrix> {
    let (matrix, pairs_used) = match accumulation {
        Accumulation::PairwiseFold => pairwise_fold(x, policy)?,
        Accumulation::Laplacian => laplacian_form(x, policy)?,
    };
    Ok(KendallTauMatrix {
        matrix: linalg::symmetrize(matrix),
        n_samples: x.n(),
        pairs_used,
    })
}

fn pairwise_fold(x: &SampleMatrix, policy: DegeneratePolicy) -> Result<(DMatrix<f64>, usize)> {
    let (p, n) = (x.p(), x.n());
    let data = x.data();
    let mut acc = DMatrix::<f64>::zeros(p, p);
    let mut diff = vec![0.0; p];
    let mut pairs = 0usize;

    for i in 0..n {
        let xi = data.column(i);
        for j in (i + 1)..n {
            let xj = data.column(j);
            let mut norm2 = 0.0;
            for k in 0..p {
                let d = xi[k] - xj[k];
                diff[k] = d;
                norm2 += d * d;
            }
            if norm2 == 0.0 {
                match policy {
                    DegeneratePolicy::Error => return Err(Error::DegeneratePair { i, j }),
                    DegeneratePolicy::SkipPair => continue,
                }
            }
            let inv = 1.0 / norm2;
            // Upper triangle only; mirrored by the final symmetrization.
            for c in 0..p {
                let dc = diff[c] * inv;
                let col = &mut acc.as_mut_slice()[c * p..(c + 1) * p];
                for r in 0..=c {
                    col[r] += diff[r] * dc;
                }
            }
            pairs += 1;
        }
    }
    if pairs == 0 {
        return Err(Error::AllPairsDegenerate);
    }
    for c in 0..p {
        for r in (c + 1)..p {
            acc[(r, c)] = acc[(c, r)];
        }
    }
    acc /= pairs as f64;
    Ok((acc, pairs))
}

fn laplacian_form(x: &SampleMatrix, policy: DegeneratePolicy) -> Result<(DMatrix<f64>, usize)> {
    let (p, n) = (x.p(), x.n());
    let data = x.data();
    let mut laplacian = DMatrix::<f64>::zeros(n, n);
    let mut pairs = 0usize;

    for i in 0..n {
        let xi = data.column(i);
        for j in (i + 1)..n {
            let xj = data.column(j);
            let norm2: f64 = xi.iter().zip(xj.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
            if norm2 == 0.0 {
                match policy {
                    DegeneratePolicy::Error => return Err(Error::DegeneratePair { i, j }),
                    DegeneratePolicy::SkipPair => continue,
                }
            }
            let w = 1.0 / norm2;
            laplacian[(i, j)] = -w;
            laplacian[(j, i)] = -w;
            laplacian[(i, i)] += w;
            laplacian[(j, j)] += w;
            pairs += 1;
        }
    }
    if pairs == 0 {
        return Err(Error::AllPairsDegenerate);
    }

    // L annihilates constants, so centering the rows changes nothing in exact
    // arithmetic and removes the cancellation a large common offset would cause.
    let means = data.column_mean();
    let mut centered = data.clone();
    for mut col in centered.column_iter_mut() {
        col -= &means;
    }
    let xl = &centered * &laplacian;
    let mut k = DMatrix::<f64>::zeros(p, p);
    k.gemm(1.0 / pairs as f64, &xl, &centered.transpose(), 0.0);
    Ok((k, pairs))
}

/// Sample covariance in either the centered or the uncentered form.
pub fn sample_covariance(x: &SampleMatrix, form: CovarianceForm) -> Result<CovarianceMatrix> {
    let n = x.n();
    let data = x.data();
    let matrix = match form {
        CovarianceForm::Centered => {
            if n < 2 {
                return Err(Error::InsufficientSamples { needed: 2, got: n });
            }
            let mean: DVector<f64> = data.column_mean();
            let mut dev = data.clone();
            for mut col in dev.column_iter_mut() {
                col -= &mean;
            }
            (&dev * dev.transpose()) / (n as f64 - 1.0)
        }
        CovarianceForm::Uncentered => (data * data.transpose()) / n as f64,
    };
    Ok(CovarianceMatrix {
        matrix: linalg::symmetrize(matrix),
        form,
    })
}

/// Δ_n: the scaled squared Frobenius distance between the straightened raw
/// differences and the straightened normalized differences, evaluated as
///
/// `½ [ 2/(np) Σ_i Σ_k X_ki² − 2/(p C) Σ_{i<j} Σ_k X_ki X_kj − 2/(C √p) Σ_{i<j} ‖X_i − X_j‖ + 1 ]`
///
/// with `C = C(n, 2)`. It tends to zero when entries have variance ½.
pub fn delta_n(x: &SampleMatrix) -> Result<f64> {
    let (p, n) = (x.p(), x.n());
    let data = x.data();
    let pf = p as f64;
    let nf = n as f64;
    let pairs = nf * (nf - 1.0) / 2.0;

    let sum_sq: f64 = data.iter().map(|v| v * v).sum();

    // Σ_{i<j} x_i·x_j = ½(‖Σ_i x_i‖² − Σ_i ‖x_i‖²)
    let col_sum = data.column_sum();
    let cross = 0.5 * (col_sum.norm_squared() - sum_sq);

    let mut dist_sum = 0.0;
    for i in 0..n {
        let xi = data.column(i);
        for j in (i + 1)..n {
            let xj = data.column(j);
            let norm2: f64 = xi.iter().zip(xj.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
            if norm2 == 0.0 {
                return Err(Error::DegeneratePair { i, j });
            }
            dist_sum += norm2.sqrt();
        }
    }

    let bracket = 2.0 / (nf * pf) * sum_sq - 2.0 / (pf * pairs) * cross
        - 2.0 / (pairs * pf.sqrt()) * dist_sum
        + 1.0;
    Ok((0.5 * bracket).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sample(p: usize, n: usize, vals: &[f64]) -> SampleMatrix {
        SampleMatrix::from_column_major(p, n, vals.to_vec()).unwrap()
    }

    #[test]
    fn rejects_non_finite_and_tiny_inputs() {
        assert!(SampleMatrix::from_column_major(1, 2, vec![0.0, f64::NAN]).is_err());
        assert!(matches!(
            SampleMatrix::from_column_major(2, 1, vec![0.0, 1.0]),
            Err(Error::InsufficientSamples { .. })
        ));
        assert!(SampleMatrix::from_column_major(0, 2, vec![]).is_err());
    }

    #[test]
    fn two_samples_give_projection() {
        let x = sample(3, 2, &[1.0, 2.0, 0.0, -1.0, 0.0, 2.0]);
        let k = kendall_tau(&x, DegeneratePolicy::Error).unwrap();
        let d = nalgebra::DVector::from_vec(vec![2.0, 2.0, -2.0]);
        let expected = &d * d.transpose() / d.norm_squared();
        assert_relative_eq!(k.matrix(), &expected, epsilon = 1e-15);
        assert_relative_eq!(k.trace(), 1.0, epsilon = 1e-15);
        assert_eq!(k.pairs_used(), 1);
    }

    #[test]
    fn one_dimension_is_unit() {
        let x = sample(1, 4, &[0.3, -1.2, 5.0, 2.2]);
        let k = kendall_tau(&x, DegeneratePolicy::Error).unwrap();
        assert_relative_eq!(k.matrix()[(0, 0)], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn duplicate_columns_are_rejected_or_skipped() {
        let x = sample(2, 3, &[1.0, 2.0, 1.0, 2.0, 0.0, 5.0]);
        assert!(matches!(
            kendall_tau(&x, DegeneratePolicy::Error),
            Err(Error::DegeneratePair { i: 0, j: 1 })
        ));
        let k = kendall_tau(&x, DegeneratePolicy::SkipPair).unwrap();
        assert_eq!(k.pairs_used(), 2);
        assert_relative_eq!(k.trace(), 1.0, epsilon = 1e-14);

        let lap = kendall_tau_with(&x, DegeneratePolicy::SkipPair, Accumulation::Laplacian).unwrap();
        assert_relative_eq!(lap.matrix(), k.matrix(), epsilon = 1e-14);
    }

    #[test]
    fn all_identical_is_all_degenerate() {
        let x = sample(2, 3, &[1.0, 1.0, 1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(
            kendall_tau(&x, DegeneratePolicy::SkipPair),
            Err(Error::AllPairsDegenerate)
        ));
        assert!(matches!(
            kendall_tau_with(&x, DegeneratePolicy::SkipPair, Accumulation::Laplacian),
            Err(Error::AllPairsDegenerate)
        ));
    }

    #[test]
    fn centered_covariance_hand_example() {
        let x = sample(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let s = sample_covariance(&x, CovarianceForm::Centered).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[0.5, -0.5, -0.5, 0.5]);
        assert_relative_eq!(s.matrix(), &expected, epsilon = 1e-15);
        assert!(s.is_centered());
    }

    #[test]
    fn identical_columns_have_zero_covariance() {
        let x = sample(2, 3, &[1.0, 2.0, 1.0, 2.0, 1.0, 2.0]);
        let s = sample_covariance(&x, CovarianceForm::Centered).unwrap();
        assert!(s.matrix().iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn uncentered_covariance() {
        let x = sample(1, 2, &[1.0, 3.0]);
        let s = sample_covariance(&x, CovarianceForm::Uncentered).unwrap();
        assert_relative_eq!(s.matrix()[(0, 0)], 5.0);
        assert!(!s.is_centered());
    }

    #[test]
    fn delta_n_rejects_degenerate() {
        let x = sample(2, 3, &[1.0, 2.0, 1.0, 2.0, 0.0, 5.0]);
        assert!(matches!(delta_n(&x), Err(Error::DegeneratePair { .. })));
    }
}
