//! Limiting spectral distribution of `½ tr(Σ) K_n` for a general population
//! spectral measure `H`.
//!
//! The Stieltjes transform solves
//!
//! ```text
//! m(z) = ∫ dH(τ) / (τ (1 − y − y z m(z)) − z),     z ∈ C⁺,
//! ```
//!
//! uniquely within `{ m : −(1 − y)/z + y m ∈ C⁺ }`. We find it by damped
//! Picard iteration from `m₀ = −1/z`, and recover the density by Stieltjes
//! inversion `f(x) ≈ Im m(x + iε) / π`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::spectra::{check_grid, SmoothedDensity};

/// Atoms closer than this are merged.
pub const ATOM_MERGE_TOL: f64 = 1e-12;
const WEIGHT_SUM_TOL: f64 = 1e-12;

/// Imaginary part at which downward continuation starts.
const CONTINUATION_START: f64 = 0.1;
const CONTINUATION_RATIO: f64 = 0.5;
const NEWTON_MAX_ITER: usize = 100;

/// Discrete probability measure `H = Σ w_k δ_{τ_k}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMeasure", into = "RawMeasure")]
pub struct SpectralMeasure {
    atoms: Vec<(f64, f64)>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMeasure {
    atoms: Vec<(f64, f64)>,
}

impl TryFrom<RawMeasure> for SpectralMeasure {
    type Error = Error;
    fn try_from(raw: RawMeasure) -> Result<Self> {
        SpectralMeasure::new(raw.atoms)
    }
}

impl From<SpectralMeasure> for RawMeasure {
    fn from(m: SpectralMeasure) -> Self {
        RawMeasure { atoms: m.atoms }
    }
}

impl SpectralMeasure {
    /// Atoms as `(location, weight)`. Sorted by location; near-duplicates merged.
    pub fn new(mut atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidInput("spectral measure needs at least one atom".into()));
        }
        for &(tau, w) in &atoms {
            if !(tau.is_finite() && tau >= 0.0) {
                return Err(Error::InvalidInput(format!("atom location must be finite and >= 0, got {tau}")));
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::InvalidInput(format!("atom weight must be positive, got {w}")));
            }
        }
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidInput(format!("atom weights sum to {total}, expected 1")));
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
        for (tau, w) in atoms {
            match merged.last_mut() {
                Some(last) if tau - last.0 < ATOM_MERGE_TOL => last.1 += w,
                _ => merged.push((tau, w)),
            }
        }
        Ok(Self { atoms: merged })
    }

    /// `δ_τ`.
    pub fn point_mass(tau: f64) -> Result<Self> {
        Self::new(vec![(tau, 1.0)])
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn min_location(&self) -> f64 {
        self.atoms[0].0
    }

    pub fn max_location(&self) -> f64 {
        self.atoms[self.atoms.len() - 1].0
    }

    /// `[τ_min (1 − √y)², τ_max (1 + √y)²]`, which contains the support of
    /// the limit law for `0 < y < 1`.
    pub fn support_bounds(&self, y: f64) -> (f64, f64) {
        let r = y.sqrt();
        (self.min_location() * (1.0 - r).powi(2), self.max_location() * (1.0 + r).powi(2))
    }
}

/// `H` from a population matrix: atoms at the eigenvalues of `Σ/2`,
/// weight `1/p` each.
pub fn measure_from_sigma(sigma: &DMatrix<f64>) -> Result<SpectralMeasure> {
    linalg::require_symmetric(sigma, 1e-8)?;
    let eig = linalg::symmetric_eigen(sigma)?;
    let scale = eig.values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let min = eig.values[0];
    if min < -1e-10 * scale {
        return Err(Error::NotPsd { min_eigenvalue: min });
    }
    let p = sigma.nrows();
    let w = 1.0 / p as f64;
    SpectralMeasure::new(eig.values.iter().map(|&v| (0.5 * v.max(0.0), w)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub damping: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 10_000,
            damping: 0.5,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidInput(format!("tol must be positive, got {}", self.tol)));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidInput(format!("damping must lie in (0, 1], got {}", self.damping)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidInput("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverResult {
    pub m: Complex64,
    pub iterations: usize,
    /// `|m − Φ(m)|` at the returned `m`.
    pub residual: f64,
}

impl SolverResult {
    /// `−(1 − y)/z + y m`, the transform of the companion `n × n` spectrum.
    pub fn companion(&self, y: f64, z: Complex64) -> Complex64 {
        companion(self.m, y, z)
    }
}

fn companion(m: Complex64, y: f64, z: Complex64) -> Complex64 {
    -(1.0 - y) / z + y * m
}

/// Right-hand side `Φ(m) = Σ_k w_k / (τ_k (1 − y − y z m) − z)`.
pub fn fixed_point_map(h: &SpectralMeasure, y: f64, z: Complex64, m: Complex64) -> Complex64 {
    let factor = 1.0 - y - y * z * m;
    h.atoms
        .iter()
        .map(|&(tau, w)| w / (tau * factor - z))
        .sum()
}

fn check_inputs(y: f64, z: Complex64, cfg: &SolverConfig) -> Result<()> {
    if !(y > 0.0 && y < 1.0) {
        return Err(Error::InvalidInput(format!("aspect ratio y must lie in (0, 1), got {y}")));
    }
    if !(z.im > 0.0) || !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::NotUpperHalfPlane { z });
    }
    cfg.validate()
}

/// Solves for `m(z)` from the cold start `m₀ = −1/z`.
pub fn solve_stieltjes(h: &SpectralMeasure, y: f64, z: Complex64, cfg: &SolverConfig) -> Result<SolverResult> {
    solve_stieltjes_from(h, y, z, cfg, -z.inv())
}

/// Damped Picard iteration `m ← (1 − d) m + d Φ(m)` from a given start,
/// stopped once a step is at most `tol`.
pub fn solve_stieltjes_from(
    h: &SpectralMeasure,
    y: f64,
    z: Complex64,
    cfg: &SolverConfig,
    start: Complex64,
) -> Result<SolverResult> {
    check_inputs(y, z, cfg)?;
    let (m, iterations, step) = picard(h, y, z, cfg, start);
    if !(step <= cfg.tol) {
        return Err(Error::NoConvergence { z, iterations, step });
    }
    finish(h, y, z, m, iterations)
}

fn picard(h: &SpectralMeasure, y: f64, z: Complex64, cfg: &SolverConfig, start: Complex64) -> (Complex64, usize, f64) {
    let d = cfg.damping;
    let mut m = start;
    let mut step = f64::INFINITY;
    let mut iterations = 0;
    while iterations < cfg.max_iter {
        let next = (1.0 - d) * m + d * fixed_point_map(h, y, z, m);
        step = (next - m).norm();
        m = next;
        iterations += 1;
        if step <= cfg.tol {
            break;
        }
    }
    (m, iterations, step)
}

fn finish(h: &SpectralMeasure, y: f64, z: Complex64, m: Complex64, iterations: usize) -> Result<SolverResult> {
    if !(companion(m, y, z).im > 0.0) {
        return Err(Error::LeftUniquenessSet { z, m });
    }
    let residual = (m - fixed_point_map(h, y, z, m)).norm();
    Ok(SolverResult { m, iterations, residual })
}

/// `Φ'(m) = Σ_k w_k τ_k y z / (τ_k (1 − y − y z m) − z)²`.
fn fixed_point_map_derivative(h: &SpectralMeasure, y: f64, z: Complex64, m: Complex64) -> Complex64 {
    let factor = 1.0 - y - y * z * m;
    h.atoms
        .iter()
        .map(|&(tau, w)| {
            let d = tau * factor - z;
            w * tau * y * z / (d * d)
        })
        .sum()
}

/// Newton on `m − Φ(m) = 0` from `start`, for points where Picard
/// contracts too slowly (near the support edges at small `Im z`).
fn newton(
    h: &SpectralMeasure,
    y: f64,
    z: Complex64,
    cfg: &SolverConfig,
    start: Complex64,
    spent: usize,
) -> Result<SolverResult> {
    let mut m = start;
    let mut step = f64::INFINITY;
    let mut iterations = spent;
    for _ in 0..NEWTON_MAX_ITER {
        let f = m - fixed_point_map(h, y, z, m);
        let next = m - f / (1.0 - fixed_point_map_derivative(h, y, z, m));
        if !(next.re.is_finite() && next.im.is_finite()) {
            break;
        }
        step = (next - m).norm();
        m = next;
        iterations += 1;
        if step <= cfg.tol {
            return finish(h, y, z, m, iterations);
        }
    }
    Err(Error::NoConvergence { z, iterations, step })
}

/// Solves at `x + iε` by continuation from `Im z = 0.1` downward in
/// geometric steps, warm-starting each solve from the previous one.
///
/// A stage whose Picard iteration exhausts `max_iter` is finished by
/// Newton steps from the last Picard iterate.
pub fn solve_near_axis(h: &SpectralMeasure, y: f64, x: f64, eps: f64, cfg: &SolverConfig) -> Result<SolverResult> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidInput(format!("eps must be positive, got {eps}")));
    }
    let stage = |im: f64, start: Complex64| -> Result<SolverResult> {
        let z = Complex64::new(x, im);
        check_inputs(y, z, cfg)?;
        let (m, iterations, step) = picard(h, y, z, cfg, start);
        if step <= cfg.tol {
            finish(h, y, z, m, iterations)
        } else {
            newton(h, y, z, cfg, m, iterations)
        }
    };
    let mut im = CONTINUATION_START.max(eps);
    let mut res = stage(im, -Complex64::new(x, im).inv())?;
    while im > eps {
        im = (im * CONTINUATION_RATIO).max(eps);
        res = stage(im, res.m)?;
    }
    Ok(res)
}

/// Density of the limit law on `x_grid`, `f(x) ≈ Im m(x + iε) / π`.
///
/// With `richardson`, combines `ε` and `ε/2` as `2 f_{ε/2} − f_ε`, cancelling
/// the leading `O(ε)` bias. The returned curve carries `ε` as its bandwidth
/// (inversion at height ε is smoothing by a Cauchy kernel of scale ε).
pub fn density_from_stieltjes(
    h: &SpectralMeasure,
    y: f64,
    x_grid: &[f64],
    eps: f64,
    cfg: &SolverConfig,
    richardson: bool,
) -> Result<SmoothedDensity> {
    check_grid(x_grid)?;
    let values = x_grid
        .iter()
        .map(|&x| {
            let coarse = solve_near_axis(h, y, x, eps, cfg)?.m.im / PI;
            if richardson {
                let fine = solve_near_axis(h, y, x, 0.5 * eps, cfg)?.m.im / PI;
                Ok(2.0 * fine - coarse)
            } else {
                Ok(coarse)
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    SmoothedDensity::new(x_grid.to_vec(), values, eps)
}
