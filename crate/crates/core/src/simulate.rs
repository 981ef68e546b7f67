//! Monte Carlo replication of the Kendall-tau spectral experiment, plus the
//! population Kendall-tau spectrum estimator.
//!
//! Every replication `r` draws from its own ChaCha8 stream seeded with
//! [`replication_seed`]`(master, r)`, so results do not depend on how
//! replications are scheduled across workers.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::linspace;
use crate::kendall::{kendall_tau_with, Accumulation, DegeneratePolicy, SampleMatrix};
use crate::linalg;
use crate::lsd_solver::{density_from_stieltjes, SolverConfig, SpectralMeasure};
use crate::mp_law::{ise_against, mp_cdf, mp_density, MpParams, ISE_GRID_POINTS};
use crate::spectra::{eigenvalues_symmetric, kernel_smooth, SmoothedDensity, SpectralDistribution};

pub const DEFAULT_REPLICATIONS: usize = 500;
pub const DEFAULT_BANDWIDTH: f64 = 0.02;
/// Points on the grid the per-replication densities are evaluated on.
pub const DENSITY_GRID_POINTS: usize = 2048;
/// The density grid extends this many bandwidths past each end of the support.
pub const DENSITY_GRID_MARGIN: f64 = 10.0;
/// Height above the real axis for inverting a non-MP target.
pub const TARGET_INVERSION_EPS: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeneratorFamily {
    /// `N(0, param)`
    Normal,
    /// `Uniform(0, param)`
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub family: GeneratorFamily,
    pub param: f64,
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn new(family: GeneratorFamily, param: f64, seed: u64) -> Result<Self> {
        let spec = Self { family, param, seed };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.param > 0.0 && self.param.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "generator parameter must be positive, got {}",
                self.param
            )));
        }
        Ok(())
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }
}

/// SplitMix64 finalizer.
fn mix64(mut x: u64) -> u64 {
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed of replication `r`: `mix64(master + (r + 1) · φ)` with
/// `φ = 0x9E3779B97F4A7C15`, i.e. the `(r + 1)`-th SplitMix64 output of the
/// stream started at `master`.
pub fn replication_seed(master: u64, replication: u64) -> u64 {
    mix64(master.wrapping_add(replication.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)))
}

/// `p × n` i.i.d. entries, filled sample by sample.
///
/// `N(0, v)` is drawn as `√v` times the standard normal stream and
/// `U(0, u)` as `u` times the `U(0, 1)` stream, so generators that differ
/// only in scale produce exactly proportional matrices at the same seed.
pub fn generate(spec: &GeneratorSpec, p: usize, n: usize) -> Result<SampleMatrix> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let len = p * n;
    let values: Vec<f64> = match spec.family {
        GeneratorFamily::Normal => {
            let scale = spec.param.sqrt();
            (0..len).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect()
        }
        GeneratorFamily::Uniform => (0..len).map(|_| spec.param * rng.random::<f64>()).collect(),
    };
    SampleMatrix::from_column_major(p, n, values)
}

/// Symmetric square root `A` with `A A = Σ`, via eigendecomposition with
/// slightly negative eigenvalues clamped to zero.
pub fn psd_sqrt(sigma: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    linalg::require_symmetric(sigma, 1e-8)?;
    let eig = linalg::symmetric_eigen(sigma)?;
    let scale = eig.values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let min = eig.values[0];
    if min < -1e-10 * scale {
        return Err(Error::NotPsd { min_eigenvalue: min });
    }
    let roots = DVector::from_iterator(eig.values.len(), eig.values.iter().map(|v| v.max(0.0).sqrt()));
    let a = &eig.vectors * DMatrix::from_diagonal(&roots) * eig.vectors.transpose();
    Ok(linalg::symmetrize(a))
}

/// One Monte Carlo design: `X_i = μ + Σ^{1/2} Z_i`, `i = 1..n`, repeated
/// `replications` times.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub n: usize,
    pub p: usize,
    pub mu: Option<Vec<f64>>,
    pub sigma: Option<DMatrix<f64>>,
    pub generator: GeneratorSpec,
    pub replications: usize,
    pub bandwidth: f64,
}

impl ModelSpec {
    /// Identity `Σ`, no shift, default replications and bandwidth.
    pub fn new(n: usize, p: usize, generator: GeneratorSpec) -> Self {
        Self {
            n,
            p,
            mu: None,
            sigma: None,
            generator,
            replications: DEFAULT_REPLICATIONS,
            bandwidth: DEFAULT_BANDWIDTH,
        }
    }

    pub fn aspect_ratio(&self) -> f64 {
        self.p as f64 / self.n as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.p < 1 {
            return Err(Error::InvalidInput("p must be at least 1".into()));
        }
        if self.n < 2 {
            return Err(Error::InsufficientSamples { needed: 2, got: self.n });
        }
        if self.replications < 1 {
            return Err(Error::InvalidInput("replications must be at least 1".into()));
        }
        if !(self.bandwidth > 0.0 && self.bandwidth.is_finite()) {
            return Err(Error::InvalidInput(format!("bandwidth must be positive, got {}", self.bandwidth)));
        }
        if let Some(mu) = &self.mu {
            if mu.len() != self.p {
                return Err(Error::InvalidInput(format!("mu has length {}, expected p = {}", mu.len(), self.p)));
            }
        }
        if let Some(sigma) = &self.sigma {
            if sigma.shape() != (self.p, self.p) {
                return Err(Error::ShapeMismatch {
                    left: sigma.shape(),
                    right: (self.p, self.p),
                });
            }
        }
        self.generator.validate()
    }

    /// `½ tr Σ` (`½ p` when `Σ` is the identity).
    pub fn spectrum_scale(&self) -> f64 {
        0.5 * self.sigma.as_ref().map_or(self.p as f64, |s| s.trace())
    }
}

/// The law the smoothed spectra are compared against.
#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    Mp(MpParams),
    Measure(SpectralMeasure),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Worker threads; any value gives bit-identical results.
    pub workers: usize,
    pub keep_eigenvalues: bool,
    pub keep_densities: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            workers: 1,
            keep_eigenvalues: false,
            keep_densities: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    /// Pointwise mean of the per-replication kernel densities.
    pub averaged_density: SmoothedDensity,
    pub per_replication_ise: Vec<f64>,
    pub mean_ise: f64,
    /// Integration interval of the ISE (support, or support bounds).
    pub ise_interval: (f64, f64),
    /// Target density on the averaged-density grid.
    pub target_density: Vec<f64>,
    /// Target CDF on the same grid (closed form for MP, cumulative
    /// trapezoid of the inverted density otherwise).
    pub target_cdf: Vec<f64>,
    /// Sorted eigenvalues of the scaled matrix, one list per replication.
    pub eigenvalues: Option<Vec<Vec<f64>>>,
    /// Per-replication density values on `averaged_density.grid`.
    pub densities: Option<Vec<Vec<f64>>>,
}

impl ExperimentResult {
    /// All replications' eigenvalues in one list.
    pub fn eigenvalue_pool(&self) -> Option<Vec<f64>> {
        self.eigenvalues.as_ref().map(|e| e.iter().flatten().copied().collect())
    }

    /// Target CDF at `x`, linear between grid points, 0/1 outside.
    pub fn target_cdf_at(&self, x: f64) -> f64 {
        let grid = &self.averaged_density.grid;
        if x <= grid[0] {
            return 0.0;
        }
        if x >= grid[grid.len() - 1] {
            return 1.0;
        }
        let k = grid.partition_point(|&g| g <= x) - 1;
        let t = (x - grid[k]) / (grid[k + 1] - grid[k]);
        (1.0 - t) * self.target_cdf[k] + t * self.target_cdf[k + 1]
    }
}

struct PreparedTarget {
    interval: (f64, f64),
    ise_curve: Option<SmoothedDensity>,
    params: Option<MpParams>,
}

impl PreparedTarget {
    fn new(target: &Target, y: f64) -> Result<Self> {
        match target {
            Target::Mp(params) => Ok(Self {
                interval: params.support(),
                ise_curve: None,
                params: Some(*params),
            }),
            Target::Measure(h) => {
                let (a, b) = h.support_bounds(y);
                let grid = linspace(a, b, ISE_GRID_POINTS);
                let curve = density_from_stieltjes(h, y, &grid, TARGET_INVERSION_EPS, &SolverConfig::default(), false)?;
                Ok(Self {
                    interval: (a, b),
                    ise_curve: Some(curve),
                    params: None,
                })
            }
        }
    }

    fn density(&self, x: f64) -> f64 {
        match (&self.params, &self.ise_curve) {
            (Some(p), _) => mp_density(*p, x),
            (None, Some(curve)) => curve.interpolate(x),
            (None, None) => unreachable!("target has neither closed form nor curve"),
        }
    }

    fn cdf_on(&self, grid: &[f64], density: &[f64]) -> Vec<f64> {
        if let Some(p) = &self.params {
            return grid.iter().map(|&x| mp_cdf(*p, x)).collect();
        }
        let mut acc = 0.0;
        let mut out = Vec::with_capacity(grid.len());
        out.push(0.0);
        for k in 1..grid.len() {
            acc += 0.5 * (density[k] + density[k - 1]) * (grid[k] - grid[k - 1]);
            out.push(acc.min(1.0));
        }
        out
    }

    fn ise(&self, fhat: &SmoothedDensity) -> Result<f64> {
        let (a, b) = self.interval;
        ise_against(fhat, a, b, |x| self.density(x))
    }
}

struct Replication {
    eigenvalues: Vec<f64>,
    density: Vec<f64>,
    ise: f64,
}

/// Eigenvalues of `scale · K_n` for one replication's data.
pub fn scaled_kendall_spectrum(x: &SampleMatrix, scale: f64) -> Result<SpectralDistribution> {
    let k = kendall_tau_with(x, DegeneratePolicy::Error, Accumulation::Laplacian)?;
    eigenvalues_symmetric(&(k.into_inner() * scale))
}

/// Draws replication `r`'s data `X = μ + Σ^{1/2} Z`.
pub fn replication_data(model: &ModelSpec, sqrt_sigma: Option<&DMatrix<f64>>, r: usize) -> Result<SampleMatrix> {
    let spec = model.generator.with_seed(replication_seed(model.generator.seed, r as u64));
    let z = generate(&spec, model.p, model.n)?;
    if sqrt_sigma.is_none() && model.mu.is_none() {
        return Ok(z);
    }
    let mut x = match sqrt_sigma {
        Some(a) => a * z.data(),
        None => z.into_inner(),
    };
    if let Some(mu) = &model.mu {
        let mu = DVector::from_column_slice(mu);
        for mut col in x.column_iter_mut() {
            col += &mu;
        }
    }
    SampleMatrix::new(x)
}

/// Runs the experiment with default options.
pub fn run_experiment(model: &ModelSpec, target: &Target) -> Result<ExperimentResult> {
    run_experiment_with(model, target, RunOptions::default())
}

pub fn run_experiment_with(model: &ModelSpec, target: &Target, options: RunOptions) -> Result<ExperimentResult> {
    model.validate()?;
    let y = model.aspect_ratio();
    let prepared = PreparedTarget::new(target, y)?;
    let sqrt_sigma = model.sigma.as_ref().map(psd_sqrt).transpose()?;
    let scale = model.spectrum_scale();
    let h = model.bandwidth;

    let (a, b) = prepared.interval;
    let margin = DENSITY_GRID_MARGIN * h;
    let grid = linspace(a - margin, b + margin, DENSITY_GRID_POINTS);

    let one = |r: usize| -> Result<Replication> {
        let x = replication_data(model, sqrt_sigma.as_ref(), r)?;
        let spectrum = scaled_kendall_spectrum(&x, scale)?;
        let density = kernel_smooth(&spectrum, h, &grid)?;
        let ise = prepared.ise(&density)?;
        Ok(Replication {
            eigenvalues: spectrum.into_eigenvalues(),
            density: density.values,
            ise,
        })
    };
    let tagged = |r: usize| one(r).map_err(|e| Error::Replication { replication: r, source: Box::new(e) });

    let results: Vec<Result<Replication>> = if options.workers > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(options.workers)
            .build()
            .map_err(|e| Error::InvalidInput(format!("cannot start worker pool: {e}")))?;
        pool.install(|| (0..model.replications).into_par_iter().map(tagged).collect())
    } else {
        (0..model.replications).map(tagged).collect()
    };
    let reps: Vec<Replication> = results.into_iter().collect::<Result<_>>()?;

    // Fixed-index accumulation: identical for every schedule.
    let mut sum = vec![0.0; grid.len()];
    for rep in &reps {
        for (s, v) in sum.iter_mut().zip(&rep.density) {
            *s += v;
        }
    }
    let count = reps.len() as f64;
    let averaged = SmoothedDensity::new(grid.clone(), sum.into_iter().map(|s| s / count).collect(), h)?;
    let per_replication_ise: Vec<f64> = reps.iter().map(|r| r.ise).collect();
    let mean_ise = per_replication_ise.iter().sum::<f64>() / count;
    let target_density: Vec<f64> = grid.iter().map(|&x| prepared.density(x)).collect();
    let target_cdf = prepared.cdf_on(&grid, &target_density);

    let (eigenvalues, densities) = {
        let mut eigs = Vec::new();
        let mut dens = Vec::new();
        for rep in reps {
            if options.keep_eigenvalues {
                eigs.push(rep.eigenvalues);
            }
            if options.keep_densities {
                dens.push(rep.density);
            }
        }
        (
            options.keep_eigenvalues.then_some(eigs),
            options.keep_densities.then_some(dens),
        )
    };

    Ok(ExperimentResult {
        averaged_density: averaged,
        per_replication_ise,
        mean_ise,
        ise_interval: prepared.interval,
        target_density,
        target_cdf,
        eigenvalues,
        densities,
    })
}

/// Monte Carlo estimate of the population Kendall-tau spectrum
/// `E[λ_j g_j² / Σ_k λ_k g_k²]`, `g ~ N(0, I)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationSpectrum {
    pub values: Vec<f64>,
    /// Standard error of each entry.
    pub std_errors: Vec<f64>,
    pub samples: usize,
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

pub fn population_kendall_spectrum(sigma_eigs: &[f64], mc_samples: usize, seed: u64) -> Result<PopulationSpectrum> {
    if sigma_eigs.is_empty() {
        return Err(Error::InvalidInput("empty spectrum".into()));
    }
    if sigma_eigs.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::InvalidInput("population eigenvalues must be finite and >= 0".into()));
    }
    if sigma_eigs.iter().all(|&v| v == 0.0) {
        return Err(Error::AllZeroSpectrum);
    }
    if mc_samples < 1 {
        return Err(Error::InvalidInput("mc_samples must be at least 1".into()));
    }

    let p = sigma_eigs.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sums = vec![CompensatedSum::default(); p];
    let mut sq_sums = vec![CompensatedSum::default(); p];
    let mut terms = vec![0.0; p];
    let mut drawn = 0usize;
    while drawn < mc_samples {
        let mut total = 0.0;
        for (t, &lambda) in terms.iter_mut().zip(sigma_eigs) {
            let g: f64 = rng.sample(StandardNormal);
            *t = lambda * g * g;
            total += *t;
        }
        if total == 0.0 {
            // Only reachable when every nonzero λ_j drew g_j = 0 exactly.
            continue;
        }
        for j in 0..p {
            let ratio = terms[j] / total;
            sums[j].add(ratio);
            sq_sums[j].add(ratio * ratio);
        }
        drawn += 1;
    }

    let nf = mc_samples as f64;
    let values: Vec<f64> = sums.iter().map(|s| s.value() / nf).collect();
    let std_errors = values
        .iter()
        .zip(&sq_sums)
        .map(|(&mean, sq)| {
            if mc_samples < 2 {
                return f64::NAN;
            }
            let var = ((sq.value() / nf - mean * mean) * nf / (nf - 1.0)).max(0.0);
            (var / nf).sqrt()
        })
        .collect();
    Ok(PopulationSpectrum {
        values,
        std_errors,
        samples: mc_samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn same_seed_same_matrix() {
        let spec = GeneratorSpec::new(GeneratorFamily::Normal, 1.0, 7).unwrap();
        assert_eq!(generate(&spec, 3, 5).unwrap(), generate(&spec, 3, 5).unwrap());
        let other = spec.with_seed(8);
        assert_ne!(generate(&spec, 3, 5).unwrap(), generate(&other, 3, 5).unwrap());
    }

    #[test]
    fn scaled_streams_are_proportional() {
        let n1 = generate(&GeneratorSpec::new(GeneratorFamily::Normal, 1.0, 3).unwrap(), 4, 6).unwrap();
        let n2 = generate(&GeneratorSpec::new(GeneratorFamily::Normal, 2.0, 3).unwrap(), 4, 6).unwrap();
        assert_relative_eq!(n1.data() * 2.0_f64.sqrt(), n2.data().clone(), epsilon = 1e-15);
        let u1 = generate(&GeneratorSpec::new(GeneratorFamily::Uniform, 1.0, 3).unwrap(), 4, 6).unwrap();
        let u2 = generate(&GeneratorSpec::new(GeneratorFamily::Uniform, 2.0, 3).unwrap(), 4, 6).unwrap();
        assert_eq!(u1.data() * 2.0, u2.data().clone());
    }

    #[test]
    fn replication_seeds_distinct() {
        let seeds: std::collections::HashSet<u64> = (0..1000).map(|r| replication_seed(42, r)).collect();
        assert_eq!(seeds.len(), 1000);
        assert_ne!(replication_seed(0, 0), replication_seed(1, 0));
    }

    #[test]
    fn bad_generator_param() {
        assert!(GeneratorSpec::new(GeneratorFamily::Uniform, 0.0, 1).is_err());
        assert!(GeneratorSpec::new(GeneratorFamily::Normal, -1.0, 1).is_err());
    }

    #[test]
    fn psd_sqrt_diagonal_and_identity() {
        let id = DMatrix::<f64>::identity(3, 3);
        assert_relative_eq!(psd_sqrt(&id).unwrap(), id.clone(), epsilon = 1e-15);
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 1.0]));
        let expected = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 1.0]));
        assert_relative_eq!(psd_sqrt(&d).unwrap(), expected, epsilon = 1e-14);
    }

    #[test]
    fn psd_sqrt_rejects_indefinite() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(psd_sqrt(&m), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn model_validation() {
        let g = GeneratorSpec::new(GeneratorFamily::Normal, 1.0, 1).unwrap();
        let mut m = ModelSpec::new(1, 1, g);
        assert!(m.validate().is_err());
        m.n = 2;
        assert!(m.validate().is_ok());
        m.mu = Some(vec![0.0, 1.0]);
        assert!(m.validate().is_err());
        m.mu = None;
        m.bandwidth = 0.0;
        assert!(m.validate().is_err());
    }

    #[test]
    fn smoke_single_replication() {
        let g = GeneratorSpec::new(GeneratorFamily::Normal, 1.0, 5).unwrap();
        let model = ModelSpec {
            replications: 1,
            ..ModelSpec::new(2, 1, g)
        };
        // p/n = 0.5
        let target = Target::Mp(MpParams::kendall(0.5).unwrap());
        let res = run_experiment_with(&model, &target, RunOptions { keep_eigenvalues: true, ..Default::default() }).unwrap();
        let eigs = res.eigenvalues.as_ref().unwrap();
        assert_eq!(eigs.len(), 1);
        // ½ p K_n with p = 1 is the scalar ½.
        assert_relative_eq!(eigs[0][0], 0.5, epsilon = 1e-15);
        let bump = kernel_smooth(&SpectralDistribution::new(vec![0.5]).unwrap(), model.bandwidth, &res.averaged_density.grid).unwrap();
        assert_relative_eq!(
            DVector::from_vec(res.averaged_density.values.clone()),
            DVector::from_vec(bump.values),
            epsilon = 1e-12,
            max_relative = 1e-9
        );
        assert_eq!(res.mean_ise, res.per_replication_ise[0]);
    }

    #[test]
    fn population_spectrum_validation() {
        assert!(matches!(population_kendall_spectrum(&[0.0, 0.0], 10, 1), Err(Error::AllZeroSpectrum)));
        assert!(population_kendall_spectrum(&[-1.0, 1.0], 10, 1).is_err());
        assert!(population_kendall_spectrum(&[1.0], 0, 1).is_err());
        let single = population_kendall_spectrum(&[3.0], 5, 1).unwrap();
        assert_eq!(single.values, vec![1.0]);
    }

    #[test]
    fn compensated_sum_beats_naive() {
        let mut s = CompensatedSum::default();
        s.add(1.0);
        for _ in 0..10 {
            s.add(1e-16);
        }
        assert_relative_eq!(s.value(), 1.0 + 1e-15, epsilon = 1e-16);
    }
}
