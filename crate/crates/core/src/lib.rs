//! Spectral analysis of high-dimensional multivariate Kendall-tau matrices.
//!
//! * [`kendall`]: sample matrices, `K_n`, sample covariance, the Δ_n diagnostic
//! * [`spectra`]: eigenvalues, ESDs, Stieltjes transforms, Lévy/Kolmogorov
//!   distances, kernel smoothing, perturbation-inequality checks
//! * [`mp_law`]: the Marčenko–Pastur law and ISE against it
//! * [`lsd_solver`]: the fixed-point equation for a general population spectrum
//! * [`simulate`]: the Monte Carlo replication harness
//! * [`io`]: file formats

pub mod error;
pub mod grid;
pub mod io;
pub mod kendall;
pub mod linalg;
pub mod lsd_solver;
pub mod mp_law;
pub mod quadrature;
pub mod simulate;
pub mod spectra;

pub use error::{Error, Result};
pub use kendall::{
    delta_n, kendall_tau, kendall_tau_with, sample_covariance, Accumulation, CovarianceForm, CovarianceMatrix,
    DegeneratePolicy, KendallTauMatrix, SampleMatrix,
};
pub use lsd_solver::{
    density_from_stieltjes, measure_from_sigma, solve_stieltjes, SolverConfig, SolverResult, SpectralMeasure,
};
pub use mp_law::{ise, mp_cdf, mp_density, mp_stieltjes, mp_support, MpParams};
pub use num_complex::Complex64;
pub use simulate::{
    generate, population_kendall_spectrum, psd_sqrt, run_experiment, run_experiment_with, ExperimentResult,
    GeneratorFamily, GeneratorSpec, ModelSpec, PopulationSpectrum, RunOptions, Target,
};
pub use spectra::{
    check_levy4_bound, check_levy_norm_bound, check_rank_bound, eigenvalues_symmetric, esd_eval, kernel_smooth,
    kolmogorov_distance, kolmogorov_distance_to_cdf, levy_distance, levy_distance_to_cdf, stieltjes_empirical, BoundCheck, SmoothedDensity, SpectralDistribution,
};
