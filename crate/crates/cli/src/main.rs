use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod error;
mod manifest;

#[derive(Parser)]
#[command(name = "kspec", version, about = "Spectra of multivariate Kendall-tau matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Kendall-tau matrix K_n of a sample matrix (rows = dimensions).
    Kendall(KendallArgs),
    /// Eigenvalues and ESD of ½·p·K_n (or of a symmetric matrix).
    Eigs(EigsArgs),
    /// Marčenko–Pastur density, CDF and Stieltjes transform.
    Mp(MpArgs),
    /// Limiting Stieltjes transform and density for a population measure.
    LsdSolve(LsdArgs),
    /// Monte Carlo experiment from a manifest.
    Simulate(SimulateArgs),
    /// Lévy, Kolmogorov and ISE distances between a result and a target.
    Compare(CompareArgs),
    /// Population Kendall-tau spectrum by Monte Carlo.
    PopulationSpectrum(PopulationArgs),
}

#[derive(Args)]
pub struct KendallArgs {
    /// Sample matrix, CSV or KSPC binary.
    pub input: PathBuf,
    #[arg(short, long)]
    pub out: PathBuf,
    /// Drop coincident sample pairs instead of failing.
    #[arg(long)]
    pub skip_degenerate: bool,
    /// pairwise (lexicographic fold) or laplacian.
    #[arg(long, default_value = "pairwise")]
    pub accumulation: String,
    /// Write KSPC binary instead of CSV.
    #[arg(long)]
    pub binary: bool,
}

#[derive(Args)]
pub struct EigsArgs {
    pub input: PathBuf,
    #[arg(short, long)]
    pub out: PathBuf,
    /// `half-p`, `none`, or a number multiplying the matrix.
    #[arg(long, default_value = "half-p")]
    pub scale: String,
    /// The input is already a symmetric matrix (e.g. `kendall` output).
    #[arg(long)]
    pub symmetric: bool,
    #[arg(long)]
    pub skip_degenerate: bool,
    /// Write JSON instead of CSV.
    #[arg(long)]
    pub json: bool,
}

#[derive(Args)]
pub struct MpArgs {
    #[arg(long)]
    pub y: f64,
    #[arg(long, default_value_t = 0.5)]
    pub sigma2: f64,
    /// Points in the density grid over the support.
    #[arg(long, default_value_t = 512)]
    pub grid: usize,
    /// `default` or a CSV with columns re_z,im_z.
    #[arg(long, default_value = "default")]
    pub z_grid: String,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Args)]
#[command(group(clap::ArgGroup::new("population").required(true).args(["measure", "sigma"])))]
pub struct LsdArgs {
    /// Spectral measure JSON, `{"atoms": [[tau, w], ...]}`.
    #[arg(long)]
    pub measure: Option<PathBuf>,
    /// Population covariance Σ; the measure is the spectrum of Σ/2.
    #[arg(long)]
    pub sigma: Option<PathBuf>,
    #[arg(long)]
    pub y: f64,
    #[arg(long, default_value = "default")]
    pub z_grid: String,
    #[arg(long, default_value_t = 512)]
    pub grid: usize,
    /// Height above the real axis for density inversion.
    #[arg(long, default_value_t = kspec_core::simulate::TARGET_INVERSION_EPS)]
    pub eps: f64,
    #[arg(long)]
    pub richardson: bool,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub damping: Option<f64>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Args)]
pub struct SimulateArgs {
    /// TOML manifest.
    pub manifest: PathBuf,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Worker threads; results do not depend on this.
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    /// Also write the pooled eigenvalues.
    #[arg(long)]
    pub eigenvalues: bool,
    /// Bins of the pooled-eigenvalue histogram.
    #[arg(long, default_value_t = 100)]
    pub bins: usize,
}

#[derive(Args)]
pub struct CompareArgs {
    /// Eigenvalues: a spectrum CSV (`x` column) or one-column list.
    #[arg(long)]
    pub eigs: PathBuf,
    /// Smoothed density CSV for the ISE.
    #[arg(long)]
    pub density: Option<PathBuf>,
    /// Second eigenvalue file for a two-sample comparison.
    #[arg(long)]
    pub against: Option<PathBuf>,
    /// Aspect ratio of the target law.
    #[arg(long)]
    pub y: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    pub sigma2: f64,
    /// Target the limit for this measure instead of MP.
    #[arg(long)]
    pub measure: Option<PathBuf>,
    /// Write the JSON here instead of stdout.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
#[command(group(clap::ArgGroup::new("spectrum").required(true).args(["values", "sigma"])))]
pub struct PopulationArgs {
    /// Comma-separated eigenvalues of Σ.
    #[arg(long)]
    pub values: Option<String>,
    /// Σ matrix file; its eigenvalues are used.
    #[arg(long)]
    pub sigma: Option<PathBuf>,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(short, long)]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Kendall(a) => commands::kendall(&a),
        Command::Eigs(a) => commands::eigs(&a),
        Command::Mp(a) => commands::mp(&a),
        Command::LsdSolve(a) => commands::lsd_solve(&a),
        Command::Simulate(a) => commands::simulate(&a),
        Command::Compare(a) => commands::compare(&a),
        Command::PopulationSpectrum(a) => commands::population_spectrum(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("kspec: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
