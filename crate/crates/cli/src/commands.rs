//! Subcommand implementations.
//!
//! Every CSV written here starts with a `# config: {...}` line holding the
//! fully-resolved options as JSON; JSON outputs carry the same object under
//! `"config"`.

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde_json::{json, Value};

use kspec_core::grid::{default_z_grid, linspace};
use kspec_core::io::{self, Table};
use kspec_core::lsd_solver::solve_stieltjes;
use kspec_core::mp_law::ise_against;
use kspec_core::simulate::{ModelSpec, RunOptions, Target};
use kspec_core::{
    density_from_stieltjes, eigenvalues_symmetric, kendall_tau_with, kolmogorov_distance, levy_distance,
    levy_distance_to_cdf, kolmogorov_distance_to_cdf, measure_from_sigma, mp_cdf, mp_density, mp_stieltjes,
    mp_support, population_kendall_spectrum, run_experiment_with, Accumulation, DegeneratePolicy, GeneratorSpec,
    MpParams, SmoothedDensity, SolverConfig, SpectralDistribution, SpectralMeasure,
};

use crate::error::{CliError, CliResult, InputContext};
use crate::manifest::{Manifest, TargetKind, SEED_ENV};
use crate::{CompareArgs, EigsArgs, KendallArgs, LsdArgs, MpArgs, PopulationArgs, SimulateArgs};

/// Points used to tabulate a target CDF for distance computations.
const CDF_TABLE_POINTS: usize = 8193;

fn echo(command: &str, mut config: Value) -> String {
    config["command"] = json!(command);
    format!("config: {config}")
}

fn path_str(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

fn prepare_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::config("out-dir", format!("{}: {e}", dir.display())))
}

fn write_json(path: &Path, value: &Value) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn positive(key: &str, v: f64) -> CliResult<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::config(key, format!("must be positive, got {v}")))
    }
}

fn aspect(key: &str, y: f64) -> CliResult<f64> {
    if y > 0.0 && y < 1.0 {
        Ok(y)
    } else {
        Err(CliError::config(key, format!("must lie in (0, 1), got {y}")))
    }
}

fn grid_size(key: &str, n: usize) -> CliResult<usize> {
    if n >= 2 {
        Ok(n)
    } else {
        Err(CliError::config(key, "needs at least 2 points"))
    }
}

fn load_z_grid(spec: &str) -> CliResult<Vec<Complex64>> {
    if spec == "default" {
        return Ok(default_z_grid());
    }
    let table = Table::read_file(Path::new(spec)).for_key("z-grid")?;
    let re = table.column("re_z").for_key("z-grid")?;
    let im = table.column("im_z").for_key("z-grid")?;
    if let Some(bad) = im.iter().find(|&&v| !(v > 0.0)) {
        return Err(CliError::config("z-grid", format!("Im z must be positive, found {bad}")));
    }
    Ok(re.into_iter().zip(im).map(|(r, i)| Complex64::new(r, i)).collect())
}

fn stieltjes_table(comment: String, zs: &[Complex64], ms: &[Complex64]) -> Table {
    let mut t = Table::new(&["re_z", "im_z", "re_m", "im_m"]).with_comments(vec![comment]);
    for (z, m) in zs.iter().zip(ms) {
        t.push(vec![z.re, z.im, m.re, m.im]);
    }
    t
}

fn read_measure(path: &Path, key: &str) -> CliResult<SpectralMeasure> {
    let text = fs::read_to_string(path).map_err(|e| CliError::config(key, format!("{}: {e}", path.display())))?;
    io::measure_from_json(&text).for_key(key)
}

fn read_sigma(path: &Path, key: &str) -> CliResult<DMatrix<f64>> {
    io::read_matrix_file(path).for_key(key)
}

fn read_spectrum(path: &Path, key: &str) -> CliResult<SpectralDistribution> {
    let table = Table::read_file(path).for_key(key)?;
    io::spectrum_from_table(&table).for_key(key)
}

// ------------------------------------------------------- kendall and eigs

fn parse_accumulation(s: &str) -> CliResult<Accumulation> {
    match s {
        "pairwise" => Ok(Accumulation::PairwiseFold),
        "laplacian" => Ok(Accumulation::Laplacian),
        other => Err(CliError::config("accumulation", format!("expected pairwise or laplacian, got {other:?}"))),
    }
}

fn policy(skip: bool) -> DegeneratePolicy {
    if skip {
        DegeneratePolicy::SkipPair
    } else {
        DegeneratePolicy::Error
    }
}

pub fn kendall(args: &KendallArgs) -> CliResult<()> {
    let accumulation = parse_accumulation(&args.accumulation)?;
    let x = io::read_sample_matrix(&args.input).for_key("input")?;
    let k = kendall_tau_with(&x, policy(args.skip_degenerate), accumulation)?;
    let config = json!({
        "input": path_str(&args.input),
        "skip_degenerate": args.skip_degenerate,
        "accumulation": args.accumulation,
        "p": x.p(),
        "n": x.n(),
        "pairs_used": k.pairs_used(),
    });
    io::write_matrix_file(&args.out, k.matrix(), args.binary, &[echo("kendall", config)])?;
    Ok(())
}

enum Scale {
    HalfP,
    None,
    Factor(f64),
}

fn parse_scale(s: &str) -> CliResult<Scale> {
    match s {
        "half-p" => Ok(Scale::HalfP),
        "none" => Ok(Scale::None),
        other => other
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .map(Scale::Factor)
            .ok_or_else(|| CliError::config("scale", format!("expected half-p, none or a number, got {other:?}"))),
    }
}

pub fn eigs(args: &EigsArgs) -> CliResult<()> {
    let scale = parse_scale(&args.scale)?;
    let matrix = if args.symmetric {
        io::read_matrix_file(&args.input).for_key("input")?
    } else {
        let x = io::read_sample_matrix(&args.input).for_key("input")?;
        kendall_tau_with(&x, policy(args.skip_degenerate), Accumulation::PairwiseFold)?.into_inner()
    };
    let factor = match scale {
        Scale::HalfP => 0.5 * matrix.nrows() as f64,
        Scale::None => 1.0,
        Scale::Factor(f) => f,
    };
    let spectrum = eigenvalues_symmetric(&(matrix * factor))?;
    let config = json!({
        "input": path_str(&args.input),
        "scale": args.scale,
        "factor": factor,
        "symmetric": args.symmetric,
        "skip_degenerate": args.skip_degenerate,
    });
    if args.json {
        let mut value: Value = serde_json::from_str(&io::spectrum_to_json(&spectrum)?)?;
        let mut config = config;
        config["command"] = json!("eigs");
        value["config"] = config;
        write_json(&args.out, &value)
    } else {
        io::spectrum_table(&spectrum, vec![echo("eigs", config)]).write_file(&args.out)?;
        Ok(())
    }
}

// ------------------------------------------------------ mp and lsd-solve

pub fn mp(args: &MpArgs) -> CliResult<()> {
    let y = aspect("y", args.y)?;
    let sigma2 = positive("sigma2", args.sigma2)?;
    let points = grid_size("grid", args.grid)?;
    let zs = load_z_grid(&args.z_grid)?;
    prepare_dir(&args.out_dir)?;
    let params = MpParams::new(y, sigma2)?;
    let (a, b) = mp_support(params);
    let config = json!({
        "y": y,
        "sigma2": sigma2,
        "grid": points,
        "z_grid": args.z_grid,
        "support": [a, b],
    });
    let comment = echo("mp", config);

    let mut density = Table::new(&["x", "f", "F"]).with_comments(vec![comment.clone()]);
    for x in linspace(a, b, points) {
        density.push(vec![x, mp_density(params, x), mp_cdf(params, x)]);
    }
    density.write_file(&args.out_dir.join("density.csv"))?;

    let ms = zs.iter().map(|&z| mp_stieltjes(params, z)).collect::<kspec_core::Result<Vec<_>>>()?;
    stieltjes_table(comment, &zs, &ms).write_file(&args.out_dir.join("stieltjes.csv"))?;
    Ok(())
}

pub fn lsd_solve(args: &LsdArgs) -> CliResult<()> {
    let y = aspect("y", args.y)?;
    let points = grid_size("grid", args.grid)?;
    let eps = positive("eps", args.eps)?;
    let defaults = SolverConfig::default();
    let cfg = SolverConfig {
        tol: args.tol.unwrap_or(defaults.tol),
        max_iter: args.max_iter.unwrap_or(defaults.max_iter),
        damping: args.damping.unwrap_or(defaults.damping),
    };
    if let Err(e) = cfg.validate() {
        let key = if !(cfg.tol > 0.0) {
            "tol"
        } else if cfg.max_iter == 0 {
            "max-iter"
        } else {
            "damping"
        };
        return Err(CliError::config(key, e.to_string()));
    }
    let zs = load_z_grid(&args.z_grid)?;
    let (h, source) = match (&args.measure, &args.sigma) {
        (Some(path), _) => (read_measure(path, "measure")?, json!({"measure": path_str(path)})),
        (None, Some(path)) => {
            let sigma = read_sigma(path, "sigma")?;
            (measure_from_sigma(&sigma).for_key("sigma")?, json!({"sigma": path_str(path)}))
        }
        (None, None) => unreachable!("clap requires one of --measure/--sigma"),
    };
    prepare_dir(&args.out_dir)?;

    let (a, b) = h.support_bounds(y);
    let margin = 0.1 * (b - a);
    let mut config = json!({
        "y": y,
        "z_grid": args.z_grid,
        "grid": points,
        "eps": eps,
        "richardson": args.richardson,
        "tol": cfg.tol,
        "max_iter": cfg.max_iter,
        "damping": cfg.damping,
        "atoms": h.atoms(),
        "support_bounds": [a, b],
    });
    for (k, v) in source.as_object().expect("object") {
        config[k] = v.clone();
    }
    let comment = echo("lsd-solve", config);

    let ms = zs
        .iter()
        .map(|&z| solve_stieltjes(&h, y, z, &cfg).map(|r| r.m))
        .collect::<kspec_core::Result<Vec<_>>>()?;
    stieltjes_table(comment.clone(), &zs, &ms).write_file(&args.out_dir.join("stieltjes.csv"))?;

    let grid = linspace(a - margin, b + margin, points);
    let density = density_from_stieltjes(&h, y, &grid, eps, &cfg, args.richardson)?;
    io::density_table(&density, vec![comment]).write_file(&args.out_dir.join("density.csv"))?;
    Ok(())
}

// ---------------------------------------------------------------- simulate

fn histogram(pool: &[f64], bins: usize) -> Table {
    let mut t = Table::new(&["bin_center", "density"]);
    let lo = pool.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = pool.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut counts = vec![0usize; bins];
    for &v in pool {
        let k = (((v - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    let total = pool.len() as f64;
    for (k, &c) in counts.iter().enumerate() {
        t.push(vec![lo + (k as f64 + 0.5) * width, c as f64 / (total * width)]);
    }
    t
}

pub fn simulate(args: &SimulateArgs) -> CliResult<()> {
    if args.workers == 0 {
        return Err(CliError::config("workers", "must be at least 1"));
    }
    if args.bins == 0 {
        return Err(CliError::config("bins", "must be at least 1"));
    }
    let manifest = Manifest::load(&args.manifest)?;
    prepare_dir(&args.out_dir)?;

    let generator = GeneratorSpec::new(manifest.family, manifest.param, manifest.seed)?;
    let mut model = ModelSpec::new(manifest.n, manifest.p, generator);
    model.replications = manifest.replications;
    model.bandwidth = manifest.h;
    if let Some(path) = &manifest.sigma_file {
        let sigma = read_sigma(Path::new(path), "sigma_file")?;
        if sigma.shape() != (manifest.p, manifest.p) {
            return Err(CliError::config(
                "sigma_file",
                format!("expected a {0}x{0} matrix, found {1:?}", manifest.p, sigma.shape()),
            ));
        }
        model.sigma = Some(sigma);
    }
    let y = model.aspect_ratio();
    let target = match manifest.target {
        TargetKind::Mp => Target::Mp(MpParams::kendall(y)?),
        TargetKind::Lsd => Target::Measure(match &model.sigma {
            Some(s) => measure_from_sigma(s).for_key("sigma_file")?,
            None => SpectralMeasure::point_mass(0.5)?,
        }),
    };

    let options = RunOptions {
        workers: args.workers,
        keep_eigenvalues: true,
        keep_densities: false,
    };
    let result = run_experiment_with(&model, &target, options)?;
    let pool = SpectralDistribution::new(result.eigenvalue_pool().expect("eigenvalues kept"))?;
    let cdf = |x: f64| result.target_cdf_at(x);

    let config = manifest.to_json();
    let comment = format!("config: {config}");
    let summary = json!({
        "config": config,
        "aspect_ratio": y,
        "mean_ise": result.mean_ise,
        "per_replication_ise": result.per_replication_ise,
        "ise_interval": [result.ise_interval.0, result.ise_interval.1],
        "kolmogorov": kolmogorov_distance_to_cdf(&pool, cdf),
        "levy": levy_distance_to_cdf(&pool, cdf),
        "pooled_eigenvalues": pool.len(),
    });
    write_json(&args.out_dir.join("summary.json"), &summary)?;

    let d = &result.averaged_density;
    let mut curve = Table::new(&["x", "value", "target"]).with_comments(vec![
        comment.clone(),
        format!("bandwidth: {}", io::fmt_f64(d.bandwidth)),
    ]);
    for ((&x, &v), &t) in d.grid.iter().zip(&d.values).zip(&result.target_density) {
        curve.push(vec![x, v, t]);
    }
    curve.write_file(&args.out_dir.join("density.csv"))?;

    histogram(pool.eigenvalues(), args.bins)
        .with_comments(vec![comment.clone()])
        .write_file(&args.out_dir.join("histogram.csv"))?;

    if args.eigenvalues {
        let mut t = Table::new(&["eigenvalue"]).with_comments(vec![comment]);
        for &v in pool.eigenvalues() {
            t.push(vec![v]);
        }
        t.write_file(&args.out_dir.join("eigenvalues.csv"))?;
    }
    Ok(())
}

// ----------------------------------------------------------------- compare

/// Target CDF tabulated on a fine grid over the support, linear between.
struct TabulatedCdf {
    grid: Vec<f64>,
    values: Vec<f64>,
}

impl TabulatedCdf {
    fn eval(&self, x: f64) -> f64 {
        let g = &self.grid;
        if x <= g[0] {
            return 0.0;
        }
        if x >= g[g.len() - 1] {
            return 1.0;
        }
        let k = g.partition_point(|&v| v <= x) - 1;
        let t = (x - g[k]) / (g[k + 1] - g[k]);
        (1.0 - t) * self.values[k] + t * self.values[k + 1]
    }
}

enum Law {
    Mp(MpParams),
    Limit { curve: SmoothedDensity },
}

impl Law {
    fn interval(&self) -> (f64, f64) {
        match self {
            Law::Mp(p) => mp_support(*p),
            Law::Limit { curve } => (curve.grid[0], curve.grid[curve.grid.len() - 1]),
        }
    }

    fn density(&self, x: f64) -> f64 {
        match self {
            Law::Mp(p) => mp_density(*p, x),
            Law::Limit { curve } => curve.interpolate(x),
        }
    }

    fn cdf_table(&self) -> TabulatedCdf {
        let (a, b) = self.interval();
        let grid = linspace(a, b, CDF_TABLE_POINTS);
        let values = match self {
            Law::Mp(p) => grid.iter().map(|&x| mp_cdf(*p, x)).collect(),
            Law::Limit { .. } => {
                let mut acc = 0.0;
                let mut out = vec![0.0];
                for k in 1..grid.len() {
                    acc += 0.5 * (self.density(grid[k]) + self.density(grid[k - 1])) * (grid[k] - grid[k - 1]);
                    out.push(acc.min(1.0));
                }
                out
            }
        };
        TabulatedCdf { grid, values }
    }
}

pub fn compare(args: &CompareArgs) -> CliResult<()> {
    let spectrum = read_spectrum(&args.eigs, "eigs")?;
    let mut config = json!({ "eigs": path_str(&args.eigs) });
    let mut report = serde_json::Map::new();

    if let Some(other) = &args.against {
        let g = read_spectrum(other, "against")?;
        config["against"] = json!(path_str(other));
        report.insert("levy".into(), json!(levy_distance(&spectrum, &g)));
        report.insert("kolmogorov".into(), json!(kolmogorov_distance(&spectrum, &g)));
    }

    let law = match (args.y, &args.measure) {
        (None, None) => None,
        (None, Some(_)) => return Err(CliError::config("y", "required with --measure")),
        (Some(y), None) => {
            let y = aspect("y", y)?;
            let sigma2 = positive("sigma2", args.sigma2)?;
            config["y"] = json!(y);
            config["sigma2"] = json!(sigma2);
            Some(Law::Mp(MpParams::new(y, sigma2)?))
        }
        (Some(y), Some(path)) => {
            let y = aspect("y", y)?;
            let h = read_measure(path, "measure")?;
            config["y"] = json!(y);
            config["measure"] = json!(path_str(path));
            let (a, b) = h.support_bounds(y);
            let grid = linspace(a, b, kspec_core::mp_law::ISE_GRID_POINTS);
            let curve = density_from_stieltjes(
                &h,
                y,
                &grid,
                kspec_core::simulate::TARGET_INVERSION_EPS,
                &SolverConfig::default(),
                false,
            )?;
            Some(Law::Limit { curve })
        }
    };
    if args.against.is_none() && law.is_none() {
        return Err(CliError::config("y", "give --y (optionally with --measure) or --against"));
    }

    if let Some(law) = &law {
        let table = law.cdf_table();
        let cdf = |x: f64| table.eval(x);
        report.insert("target_levy".into(), json!(levy_distance_to_cdf(&spectrum, cdf)));
        report.insert("target_kolmogorov".into(), json!(kolmogorov_distance_to_cdf(&spectrum, cdf)));
        if let Some(path) = &args.density {
            let table = Table::read_file(path).for_key("density")?;
            let fhat = io::density_from_table(&table).for_key("density")?;
            config["density"] = json!(path_str(path));
            let (a, b) = law.interval();
            let ise = ise_against(&fhat, a, b, |x| law.density(x))?;
            report.insert("ise".into(), json!(ise));
        }
    } else if args.density.is_some() {
        return Err(CliError::config("density", "ISE needs a target law (--y)"));
    }

    config["command"] = json!("compare");
    report.insert("config".into(), config);
    let mut text = serde_json::to_string_pretty(&Value::Object(report))?;
    text.push('\n');
    match &args.out {
        Some(path) => fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

// ------------------------------------------------------ population spectrum

pub fn population_spectrum(args: &PopulationArgs) -> CliResult<()> {
    let seed = match std::env::var(SEED_ENV) {
        Ok(s) => s
            .trim()
            .parse::<u64>()
            .map_err(|_| CliError::config(SEED_ENV, format!("not an unsigned integer: {s:?}")))?,
        Err(_) => args.seed,
    };
    if args.samples == 0 {
        return Err(CliError::config("samples", "must be at least 1"));
    }
    let (eigs, source) = match (&args.values, &args.sigma) {
        (Some(list), _) => {
            let values = list
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<Result<Vec<f64>, _>>()
                .map_err(|_| CliError::config("values", format!("cannot parse {list:?}")))?;
            (values, json!({ "values": list }))
        }
        (None, Some(path)) => {
            let sigma = read_sigma(path, "sigma")?;
            let spectrum = eigenvalues_symmetric(&sigma).for_key("sigma")?;
            (spectrum.into_eigenvalues(), json!({ "sigma": path_str(path) }))
        }
        (None, None) => unreachable!("clap requires one of --values/--sigma"),
    };
    let estimate = population_kendall_spectrum(&eigs, args.samples, seed).map_err(|e| match e {
        kspec_core::Error::AllZeroSpectrum | kspec_core::Error::InvalidInput(_) => {
            CliError::config(if args.values.is_some() { "values" } else { "sigma" }, e.to_string())
        }
        other => other.into(),
    })?;

    let mut config = json!({ "samples": args.samples, "seed": seed });
    for (k, v) in source.as_object().expect("object") {
        config[k] = v.clone();
    }
    let mut t = Table::new(&["lambda_sigma", "value", "std_error"])
        .with_comments(vec![echo("population-spectrum", config)]);
    for ((&l, &v), &se) in eigs.iter().zip(&estimate.values).zip(&estimate.std_errors) {
        t.push(vec![l, v, se]);
    }
    t.write_file(&args.out)?;
    Ok(())
}
