//! Flat experiment manifest for `kspec simulate`.
//!
//! ```toml
//! family = "normal"     # or "uniform"
//! param = 1.0           # variance (normal) or upper endpoint (uniform)
//! n = 400
//! p = 200
//! R = 500
//! h = 0.02
//! seed = 0
//! sigma_file = "sigma.csv"   # optional, relative to the manifest
//! target = "mp"              # "mp" or "lsd"; default "lsd" iff sigma_file is set
//! ```

use std::path::{Path, PathBuf};

use serde::Serialize;
use toml::{Table, Value};

use kspec_core::simulate::{DEFAULT_BANDWIDTH, DEFAULT_REPLICATIONS};
use kspec_core::GeneratorFamily;

use crate::error::{CliError, CliResult};

pub const SEED_ENV: &str = "KSPEC_SEED";

const KEYS: [&str; 9] = ["family", "param", "n", "p", "R", "h", "seed", "sigma_file", "target"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetKind {
    Mp,
    Lsd,
}

/// Every key resolved, defaults expanded. Serializes back to a manifest
/// that reproduces the run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub family: GeneratorFamily,
    pub param: f64,
    pub n: usize,
    pub p: usize,
    #[serde(rename = "R")]
    pub replications: usize,
    pub h: f64,
    #[serde(serialize_with = "serialize_seed")]
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_file: Option<String>,
    pub target: TargetKind,
}

impl Manifest {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config("manifest", format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        let seed_override = std::env::var(SEED_ENV).ok();
        Self::parse(&text, base, seed_override.as_deref())
    }

    pub fn parse(text: &str, base: &Path, seed_override: Option<&str>) -> CliResult<Self> {
        let table: Table =
            toml::from_str(text).map_err(|e| CliError::config("manifest", e.message().to_owned()))?;
        if let Some(unknown) = table.keys().find(|k| !KEYS.contains(&k.as_str())) {
            return Err(CliError::config(unknown.as_str(), "unknown key"));
        }

        let family = match get_str(&table, "family")? {
            None | Some("normal") => GeneratorFamily::Normal,
            Some("uniform") => GeneratorFamily::Uniform,
            Some(other) => return Err(CliError::config("family", format!("expected \"normal\" or \"uniform\", got {other:?}"))),
        };
        let param = get_float(&table, "param")?.unwrap_or(1.0);
        if !(param > 0.0 && param.is_finite()) {
            return Err(CliError::config("param", "must be positive"));
        }
        let n = get_count(&table, "n")?.ok_or_else(|| CliError::config("n", "missing"))?;
        if n < 2 {
            return Err(CliError::config("n", "must be at least 2"));
        }
        let p = get_count(&table, "p")?.ok_or_else(|| CliError::config("p", "missing"))?;
        if p < 1 {
            return Err(CliError::config("p", "must be at least 1"));
        }
        let replications = get_count(&table, "R")?.unwrap_or(DEFAULT_REPLICATIONS);
        if replications < 1 {
            return Err(CliError::config("R", "must be at least 1"));
        }
        let h = get_float(&table, "h")?.unwrap_or(DEFAULT_BANDWIDTH);
        if !(h > 0.0 && h.is_finite()) {
            return Err(CliError::config("h", "must be positive"));
        }
        let seed = match seed_override {
            Some(s) => s
                .trim()
                .parse::<u64>()
                .map_err(|_| CliError::config(SEED_ENV, format!("not an unsigned integer: {s:?}")))?,
            None => match table.get("seed") {
                None => 0,
                Some(Value::Integer(i)) if *i >= 0 => *i as u64,
                // Seeds above i64::MAX do not fit a TOML integer.
                Some(Value::String(s)) => s
                    .parse::<u64>()
                    .map_err(|_| CliError::config("seed", format!("not an unsigned integer: {s:?}")))?,
                Some(_) => return Err(CliError::config("seed", "expected a nonnegative integer")),
            },
        };
        let sigma_file = match get_str(&table, "sigma_file")? {
            None => None,
            Some(s) => {
                let joined: PathBuf = base.join(s);
                let abs = joined
                    .canonicalize()
                    .map_err(|e| CliError::config("sigma_file", format!("{}: {e}", joined.display())))?;
                Some(abs.to_string_lossy().into_owned())
            }
        };
        let target = match get_str(&table, "target")? {
            None if sigma_file.is_some() => TargetKind::Lsd,
            None | Some("mp") => TargetKind::Mp,
            Some("lsd") => TargetKind::Lsd,
            Some(other) => return Err(CliError::config("target", format!("expected \"mp\" or \"lsd\", got {other:?}"))),
        };
        if p >= n {
            return Err(CliError::config("p", "p/n must be below 1"));
        }

        Ok(Self {
            family,
            param,
            n,
            p,
            replications,
            h,
            seed,
            sigma_file,
            target,
        })
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("manifest serializes")
    }
}

/// TOML integers are i64; larger seeds are echoed as strings.
fn serialize_seed<S: serde::Serializer>(seed: &u64, s: S) -> Result<S::Ok, S::Error> {
    match i64::try_from(*seed) {
        Ok(v) => s.serialize_i64(v),
        Err(_) => s.serialize_str(&seed.to_string()),
    }
}

fn get_str<'a>(t: &'a Table, key: &str) -> CliResult<Option<&'a str>> {
    match t.get(key) {
        None => Ok(None),
        Some(Value::String(s)) => Ok(Some(s)),
        Some(_) => Err(CliError::config(key, "expected a string")),
    }
}

fn get_float(t: &Table, key: &str) -> CliResult<Option<f64>> {
    match t.get(key) {
        None => Ok(None),
        Some(Value::Float(f)) => Ok(Some(*f)),
        Some(Value::Integer(i)) => Ok(Some(*i as f64)),
        Some(_) => Err(CliError::config(key, "expected a number")),
    }
}

fn get_count(t: &Table, key: &str) -> CliResult<Option<usize>> {
    match t.get(key) {
        None => Ok(None),
        Some(Value::Integer(i)) if *i >= 0 => Ok(Some(*i as usize)),
        Some(_) => Err(CliError::config(key, "expected a nonnegative integer")),
    }
}
