//! File formats.
//!
//! * Sample matrices: headerless CSV (rows = dimensions, columns = samples)
//!   or the `KSPC` binary layout: magic `b"KSPC"`, `u32` p, `u32` n, then
//!   `p·n` little-endian `f64` in column-major order.
//! * Curves and tables: CSV with a `x,value`-style header row, optionally
//!   preceded by `#` comment lines (used to echo the resolved config).
//! * Densities, spectra, measures: JSON.
//!
//! Floats are written as the shortest decimal that round-trips.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kendall::SampleMatrix;
use crate::lsd_solver::SpectralMeasure;
use crate::spectra::{SmoothedDensity, SpectralDistribution};

pub const KSPC_MAGIC: &[u8; 4] = b"KSPC";

/// Shortest round-trip decimal.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        let mut buf = ryu::Buffer::new();
        buf.format_finite(v).to_owned()
    } else if v.is_nan() {
        "NaN".to_owned()
    } else if v > 0.0 {
        "inf".to_owned()
    } else {
        "-inf".to_owned()
    }
}

fn parse_f64(s: &str, line: usize) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::Format(format!("line {line}: cannot parse {:?} as a number", s.trim())))
}

fn is_skippable(line: &str) -> bool {
    let t = line.trim();
    t.is_empty() || t.starts_with('#')
}

// ---------------------------------------------------------------- matrices

pub fn write_matrix_csv<W: Write>(mut w: W, m: &DMatrix<f64>, comments: &[String]) -> Result<()> {
    for c in comments {
        writeln!(w, "# {c}")?;
    }
    for r in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|c| fmt_f64(m[(r, c)])).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn read_matrix_csv<R: BufRead>(r: R) -> Result<DMatrix<f64>> {
    read_matrix_csv_commented(r).map(|(_, m)| m)
}

/// Like [`read_matrix_csv`], also returning the leading `#` comments.
pub fn read_matrix_csv_commented<R: BufRead>(r: R) -> Result<(Vec<String>, DMatrix<f64>)> {
    let mut comments = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, line) in r.lines().enumerate() {
        let line = line?;
        if let Some(c) = line.trim().strip_prefix('#') {
            if rows.is_empty() {
                comments.push(c.strip_prefix(' ').unwrap_or(c).to_owned());
            }
            continue;
        }
        if is_skippable(&line) {
            continue;
        }
        let row = line
            .split(',')
            .map(|s| parse_f64(s, idx + 1))
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Format(format!(
                    "line {}: expected {} columns, found {}",
                    idx + 1,
                    first.len(),
                    row.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Format("matrix file has no rows".into()));
    }
    let ncols = rows[0].len();
    Ok((comments, DMatrix::from_fn(rows.len(), ncols, |r, c| rows[r][c])))
}

pub fn write_kspc<W: Write>(mut w: W, m: &DMatrix<f64>) -> Result<()> {
    let p = u32::try_from(m.nrows()).map_err(|_| Error::Format("too many rows for KSPC".into()))?;
    let n = u32::try_from(m.ncols()).map_err(|_| Error::Format("too many columns for KSPC".into()))?;
    w.write_all(KSPC_MAGIC)?;
    w.write_all(&p.to_le_bytes())?;
    w.write_all(&n.to_le_bytes())?;
    // nalgebra storage is column-major already.
    for v in m.iter() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_kspc<R: Read>(mut r: R) -> Result<DMatrix<f64>> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != KSPC_MAGIC {
        return Err(Error::Format("missing KSPC magic".into()));
    }
    let mut word = [0u8; 4];
    r.read_exact(&mut word)?;
    let p = u32::from_le_bytes(word) as usize;
    r.read_exact(&mut word)?;
    let n = u32::from_le_bytes(word) as usize;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != p * n * 8 {
        return Err(Error::Format(format!(
            "KSPC header says {p}x{n} ({} bytes of data), found {} bytes",
            p * n * 8,
            bytes.len()
        )));
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    Ok(DMatrix::from_vec(p, n, values))
}

/// Reads a matrix from a KSPC or CSV file, sniffing the magic bytes.
pub fn read_matrix_file(path: &Path) -> Result<DMatrix<f64>> {
    let mut file = BufReader::new(File::open(path)?);
    let is_kspc = file.fill_buf()?.starts_with(KSPC_MAGIC);
    if is_kspc {
        read_kspc(file)
    } else {
        read_matrix_csv(file)
    }
}

pub fn read_sample_matrix(path: &Path) -> Result<SampleMatrix> {
    SampleMatrix::new(read_matrix_file(path)?)
}

pub fn write_matrix_file(path: &Path, m: &DMatrix<f64>, binary: bool, comments: &[String]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    if binary {
        write_kspc(&mut w, m)?;
    } else {
        write_matrix_csv(&mut w, m, comments)?;
    }
    w.flush()?;
    Ok(())
}

// ------------------------------------------------------------------ tables

/// A CSV table with named columns and leading comment lines.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub comments: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            comments: Vec::new(),
            columns: columns.iter().map(|s| (*s).to_owned()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn with_comments(mut self, comments: Vec<String>) -> Self {
        self.comments = comments;
        self
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let idx = self
            .columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::Format(format!("missing column {name:?}")))?;
        Ok(self.rows.iter().map(|r| r[idx]).collect())
    }

    /// Value of a `# key: value` comment.
    pub fn comment_value(&self, key: &str) -> Option<&str> {
        self.comments.iter().find_map(|c| {
            let (k, v) = c.split_once(':')?;
            (k.trim() == key).then(|| v.trim())
        })
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        for c in &self.comments {
            writeln!(w, "# {c}")?;
        }
        writeln!(w, "{}", self.columns.join(","))?;
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(r: R) -> Result<Self> {
        let mut comments = Vec::new();
        let mut columns: Option<Vec<String>> = None;
        let mut rows = Vec::new();
        for (idx, line) in r.lines().enumerate() {
            let line = line?;
            let t = line.trim();
            if let Some(c) = t.strip_prefix('#') {
                if columns.is_none() {
                    comments.push(c.strip_prefix(' ').unwrap_or(c).to_owned());
                }
                continue;
            }
            if t.is_empty() {
                continue;
            }
            match &columns {
                None => columns = Some(t.split(',').map(|s| s.trim().to_owned()).collect()),
                Some(cols) => {
                    let row = t
                        .split(',')
                        .map(|s| parse_f64(s, idx + 1))
                        .collect::<Result<Vec<f64>>>()?;
                    if row.len() != cols.len() {
                        return Err(Error::Format(format!(
                            "line {}: expected {} columns, found {}",
                            idx + 1,
                            cols.len(),
                            row.len()
                        )));
                    }
                    rows.push(row);
                }
            }
        }
        let columns = columns.ok_or_else(|| Error::Format("table has no header row".into()))?;
        Ok(Self { comments, columns, rows })
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn read_file(path: &Path) -> Result<Self> {
        Self::read(BufReader::new(File::open(path)?))
    }
}

// ------------------------------------------------- spectra and densities

/// Columns `x` (eigenvalue) and `value` (ESD at that eigenvalue).
pub fn spectrum_table(f: &SpectralDistribution, comments: Vec<String>) -> Table {
    let mut t = Table::new(&["x", "value"]).with_comments(comments);
    for &x in f.eigenvalues() {
        t.push(vec![x, f.cdf(x)]);
    }
    t
}

/// Reads eigenvalues from the `x` column, or from the only column if the
/// table has one (e.g. a flattened eigenvalue pool).
pub fn spectrum_from_table(t: &Table) -> Result<SpectralDistribution> {
    let xs = if t.columns.len() == 1 {
        t.rows.iter().map(|r| r[0]).collect()
    } else {
        t.column("x")?
    };
    SpectralDistribution::new(xs)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpectrumJson {
    eigenvalues: Vec<f64>,
}

pub fn spectrum_to_json(f: &SpectralDistribution) -> Result<String> {
    Ok(serde_json::to_string(&SpectrumJson {
        eigenvalues: f.eigenvalues().to_vec(),
    })?)
}

pub fn spectrum_from_json(s: &str) -> Result<SpectralDistribution> {
    let raw: SpectrumJson = serde_json::from_str(s)?;
    SpectralDistribution::new(raw.eigenvalues)
}

/// Columns `x`, `value`; the bandwidth travels in a `# bandwidth:` comment.
pub fn density_table(d: &SmoothedDensity, mut comments: Vec<String>) -> Table {
    comments.retain(|c| !c.starts_with("bandwidth:"));
    comments.push(format!("bandwidth: {}", fmt_f64(d.bandwidth)));
    let mut t = Table::new(&["x", "value"]).with_comments(comments);
    for (&x, &v) in d.grid.iter().zip(&d.values) {
        t.push(vec![x, v]);
    }
    t
}

pub fn density_from_table(t: &Table) -> Result<SmoothedDensity> {
    let bandwidth = match t.comment_value("bandwidth") {
        Some(v) => parse_f64(v, 0)?,
        None => return Err(Error::Format("density table lacks a bandwidth comment".into())),
    };
    let value_col = if t.columns.iter().any(|c| c == "value") { "value" } else { "f" };
    SmoothedDensity::new(t.column("x")?, t.column(value_col)?, bandwidth)
}

pub fn density_to_json(d: &SmoothedDensity) -> Result<String> {
    Ok(serde_json::to_string(d)?)
}

pub fn density_from_json(s: &str) -> Result<SmoothedDensity> {
    let d: SmoothedDensity = serde_json::from_str(s)?;
    SmoothedDensity::new(d.grid, d.values, d.bandwidth)
}

pub fn measure_from_json(s: &str) -> Result<SpectralMeasure> {
    Ok(serde_json::from_str(s)?)
}

pub fn measure_to_json(m: &SpectralMeasure) -> Result<String> {
    Ok(serde_json::to_string(m)?)
}
