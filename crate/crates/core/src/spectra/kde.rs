use serde::{Deserialize, Serialize};

use super::SpectralDistribution;
use crate::error::{Error, Result};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// A density curve sampled on a strictly increasing grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothedDensity {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub bandwidth: f64,
}

impl SmoothedDensity {
    pub fn new(grid: Vec<f64>, values: Vec<f64>, bandwidth: f64) -> Result<Self> {
        check_grid(&grid)?;
        if values.len() != grid.len() {
            return Err(Error::InvalidInput(format!(
                "{} values for {} grid points",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite density value".into()));
        }
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(Error::InvalidInput(format!("bandwidth must be positive, got {bandwidth}")));
        }
        Ok(Self {
            grid,
            values,
            bandwidth,
        })
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Trapezoid integral over the whole grid.
    pub fn integral(&self) -> f64 {
        trapezoid(&self.grid, &self.values)
    }

    /// Linear interpolation; zero outside the grid.
    pub fn interpolate(&self, x: f64) -> f64 {
        let g = &self.grid;
        if x < g[0] || x > g[g.len() - 1] {
            return 0.0;
        }
        let k = g.partition_point(|&v| v <= x);
        if k == g.len() {
            return self.values[g.len() - 1];
        }
        let (x0, x1) = (g[k - 1], g[k]);
        let t = (x - x0) / (x1 - x0);
        self.values[k - 1] * (1.0 - t) + self.values[k] * t
    }
}

pub(crate) fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if grid.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite grid point".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("grid must be strictly increasing".into()));
    }
    Ok(())
}

pub(crate) fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1]))
        .sum()
}

/// Gaussian-kernel density `(1/(p h)) Σ φ((x − λ_i)/h)` on `grid`.
pub fn kernel_smooth(f: &SpectralDistribution, h: f64, grid: &[f64]) -> Result<SmoothedDensity> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidInput(format!("bandwidth must be positive, got {h}")));
    }
    check_grid(grid)?;
    let norm = INV_SQRT_2PI / (f.len() as f64 * h);
    let values = grid
        .iter()
        .map(|&x| {
            f.eigenvalues()
                .iter()
                .map(|&lambda| {
                    let u = (x - lambda) / h;
                    (-0.5 * u * u).exp()
                })
                .sum::<f64>()
                * norm
        })
        .collect();
    Ok(SmoothedDensity {
        grid: grid.to_vec(),
        values,
        bandwidth: h,
    })
}
