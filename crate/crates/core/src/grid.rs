//! Uniform one-dimensional grids and piecewise-linear sample paths.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `n` equally spaced points from `lo` to `hi` inclusive.
///
/// Only `(lo, hi, n)` is stored; point `i` is always recomputed as
/// `lo + i * dx`, so two grids built from the same triple agree bit for bit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid")]
pub struct Grid1D {
    lo: f64,
    hi: f64,
    n: usize,
}

#[derive(Deserialize)]
struct RawGrid {
    lo: f64,
    hi: f64,
    n: usize,
}

impl TryFrom<RawGrid> for Grid1D {
    type Error = Error;

    fn try_from(r: RawGrid) -> Result<Self> {
        Grid1D::new(r.lo, r.hi, r.n)
    }
}

impl Grid1D {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::InvalidGrid(format!("non-finite bounds [{lo}, {hi}]")));
        }
        if lo >= hi {
            return Err(Error::InvalidGrid(format!("lo {lo} >= hi {hi}")));
        }
        if n < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 points, got {n}")));
        }
        Ok(Self { lo, hi, n })
    }

    /// Grid with spacing `dx` from `lo` to `hi`; `(hi - lo) / dx` must be an integer.
    pub fn with_spacing(lo: f64, hi: f64, dx: f64) -> Result<Self> {
        if !(dx > 0.0) {
            return Err(Error::InvalidGrid(format!("spacing {dx} must be positive")));
        }
        let cells = (hi - lo) / dx;
        let rounded = cells.round();
        if (cells - rounded).abs() > 1e-9 * cells.max(1.0) {
            return Err(Error::InvalidGrid(format!(
                "span {} is not a multiple of dx = {dx}",
                hi - lo
            )));
        }
        Grid1D::new(lo, hi, rounded as usize + 1)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        (self.hi - self.lo) / (self.n - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.hi
        } else {
            self.lo + i as f64 * self.dx()
        }
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.point(i))
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    /// Index of the grid point nearest to `x` (clamped to the grid).
    pub fn nearest(&self, x: f64) -> usize {
        let f = ((x - self.lo) / self.dx()).round();
        f.clamp(0.0, (self.n - 1) as f64) as usize
    }

    /// Left cell index and the fractional offset of `x` inside that cell.
    pub fn locate(&self, x: f64) -> Option<(usize, f64)> {
        if !self.contains(x) {
            return None;
        }
        let s = (x - self.lo) / self.dx();
        let i = (s.floor() as usize).min(self.n - 2);
        Some((i, (s - i as f64).clamp(0.0, 1.0)))
    }
}

/// Real values on a [`Grid1D`], linearly interpolated in between.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplePath {
    grid: Grid1D,
    values: Vec<f64>,
}

impl SamplePath {
    pub fn new(grid: Grid1D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidPath(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidPath(format!(
                "value {} at index {i} is not finite",
                values[i]
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid1D, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.points().map(f).collect();
        SamplePath::new(grid, values)
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Linear interpolation; `None` outside the grid.
    pub fn eval(&self, x: f64) -> Option<f64> {
        let (i, w) = self.grid.locate(x)?;
        Some(self.values[i] * (1.0 - w) + self.values[i + 1] * w)
    }

    pub fn map(&self, f: impl Fn(f64, f64) -> f64) -> Result<SamplePath> {
        let values = self.grid.points().zip(&self.values).map(|(x, &v)| f(x, v)).collect();
        SamplePath::new(self.grid, values)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}
