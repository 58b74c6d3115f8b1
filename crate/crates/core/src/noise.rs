//! Space-time white noise on a grid.

use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::rng::RngStream;

/// Default limit on the number of cells [`NoiseField::materialize`] may allocate.
pub const DEFAULT_CELL_CAP: u64 = 1 << 28;

/// One standard normal per (time step, space point) cell.
///
/// Cells are generated on demand from a counter-based stream: row `j` starts at
/// pair offset `j * ceil(nx / 2)`, so any row can be produced without the rows
/// before it. The solver's discretised white noise is `cell / sqrt(dx * dt)`.
#[derive(Clone, Debug)]
pub struct NoiseField {
    space: Grid1D,
    time: Grid1D,
    source: Source,
}

#[derive(Clone, Debug)]
#[allow(clippy::large_enum_variant)]
enum Source {
    Silent,
    Stream(RngStream),
    Stored(Vec<f64>),
}

/// Independent standard normal noise for every cell; deterministic in `rng`'s
/// `(seed, stream_id)`.
pub fn white_noise_field(space: &Grid1D, time: &Grid1D, rng: &RngStream) -> Result<NoiseField> {
    NoiseField::white(space, time, rng)
}

impl NoiseField {
    pub fn white(space: &Grid1D, time: &Grid1D, rng: &RngStream) -> Result<Self> {
        cell_count(space, time)?;
        Ok(Self {
            space: *space,
            time: *time,
            source: Source::Stream(rng.restarted()),
        })
    }

    /// All cells zero: the noise-off limit.
    pub fn silent(space: &Grid1D, time: &Grid1D) -> Self {
        Self {
            space: *space,
            time: *time,
            source: Source::Silent,
        }
    }

    pub fn space(&self) -> &Grid1D {
        &self.space
    }

    pub fn time(&self) -> &Grid1D {
        &self.time
    }

    pub fn rows(&self) -> usize {
        self.time.len() - 1
    }

    pub fn is_silent(&self) -> bool {
        matches!(self.source, Source::Silent)
    }

    /// Writes the cells of time step `row` into `out` (length = space points).
    pub fn fill_row(&self, row: usize, out: &mut [f64]) {
        let nx = self.space.len();
        assert_eq!(out.len(), nx, "row buffer length");
        assert!(row < self.rows(), "row {row} out of range");
        match &self.source {
            Source::Silent => out.fill(0.0),
            Source::Stream(s) => s.normals_at(row as u64 * nx.div_ceil(2) as u64, out),
            Source::Stored(v) => out.copy_from_slice(&v[row * nx..(row + 1) * nx]),
        }
    }

    pub fn cell(&self, row: usize, col: usize) -> f64 {
        let mut buf = vec![0.0; self.space.len()];
        self.fill_row(row, &mut buf);
        buf[col]
    }

    /// Copies every cell into memory, row-major; refuses more than `cap` cells.
    pub fn materialize(&self, cap: u64) -> Result<NoiseField> {
        let cells = cell_count(&self.space, &self.time)?;
        if cells > cap {
            return Err(Error::NoiseTooLarge { cells, cap });
        }
        let nx = self.space.len();
        let mut data = vec![0.0; cells as usize];
        for (j, row) in data.chunks_exact_mut(nx).enumerate() {
            self.fill_row(j, row);
        }
        Ok(Self {
            space: self.space,
            time: self.time,
            source: Source::Stored(data),
        })
    }

    pub fn cells(&self) -> Vec<f64> {
        let nx = self.space.len();
        let mut data = vec![0.0; nx * self.rows()];
        for (j, row) in data.chunks_exact_mut(nx).enumerate() {
            self.fill_row(j, row);
        }
        data
    }
}

fn cell_count(space: &Grid1D, time: &Grid1D) -> Result<u64> {
    (space.len() as u64)
        .checked_mul(time.len() as u64 - 1)
        .ok_or(Error::NoiseTooLarge {
            cells: u64::MAX,
            cap: u64::MAX,
        })
}
