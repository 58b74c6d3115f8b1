//! Brownian last passage percolation and the zero-temperature two-time pair.
//!
//! Lines are standard Brownian motions sampled on a uniform time grid. The
//! last-passage value from `(line 1, time 0)` to `(line n, T)` maximises
//! `sum_i B_i(t_i) - B_i(t_{i-1})` over jump times `0 = t_0 <= ... <= t_n = T`,
//! with jumps restricted to grid times.
//!
//! Profiles use the edge scaling
//!
//! ```text
//! T(x)   = 1 + 2 x n^{-1/3}
//! h_n(x) = n^{1/6} (L_n(T) - b0 - 2 sqrt(n T) - b1 sqrt(T)) / sqrt(T) - x^2
//! ```
//!
//! where `(b0, b1)` is a per-`n` least-squares fit of the mean of
//! `L_n(T) - 2 sqrt(n T)` against `sqrt(T)`. Brownian scaling makes the
//! one-point law of `h_n(x) + x^2` independent of `x`.

use std::collections::HashMap;
use std::io::Write;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::composition::compose_zero_t;
use crate::error::{Error, Result};
use crate::grid::{Grid1D, SamplePath};
use crate::rng::RngStream;

/// Grid columns per unit of time.
pub const DEFAULT_RESOLUTION: usize = 4096;
/// Largest `|x|` a calibrated model serves.
pub const X_RANGE: f64 = 2.5;
/// Smallest admissible `T(x)`.
const T_FLOOR: f64 = 0.05;
/// Independent fields averaged by a calibration.
const CALIBRATION_FIELDS: u64 = 128;
/// Seed reserved for calibration runs.
const CALIBRATION_SEED: u64 = 0x6b70_7a6c_6162;

/// Brownian increments of `n` lines on a time grid starting at 0.
#[derive(Clone, Debug, PartialEq)]
pub struct BlppField {
    n: usize,
    time: Grid1D,
    /// Column-major: increment of line `i` over column `j` (1-based) at
    /// `(j - 1) * n + (i - 1)`.
    inc: Vec<f64>,
}

impl BlppField {
    /// `increments[i][j]` is `B_{i+1}(t_{j+1}) - B_{i+1}(t_j)`.
    pub fn from_increments(time: Grid1D, increments: &[Vec<f64>]) -> Result<Self> {
        if time.lo() != 0.0 {
            return Err(Error::InvalidGrid("time grid must start at 0".into()));
        }
        let n = increments.len();
        if n == 0 {
            return Err(Error::TooFewLines {
                n,
                reason: "need at least one line".into(),
            });
        }
        let cols = time.len() - 1;
        if increments.iter().any(|row| row.len() != cols) {
            return Err(Error::InvalidArgument(format!("each line needs {cols} increments")));
        }
        let mut inc = vec![0.0; n * cols];
        for (i, row) in increments.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                inc[j * n + i] = v;
            }
        }
        Ok(Self { n, time, inc })
    }

    /// Gaussian increments of variance `dt`, drawn column by column.
    pub fn sample(n: usize, time: Grid1D, rng: &mut RngStream) -> Result<Self> {
        if time.lo() != 0.0 {
            return Err(Error::InvalidGrid("time grid must start at 0".into()));
        }
        if n == 0 {
            return Err(Error::TooFewLines {
                n,
                reason: "need at least one line".into(),
            });
        }
        let sd = time.dx().sqrt();
        let inc = (0..n * (time.len() - 1)).map(|_| sd * rng.normal()).collect();
        Ok(Self { n, time, inc })
    }

    pub fn lines(&self) -> usize {
        self.n
    }

    pub fn time(&self) -> &Grid1D {
        &self.time
    }

    pub fn increment(&self, line: usize, col: usize) -> f64 {
        self.inc[(col - 1) * self.n + (line - 1)]
    }

    /// `L_n` at every grid time, from one pass of the dynamic program.
    pub fn last_passage_profile(&self) -> Vec<f64> {
        let mut dp = Dp::new(self.n);
        let mut out = Vec::with_capacity(self.time.len());
        out.push(0.0);
        for col in self.inc.chunks_exact(self.n) {
            out.push(dp.advance(col));
        }
        out
    }
}

/// Column state of the dynamic program:
/// `M[i][j] = max(M[i][j-1] + inc[i][j], M[i-1][j])`, `M[i][0] = 0`.
struct Dp {
    m: Vec<f64>,
}

impl Dp {
    fn new(n: usize) -> Self {
        Self { m: vec![0.0; n] }
    }

    fn advance(&mut self, col: &[f64]) -> f64 {
        let mut prev = f64::NEG_INFINITY;
        for (m, &x) in self.m.iter_mut().zip(col) {
            *m = (*m + x).max(prev);
            prev = *m;
        }
        prev
    }
}

/// Last-passage value to line `n` at the grid time nearest `end_time`.
pub fn blpp_value(field: &BlppField, end_time: f64) -> Result<f64> {
    let t = field.time();
    let tol = 1e-9 * t.hi();
    if !(end_time >= -tol && end_time <= t.hi() + tol) {
        return Err(Error::EndTimeOutside {
            t: end_time,
            max: t.hi(),
        });
    }
    let j = t.nearest(end_time);
    let mut dp = Dp::new(field.n);
    let mut v = 0.0;
    for col in field.inc.chunks_exact(field.n).take(j) {
        v = dp.advance(col);
    }
    Ok(v)
}

/// Same draws and result as `BlppField::sample(..).last_passage_profile()`
/// without storing the field.
pub fn sample_profile(n: usize, time: &Grid1D, rng: &mut RngStream) -> Vec<f64> {
    let sd = time.dx().sqrt();
    let mut dp = Dp::new(n);
    let mut col = vec![0.0; n];
    let mut out = Vec::with_capacity(time.len());
    out.push(0.0);
    for _ in 1..time.len() {
        col.iter_mut().for_each(|c| *c = sd * rng.normal());
        out.push(dp.advance(&col));
    }
    out
}

/// Scaling window and calibration constants for one `(n, resolution)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZeroTempModel {
    pub n: usize,
    pub resolution: usize,
    pub b0: f64,
    pub b1: f64,
}

impl ZeroTempModel {
    /// Fits `(b0, b1)` from [`CALIBRATION_FIELDS`] independent fields with a
    /// fixed seed, so every run sees the same model.
    pub fn calibrate(n: usize, resolution: usize) -> Result<Self> {
        let mut m = Self {
            n,
            resolution,
            b0: 0.0,
            b1: 0.0,
        };
        m.check_x(0.0)?;
        let time = m.time_grid();
        let (first, last) = m.columns(m.x_max());
        let mut mean = vec![0.0; last + 1];
        for k in 0..CALIBRATION_FIELDS {
            let mut rng = RngStream::new(CALIBRATION_SEED, k);
            for (acc, v) in mean.iter_mut().zip(sample_profile(n, &time, &mut rng)) {
                *acc += v / CALIBRATION_FIELDS as f64;
            }
        }
        let nf = n as f64;
        let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
        for (j, &l) in mean.iter().enumerate().take(last + 1).skip(first) {
            let t = time.point(j);
            let x = t.sqrt();
            let y = l - 2.0 * (nf * t).sqrt();
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        let k = (last - first + 1) as f64;
        let det = k * sxx - sx * sx;
        if !(det > 0.0) {
            return Err(Error::DegenerateVariance);
        }
        m.b1 = (k * sxy - sx * sy) / det;
        m.b0 = (sy - m.b1 * sx) / k;
        Ok(m)
    }

    /// Calibrated model shared across the process.
    pub fn cached(n: usize, resolution: usize) -> Result<Arc<ZeroTempModel>> {
        type Cache = Mutex<HashMap<(usize, usize), Arc<ZeroTempModel>>>;
        static CACHE: OnceLock<Cache> = OnceLock::new();
        let cache = CACHE.get_or_init(Default::default);
        let mut guard = cache.lock().unwrap_or_else(|p| p.into_inner());
        if let Some(m) = guard.get(&(n, resolution)) {
            return Ok(Arc::clone(m));
        }
        let m = Arc::new(ZeroTempModel::calibrate(n, resolution)?);
        guard.insert((n, resolution), Arc::clone(&m));
        Ok(m)
    }

    fn transversal(&self) -> f64 {
        2.0 * (self.n as f64).powf(-1.0 / 3.0)
    }

    pub fn end_time(&self, x: f64) -> f64 {
        1.0 + self.transversal() * x
    }

    /// Largest `|x|` served: `X_RANGE`, or less when `n` is so small that
    /// `T(-x)` would drop below `T_FLOOR`.
    pub fn x_max(&self) -> f64 {
        X_RANGE.min((1.0 - T_FLOOR) / self.transversal())
    }

    pub fn check_x(&self, x_abs: f64) -> Result<()> {
        if self.n < 16 {
            return Err(Error::TooFewLines {
                n: self.n,
                reason: "need n >= 16".into(),
            });
        }
        if self.resolution < 16 {
            return Err(Error::InvalidArgument(format!(
                "resolution {} below 16",
                self.resolution
            )));
        }
        if x_abs > X_RANGE * (1.0 + 1e-12) {
            return Err(Error::InvalidArgument(format!("|x| = {x_abs} beyond {X_RANGE}")));
        }
        if x_abs > self.x_max() * (1.0 + 1e-12) {
            return Err(Error::TooFewLines {
                n: self.n,
                reason: format!("|x| = {x_abs} maps below time {T_FLOOR}"),
            });
        }
        Ok(())
    }

    /// Time grid reaching `T(x_max)` at `resolution` columns per unit time.
    pub fn time_grid(&self) -> Grid1D {
        let cols = (self.end_time(self.x_max()) * self.resolution as f64).ceil() as usize;
        Grid1D::new(0.0, cols as f64 / self.resolution as f64, cols + 1).expect("positive horizon")
    }

    fn columns(&self, x_abs: f64) -> (usize, usize) {
        let g = self.time_grid();
        (g.nearest(self.end_time(-x_abs)), g.nearest(self.end_time(x_abs)))
    }

    /// `x`-window for `beta`: half-width `x_max min(1, beta^{2/3})`, 1001 points,
    /// so the mapped points `-x beta^{-2/3}` of the second profile stay served.
    pub fn window(&self, beta: f64) -> Result<Grid1D> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidArgument(format!("beta = {beta} must be positive")));
        }
        let w = self.x_max() * beta.powf(2.0 / 3.0).min(1.0);
        Grid1D::new(-w, w, 1001)
    }

    /// One random last-passage profile, ready to be read at any `|x| <= x_max`.
    pub fn sample(&self, rng: &mut RngStream) -> Profile<'_> {
        Profile {
            model: self,
            time: self.time_grid(),
            values: sample_profile(self.n, &self.time_grid(), rng),
        }
    }

    /// `x -> h_n(x)` on `x_grid`.
    pub fn profile(&self, x_grid: &Grid1D, rng: &mut RngStream) -> Result<SamplePath> {
        self.check_x(x_grid.lo().abs().max(x_grid.hi().abs()))?;
        let p = self.sample(rng);
        SamplePath::new(*x_grid, x_grid.points().map(|x| p.h(x)).collect())
    }
}

/// Last-passage values of one field at every column.
pub struct Profile<'a> {
    model: &'a ZeroTempModel,
    time: Grid1D,
    values: Vec<f64>,
}

impl Profile<'_> {
    /// `h_n(x)`, read at the column nearest `T(x)`.
    pub fn h(&self, x: f64) -> f64 {
        let m = self.model;
        let j = self.time.nearest(m.end_time(x));
        let t = self.time.point(j);
        let nf = m.n as f64;
        let centred = self.values[j] - m.b0 - 2.0 * (nf * t).sqrt() - m.b1 * t.sqrt();
        nf.powf(1.0 / 6.0) * centred / t.sqrt() - x * x
    }
}

/// Edge-scaled BLPP profile with the shared calibration for `n`.
pub fn airy_like_profile(n: usize, x_grid: &Grid1D, rng: &mut RngStream) -> Result<SamplePath> {
    ZeroTempModel::cached(n, DEFAULT_RESOLUTION)?.profile(x_grid, rng)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZeroTempPair {
    pub n: usize,
    pub beta: f64,
    pub b_one: f64,
    pub b_beta: f64,
    pub seed: u64,
    pub stream: u64,
}

/// `max_x { b(x) + beta^{1/3} b_tilde(-x beta^{-2/3}) }` over `x_grid`, with its
/// leftmost maximiser. A maximiser on either end of the grid is an error.
pub fn zero_temp_compose(
    beta: f64,
    x_grid: &Grid1D,
    b: impl Fn(f64) -> f64,
    b_tilde: impl Fn(f64) -> f64,
) -> Result<(f64, f64)> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidArgument(format!("beta = {beta} must be positive")));
    }
    let f = SamplePath::new(*x_grid, x_grid.points().map(&b).collect())?;
    // g(z) = beta^{1/3} b_tilde(z beta^{-2/3}) on the reflected grid, so g(-x)
    // lands on the mapped points themselves.
    let reflected = Grid1D::new(-x_grid.hi(), -x_grid.lo(), x_grid.len())?;
    let (lift, stretch) = (beta.cbrt(), beta.powf(-2.0 / 3.0));
    let g = SamplePath::new(
        reflected,
        reflected.points().map(|z| lift * b_tilde(z * stretch)).collect(),
    )?;
    let (value, at) = compose_zero_t(&f, &g)?;
    let span = x_grid.dx() * 0.5;
    if at <= x_grid.lo() + span || at >= x_grid.hi() - span {
        return Err(Error::ArgmaxOnEdge(at));
    }
    Ok((value, at))
}

/// Both profiles of one replica; serves any number of `beta` values.
pub struct ZeroTempReplica<'a> {
    first: Profile<'a>,
    second: Profile<'a>,
    seed: u64,
    stream: u64,
}

impl<'a> ZeroTempReplica<'a> {
    /// The first profile uses `rng`'s stream, the second its sub-stream 1.
    pub fn new(model: &'a ZeroTempModel, rng: &RngStream) -> Self {
        Self {
            first: model.sample(&mut rng.restarted()),
            second: model.sample(&mut rng.substream(1)),
            seed: rng.seed(),
            stream: rng.stream_id(),
        }
    }

    pub fn first(&self) -> &Profile<'a> {
        &self.first
    }

    pub fn second(&self) -> &Profile<'a> {
        &self.second
    }

    pub fn pair(&self, beta: f64, x_grid: &Grid1D) -> Result<ZeroTempPair> {
        let m = self.first.model;
        m.check_x(x_grid.lo().abs().max(x_grid.hi().abs()))?;
        m.check_x(x_grid.lo().abs().max(x_grid.hi().abs()) * beta.powf(-2.0 / 3.0))?;
        let (b_beta, _) = zero_temp_compose(beta, x_grid, |x| self.first.h(x), |x| self.second.h(x))?;
        Ok(ZeroTempPair {
            n: m.n,
            beta,
            b_one: self.first.h(0.0),
            b_beta,
            seed: self.seed,
            stream: self.stream,
        })
    }
}

pub fn two_time_zero_temp(n: usize, beta: f64, x_grid: &Grid1D, rng: &RngStream) -> Result<ZeroTempPair> {
    let model = ZeroTempModel::cached(n, DEFAULT_RESOLUTION)?;
    ZeroTempReplica::new(&model, rng).pair(beta, x_grid)
}

/// CSV with columns `n,beta,b_one,b_beta,seed`.
pub fn write_zero_temp_csv<W: Write>(pairs: &[ZeroTempPair], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(["n", "beta", "b_one", "b_beta", "seed"])?;
    for p in pairs {
        w.write_record([
            p.n.to_string(),
            p.beta.to_string(),
            p.b_one.to_string(),
            p.b_beta.to_string(),
            p.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_increments_give_zero() {
        let time = Grid1D::new(0.0, 1.0, 6).unwrap();
        let f = BlppField::from_increments(time, &vec![vec![0.0; 5]; 4]).unwrap();
        assert_eq!(blpp_value(&f, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn single_line_is_the_brownian_path() {
        let time = Grid1D::new(0.0, 1.0, 65).unwrap();
        let mut rng = RngStream::new(4, 0);
        let f = BlppField::sample(1, time, &mut rng).unwrap();
        let mut b = 0.0;
        for j in 1..=64 {
            b += f.increment(1, j);
            assert_eq!(blpp_value(&f, time.point(j)).unwrap(), b);
        }
    }

    #[test]
    fn two_lines_match_enumeration() {
        let time = Grid1D::new(0.0, 3.0, 4).unwrap();
        let top = vec![0.4, -1.3, 0.7];
        let bottom = vec![-0.2, 0.9, -0.5];
        let f = BlppField::from_increments(time, &[top.clone(), bottom.clone()]).unwrap();
        let best = (0..=3)
            .map(|k| top[..k].iter().sum::<f64>() + bottom[k..].iter().sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(blpp_value(&f, 3.0).unwrap(), best);
        assert!((best - 0.8).abs() < 1e-15);
    }

    #[test]
    fn streaming_profile_matches_stored_field() {
        let time = Grid1D::new(0.0, 2.0, 257).unwrap();
        let stored = BlppField::sample(7, time, &mut RngStream::new(9, 2)).unwrap();
        let streamed = sample_profile(7, &time, &mut RngStream::new(9, 2));
        assert_eq!(stored.last_passage_profile(), streamed);
        assert_eq!(blpp_value(&stored, 1.0).unwrap(), streamed[128]);
    }

    #[test]
    fn end_time_outside_is_rejected() {
        let time = Grid1D::new(0.0, 1.0, 5).unwrap();
        let f = BlppField::from_increments(time, &[vec![0.0; 4]]).unwrap();
        assert!(matches!(blpp_value(&f, 1.5), Err(Error::EndTimeOutside { .. })));
    }

    #[test]
    fn parabolas_compose_to_zero() {
        let m = ZeroTempModel {
            n: 200,
            resolution: 256,
            b0: 0.0,
            b1: 0.0,
        };
        let grid = m.window(0.3).unwrap();
        let (v, at) = zero_temp_compose(0.3, &grid, |x| -0.5 * x * x, |x| -0.5 * x * x).unwrap();
        assert!(v.abs() < 1e-12);
        assert!(at.abs() < 1e-12);
    }

    #[test]
    fn edge_argmax_is_an_error() {
        let grid = Grid1D::new(-1.0, 1.0, 201).unwrap();
        let r = zero_temp_compose(0.5, &grid, |x| x, |_| 0.0);
        assert!(matches!(r, Err(Error::ArgmaxOnEdge(_))));
    }

    #[test]
    fn small_n_is_rejected() {
        let m = ZeroTempModel {
            n: 16,
            resolution: 256,
            b0: 0.0,
            b1: 0.0,
        };
        assert!(m.check_x(2.0).is_err());
        assert!(m.check_x(0.5).is_ok());
        assert!(m.x_max() < 1.2);
        let tiny = ZeroTempModel {
            n: 8,
            resolution: 256,
            b0: 0.0,
            b1: 0.0,
        };
        assert!(tiny.check_x(0.1).is_err());
    }

    #[test]
    fn csv_header() {
        let mut buf = Vec::new();
        write_zero_temp_csv(&[], &mut buf).unwrap();
        assert_eq!(buf, b"n,beta,b_one,b_beta,seed\n");
    }
}
