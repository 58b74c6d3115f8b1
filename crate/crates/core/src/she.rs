//! Stochastic heat equation with multiplicative noise, narrow-wedge data and
//! the 3:2:1 scaled height.
//!
//! Each time step is split into a heat step and a noise step. The heat step
//! convolves with a positive, unit-mass discrete Gaussian whose variance is
//! exactly `dt` (Dirichlet zero outside `[-L, L]`). The noise step multiplies
//! every cell by `exp(eta * sqrt(dt/dx) - dt/(2 dx))`, a mean-one factor, so
//! `E[Z]` solves the discrete heat equation and `Z` stays strictly positive.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid1D, SamplePath};
use crate::noise::{white_noise_field, NoiseField};
use crate::rng::RngStream;

const REL_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SheConfig {
    pub dx: f64,
    pub dt: f64,
    pub half_width: f64,
    pub t_final: f64,
    pub record_times: Vec<f64>,
}

impl SheConfig {
    pub fn new(dx: f64, dt: f64, half_width: f64, t_final: f64, record_times: Vec<f64>) -> Result<Self> {
        let cfg = Self {
            dx,
            dt,
            half_width,
            t_final,
            record_times,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Picks the largest stable `dt <= dx^2 / 2` that divides `t_final`.
    pub fn with_stable_dt(dx: f64, half_width: f64, t_final: f64, record_times: Vec<f64>) -> Result<Self> {
        if !(dx > 0.0 && t_final > 0.0) {
            return Err(Error::InvalidConfig(format!("dx = {dx}, t_final = {t_final}")));
        }
        let steps = (t_final / (0.5 * dx * dx) * (1.0 - 1e-12)).ceil().max(1.0);
        SheConfig::new(dx, t_final / steps, half_width, t_final, record_times)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.dx > 0.0 && self.dx.is_finite()) {
            return bad(format!("dx = {} must be positive", self.dx));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt = {} must be positive", self.dt));
        }
        if self.dt > 0.5 * self.dx * self.dx * (1.0 + 1e-12) {
            return bad(format!(
                "stability violated: dt = {} > dx^2/2 = {}",
                self.dt,
                0.5 * self.dx * self.dx
            ));
        }
        if !(self.half_width > 0.0) {
            return bad(format!("half_width = {} must be positive", self.half_width));
        }
        let cells = self.half_width / self.dx;
        if (cells - cells.round()).abs() > REL_TOL * cells.max(1.0) {
            return bad(format!(
                "half_width {} is not a multiple of dx {}",
                self.half_width, self.dx
            ));
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return bad(format!("t_final = {} must be positive", self.t_final));
        }
        let steps = self.t_final / self.dt;
        if (steps - steps.round()).abs() > REL_TOL * steps.max(1.0) {
            return bad(format!("t_final {} is not a multiple of dt {}", self.t_final, self.dt));
        }
        if self.record_times.is_empty() {
            return bad("no record times".into());
        }
        for &t in &self.record_times {
            if !(t > 0.0 && t <= self.t_final * (1.0 + REL_TOL)) {
                return bad(format!("record time {t} outside (0, {}]", self.t_final));
            }
            let s = t / self.dt;
            if (s - s.round()).abs() > 1e-6 {
                return bad(format!("record time {t} is not a multiple of dt {}", self.dt));
            }
        }
        Ok(())
    }

    /// The domain must dominate the scaled observation window:
    /// `L >= 4 t_final^{2/3} max|x|`.
    pub fn check_window(&self, max_scaled_x: f64) -> Result<()> {
        let need = 4.0 * self.t_final.powf(2.0 / 3.0) * max_scaled_x.abs();
        if self.half_width < need {
            return Err(Error::InvalidConfig(format!(
                "half_width {} below 4 t^(2/3) |x| = {need}",
                self.half_width
            )));
        }
        Ok(())
    }

    /// Same `dx`, `half_width` and step bound, run for `duration` instead.
    pub fn for_duration(&self, duration: f64, record_times: Vec<f64>) -> Result<SheConfig> {
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(Error::InvalidConfig(format!("duration {duration} must be positive")));
        }
        let steps = (duration / self.dt * (1.0 - 1e-12)).ceil().max(1.0);
        SheConfig::new(self.dx, duration / steps, self.half_width, duration, record_times)
    }

    pub fn space_grid(&self) -> Grid1D {
        let cells = (2.0 * self.half_width / self.dx).round() as usize;
        Grid1D::new(-self.half_width, self.half_width, cells + 1).expect("validated config")
    }

    pub fn steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }

    pub fn time_grid(&self) -> Grid1D {
        Grid1D::new(0.0, self.t_final, self.steps() + 1).expect("validated config")
    }
}

/// Recorded solution: `Z(t, x)` at each record time, with `H = log Z`.
#[derive(Clone, Debug, PartialEq)]
pub struct HeightField {
    grid: Grid1D,
    times: Vec<f64>,
    z: Vec<Vec<f64>>,
}

impl HeightField {
    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn z(&self, k: usize) -> &[f64] {
        &self.z[k]
    }

    pub fn log_height(&self, k: usize) -> Vec<f64> {
        self.z[k].iter().map(|z| z.ln()).collect()
    }

    pub fn time_index(&self, t: f64) -> Result<usize> {
        self.times
            .iter()
            .position(|&s| (s - t).abs() <= REL_TOL * t.abs().max(1.0))
            .ok_or(Error::UnrecordedTime(t))
    }

    /// `H(t, .)` as a path on the solver grid.
    pub fn height_profile(&self, t: f64) -> Result<SamplePath> {
        let k = self.time_index(t)?;
        SamplePath::new(self.grid, self.log_height(k))
    }

    /// `int Z(t, x) dx` by the trapezoid rule.
    pub fn mass(&self, k: usize) -> f64 {
        let z = &self.z[k];
        let inner: f64 = z.iter().sum();
        self.grid.dx() * (inner - 0.5 * (z[0] + z[z.len() - 1]))
    }

    /// CSV with columns `time,x,Z,H`, time-major then x ascending.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(["time", "x", "Z", "H"])?;
        for (k, &t) in self.times.iter().enumerate() {
            for (i, x) in self.grid.points().enumerate() {
                let z = self.z[k][i];
                w.write_record([t.to_string(), x.to_string(), z.to_string(), z.ln().to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Noise driving a narrow-wedge solve.
#[derive(Clone, Debug)]
#[allow(clippy::large_enum_variant)]
pub enum Forcing {
    /// No noise: the pure heat flow.
    Silent,
    /// White noise drawn from this stream.
    White(RngStream),
}

impl Forcing {
    pub fn field(&self, cfg: &SheConfig) -> Result<NoiseField> {
        let (space, time) = (cfg.space_grid(), cfg.time_grid());
        match self {
            Forcing::Silent => Ok(NoiseField::silent(&space, &time)),
            Forcing::White(rng) => white_noise_field(&space, &time, rng),
        }
    }
}

/// Narrow-wedge initial data evolved under `forcing`.
pub fn narrow_wedge_solve(cfg: &SheConfig, forcing: &Forcing) -> Result<HeightField> {
    let init = narrow_wedge_init(cfg)?;
    evolve(&init, cfg, &forcing.field(cfg)?)
}

/// Lattice delta of unit mass: `1/dx` at `x = 0`, zero elsewhere.
pub fn narrow_wedge_init(cfg: &SheConfig) -> Result<SamplePath> {
    cfg.validate()?;
    let grid = cfg.space_grid();
    let mut values = vec![0.0; grid.len()];
    values[grid.nearest(0.0)] = 1.0 / grid.dx();
    SamplePath::new(grid, values)
}

/// Runs the split-step scheme from `init` to `cfg.t_final`.
///
/// A silent noise field switches the multiplicative step off entirely, which
/// leaves the pure heat flow.
pub fn evolve(init: &SamplePath, cfg: &SheConfig, noise: &NoiseField) -> Result<HeightField> {
    cfg.validate()?;
    let grid = cfg.space_grid();
    let time = cfg.time_grid();
    if *init.grid() != grid {
        return Err(Error::InvalidConfig(
            "initial data grid differs from solver grid".into(),
        ));
    }
    if *noise.space() != grid || noise.rows() != cfg.steps() {
        return Err(Error::InvalidConfig("noise field does not match solver grids".into()));
    }
    if init.values().iter().any(|&v| v < 0.0) || init.values().iter().all(|&v| v == 0.0) {
        return Err(Error::InvalidConfig(
            "initial data must be non-negative and non-zero".into(),
        ));
    }

    let mut record_steps: Vec<(usize, f64)> = cfg
        .record_times
        .iter()
        .map(|&t| ((t / cfg.dt).round() as usize, t))
        .collect();
    record_steps.sort_by_key(|r| r.0);
    record_steps.dedup_by_key(|r| r.0);

    let kernel = HeatKernel::new(cfg.dt / (cfg.dx * cfg.dx));
    let amp = (cfg.dt / cfg.dx).sqrt();
    let drift = cfg.dt / (2.0 * cfg.dx);
    let n = grid.len();
    let mut z = init.values().to_vec();
    let mut scratch = vec![0.0; n];
    let mut eta = vec![0.0; n];
    let mut times = Vec::with_capacity(record_steps.len());
    let mut frames = Vec::with_capacity(record_steps.len());
    let mut next = 0;

    for step in 0..cfg.steps() {
        kernel.apply(&z, &mut scratch);
        std::mem::swap(&mut z, &mut scratch);
        if !noise.is_silent() {
            noise.fill_row(step, &mut eta);
            for (zi, &e) in z.iter_mut().zip(&eta) {
                *zi *= (amp * e - drift).exp();
            }
        }
        let done = step + 1;
        while next < record_steps.len() && record_steps[next].0 == done {
            let t = time.point(done);
            if let Some(i) = z.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
                return Err(Error::NonFinite {
                    time: t,
                    x: grid.point(i),
                    cell: i,
                    value: z[i],
                });
            }
            times.push(record_steps[next].1);
            frames.push(z.clone());
            next += 1;
        }
    }
    Ok(HeightField { grid, times, z: frames })
}

/// `t^{-1/3} (H(alpha t, t^{2/3} x) + alpha t / 24)`, linear in between grid points.
pub fn scaled_height(field: &HeightField, t: f64, alpha: f64, x: f64) -> Result<f64> {
    let k = field.time_index(alpha * t)?;
    let pos = t.powf(2.0 / 3.0) * x;
    let grid = field.grid();
    let slack = 1e-12 * grid.hi().abs().max(1.0);
    if pos < grid.lo() - slack || pos > grid.hi() + slack {
        return Err(Error::OutsideDomain {
            x: pos,
            lo: grid.lo(),
            hi: grid.hi(),
        });
    }
    let pos = pos.clamp(grid.lo(), grid.hi());
    let (i, w) = grid.locate(pos).expect("clamped into grid");
    let z = field.z(k);
    let h = z[i].ln() * (1.0 - w) + z[i + 1].ln() * w;
    Ok(t.powf(-1.0 / 3.0) * (h + alpha * t / 24.0))
}

/// Symmetric discrete Gaussian `w_k ~ exp(-lambda k^2)` of unit mass whose
/// variance in cell units is exactly `var`.
#[derive(Clone, Debug)]
pub(crate) struct HeatKernel {
    weights: Vec<f64>,
    radius: usize,
}

impl HeatKernel {
    pub(crate) fn new(var: f64) -> Self {
        assert!(var > 0.0 && var <= 0.5 + 1e-9, "cell variance {var}");
        let variance_at = |lambda: f64| {
            let (mut m0, mut m2) = (1.0, 0.0);
            for k in 1..64 {
                let w = (-lambda * (k * k) as f64).exp();
                m0 += 2.0 * w;
                m2 += 2.0 * (k * k) as f64 * w;
            }
            m2 / m0
        };
        // variance_at is decreasing in lambda; bisect on log(lambda).
        let (mut lo, mut hi) = (-8.0f64, 7.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if variance_at(mid.exp()) > var {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let lambda = (0.5 * (lo + hi)).exp();
        let radius = ((69.0 / lambda).sqrt().ceil() as usize).max(1);
        let mut weights: Vec<f64> = (0..=2 * radius)
            .map(|j| {
                let k = j as f64 - radius as f64;
                (-lambda * k * k).exp()
            })
            .collect();
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        Self { weights, radius }
    }

    pub(crate) fn apply(&self, z: &[f64], out: &mut [f64]) {
        let n = z.len();
        let r = self.radius;
        for (i, o) in out.iter_mut().enumerate() {
            let lo = i.saturating_sub(r);
            let hi = (i + r).min(n - 1);
            let w = &self.weights[lo + r - i..=hi + r - i];
            *o = w.iter().zip(&z[lo..=hi]).map(|(a, b)| a * b).sum();
        }
    }

    #[cfg(test)]
    fn moments(&self) -> (f64, f64, f64) {
        let r = self.radius as f64;
        let mut m = (0.0, 0.0, 0.0);
        for (j, w) in self.weights.iter().enumerate() {
            let k = j as f64 - r;
            m.0 += w;
            m.1 += w * k;
            m.2 += w * k * k;
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn heat_kernel_density(t: f64, x: f64) -> f64 {
        (-x * x / (2.0 * t)).exp() / (2.0 * std::f64::consts::PI * t).sqrt()
    }

    #[test]
    fn kernel_has_exact_mass_and_variance() {
        for &v in &[0.5, 0.25, 0.1, 0.01] {
            let k = HeatKernel::new(v);
            let (m0, m1, m2) = k.moments();
            assert!((m0 - 1.0).abs() < 1e-14);
            assert!(m1.abs() < 1e-14);
            assert!((m2 - v).abs() < 1e-10 * v.max(1e-3), "{v}: {m2}");
            assert!(k.weights.iter().all(|&w| w > 0.0));
        }
    }

    #[test]
    fn config_validation() {
        assert!(SheConfig::new(0.1, 0.006, 1.0, 1.0, vec![1.0]).is_err());
        assert!(SheConfig::new(0.1, 0.005, 1.05, 1.0, vec![1.0]).is_err());
        assert!(SheConfig::new(0.1, 0.005, 1.0, 1.0, vec![0.0]).is_err());
        assert!(SheConfig::new(0.1, 0.005, 1.0, 1.0, vec![1.5]).is_err());
        assert!(SheConfig::new(0.1, 0.005, 1.0, 1.0, vec![0.0051]).is_err());
        assert!(SheConfig::new(0.1, 0.005, 1.0, 1.0, vec![0.5, 1.0]).is_ok());
        let c = SheConfig::with_stable_dt(1.0 / 32.0, 8.0, 2.0, vec![1.0, 2.0]).unwrap();
        assert_eq!(c.steps(), 4096);
        assert!(c.check_window(1.0).is_ok());
        assert!(c.check_window(2.0).is_err());
    }

    #[test]
    fn delta_on_small_grid() {
        let cfg = SheConfig::new(0.5, 0.125, 1.0, 1.0, vec![1.0]).unwrap();
        let p = narrow_wedge_init(&cfg).unwrap();
        assert_eq!(p.grid().points().collect::<Vec<_>>(), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert_eq!(p.values(), &[0.0, 0.0, 2.0, 0.0, 0.0]);
    }

    #[test]
    fn delta_has_unit_mass() {
        for &dx in &[0.5, 0.1, 1.0 / 64.0, 1.0 / 3.0] {
            let cfg = SheConfig::with_stable_dt(dx, 1.0, 1.0, vec![1.0]).unwrap();
            let p = narrow_wedge_init(&cfg).unwrap();
            let mass: f64 = p.values().iter().sum::<f64>() * cfg.dx;
            assert!((mass - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn silent_noise_matches_heat_kernel() {
        let cfg = SheConfig::with_stable_dt(1.0 / 64.0, 8.0, 1.0, vec![0.5, 1.0]).unwrap();
        let init = narrow_wedge_init(&cfg).unwrap();
        let noise = NoiseField::silent(&cfg.space_grid(), &cfg.time_grid());
        let field = evolve(&init, &cfg, &noise).unwrap();
        let k = field.time_index(1.0).unwrap();
        let h = field.log_height(k);
        let mut worst: f64 = 0.0;
        for (i, x) in field.grid().points().enumerate() {
            if x.abs() <= 4.0 {
                worst = worst.max((h[i] - heat_kernel_density(1.0, x).ln()).abs());
            }
        }
        assert!(worst <= 1e-3, "sup log error {worst}");
        assert!((field.mass(k) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn mass_is_conserved_without_noise() {
        let cfg = SheConfig::with_stable_dt(1.0 / 16.0, 8.0, 1.0, vec![0.25, 0.5, 1.0]).unwrap();
        let init = narrow_wedge_init(&cfg).unwrap();
        let noise = NoiseField::silent(&cfg.space_grid(), &cfg.time_grid());
        let field = evolve(&init, &cfg, &noise).unwrap();
        for k in 0..3 {
            assert!((field.mass(k) - 1.0).abs() < 1e-6, "{}", field.mass(k));
        }
    }

    #[test]
    fn noisy_solution_stays_positive() {
        let cfg = SheConfig::with_stable_dt(1.0 / 16.0, 4.0, 1.0, vec![0.5, 1.0]).unwrap();
        let init = narrow_wedge_init(&cfg).unwrap();
        for r in 0..5 {
            let noise = white_noise_field(&cfg.space_grid(), &cfg.time_grid(), &RngStream::new(3, r)).unwrap();
            let field = evolve(&init, &cfg, &noise).unwrap();
            for k in 0..2 {
                assert!(field.z(k).iter().all(|&z| z > 0.0 && z.is_finite()));
            }
        }
    }

    #[test]
    fn scaled_height_arithmetic() {
        let grid = Grid1D::new(-8.0, 8.0, 17).unwrap();
        let ones = HeightField {
            grid,
            times: vec![24.0],
            z: vec![vec![1.0; 17]],
        };
        let v = scaled_height(&ones, 8.0, 3.0, 0.7).unwrap();
        assert!((v - 0.5).abs() < 1e-15);
        let minus_one = HeightField {
            grid,
            times: vec![1.0],
            z: vec![vec![(-1.0f64).exp(); 17]],
        };
        let v = scaled_height(&minus_one, 1.0, 1.0, 0.0).unwrap();
        assert!((v - (-1.0 + 1.0 / 24.0)).abs() < 1e-15);
        assert!(matches!(
            scaled_height(&ones, 8.0, 2.0, 0.0),
            Err(Error::UnrecordedTime(_))
        ));
        assert!(matches!(
            scaled_height(&ones, 8.0, 3.0, 3.0),
            Err(Error::OutsideDomain { .. })
        ));
    }

    #[test]
    fn parabola_cancels_in_noise_off_profile() {
        let cfg = SheConfig::with_stable_dt(1.0 / 64.0, 8.0, 1.0, vec![1.0]).unwrap();
        let init = narrow_wedge_init(&cfg).unwrap();
        let noise = NoiseField::silent(&cfg.space_grid(), &cfg.time_grid());
        let field = evolve(&init, &cfg, &noise).unwrap();
        let base = scaled_height(&field, 1.0, 1.0, 0.0).unwrap();
        for i in 0..=40 {
            let x = -2.0 + 0.1 * i as f64;
            let v = scaled_height(&field, 1.0, 1.0, x).unwrap() + x * x / 2.0;
            assert!((v - base).abs() < 1e-3, "x = {x}: {v} vs {base}");
        }
    }

    #[test]
    fn csv_layout() {
        let grid = Grid1D::new(-1.0, 1.0, 3).unwrap();
        let f = HeightField {
            grid,
            times: vec![0.5, 1.0],
            z: vec![vec![1.0, 2.0, 1.0], vec![1.0, 1.0, 1.0]],
        };
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "time,x,Z,H");
        assert_eq!(lines.len(), 7);
        assert!(lines[2].starts_with("0.5,0,2,0.69314"));
        assert!(lines[4].starts_with("1,-1,1,0"));
        assert!(!s.contains('\r'));
    }
}
