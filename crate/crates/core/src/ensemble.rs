//! Finite line ensembles with an exponential interaction: Boltzmann weights,
//! heat-bath Gibbs sweeps and the monotone coupling of two ordered ensembles.
//!
//! Curves are indexed `k1..=k2` from the top down. The curve above `k1` is the
//! upper boundary `f` and the curve below `k2` is the lower boundary `g`; either
//! may be a path on the common grid or the symbol `+inf` (for `f`) / `-inf`
//! (for `g`), which switches its interaction off.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::rng::RngStream;

/// Points in the per-site value lattice used for inverse-CDF sampling.
pub const LATTICE_POINTS: usize = 2048;
/// Initial lattice half-width, in local standard deviations.
const LATTICE_SDS: f64 = 8.0;
/// Log-density drop required at both lattice ends before sampling.
const TAIL_DROP: f64 = 30.0;
/// Largest argument passed to `exp` before the weight is declared underflowed.
const EXP_LIMIT: f64 = 709.0;
/// Cap on the common lattice of a coupled update.
const MAX_COUPLED_POINTS: usize = 1 << 16;

/// `H_t(x) = exp(t^{1/3} x)`, or the zero function for the free measure.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hamiltonian {
    t: f64,
    active: bool,
}

impl Hamiltonian {
    pub fn new(t: f64) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidArgument(format!("Hamiltonian needs t > 0, got {t}")));
        }
        Ok(Self { t, active: true })
    }

    /// Interaction switched off: sweeps target independent Brownian bridges.
    pub fn free() -> Self {
        Self { t: 0.0, active: false }
    }

    pub fn t(&self) -> Option<f64> {
        self.active.then_some(self.t)
    }

    pub fn is_free(&self) -> bool {
        !self.active
    }

    /// `t^{1/3}`, the exponential rate; zero when free.
    pub fn rate(&self) -> f64 {
        if self.active {
            self.t.cbrt()
        } else {
            0.0
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        if !self.active || x == f64::NEG_INFINITY {
            0.0
        } else {
            (self.rate() * x).exp()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    PlusInfinity,
    MinusInfinity,
    /// Values on the ensemble grid.
    Path(Vec<f64>),
}

impl Boundary {
    pub fn at(&self, j: usize) -> f64 {
        match self {
            Boundary::PlusInfinity => f64::INFINITY,
            Boundary::MinusInfinity => f64::NEG_INFINITY,
            Boundary::Path(v) => v[j],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Ensemble {
    first_index: usize,
    grid: Grid1D,
    curves: Vec<Vec<f64>>,
    upper: Boundary,
    lower: Boundary,
}

impl Ensemble {
    /// `curves[0]` is curve `first_index`; each curve's first and last values
    /// are its entrance and exit data.
    pub fn new(
        first_index: usize,
        grid: Grid1D,
        curves: Vec<Vec<f64>>,
        upper: Boundary,
        lower: Boundary,
    ) -> Result<Self> {
        let bad = |m: String| Err(Error::InvalidEnsemble(m));
        if curves.is_empty() {
            return bad("no curves".into());
        }
        for (c, v) in curves.iter().enumerate() {
            if v.len() != grid.len() {
                return bad(format!(
                    "curve {} has {} values, grid has {}",
                    first_index + c,
                    v.len(),
                    grid.len()
                ));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return bad(format!("curve {} has a non-finite value", first_index + c));
            }
        }
        for (name, b, forbidden) in [
            ("upper", &upper, Boundary::MinusInfinity),
            ("lower", &lower, Boundary::PlusInfinity),
        ] {
            if *b == forbidden {
                return bad(format!("{name} boundary cannot be {forbidden:?}"));
            }
            if let Boundary::Path(v) = b {
                if v.len() != grid.len() || v.iter().any(|x| !x.is_finite()) {
                    return bad(format!("{name} boundary path must have {} finite values", grid.len()));
                }
            }
        }
        Ok(Self {
            first_index,
            grid,
            curves,
            upper,
            lower,
        })
    }

    /// Curves that are constant at the given levels, between `+inf` and `-inf`.
    pub fn flat(first_index: usize, grid: Grid1D, levels: &[f64]) -> Result<Self> {
        let curves = levels.iter().map(|&l| vec![l; grid.len()]).collect();
        Ensemble::new(
            first_index,
            grid,
            curves,
            Boundary::PlusInfinity,
            Boundary::MinusInfinity,
        )
    }

    pub fn first_index(&self) -> usize {
        self.first_index
    }

    pub fn last_index(&self) -> usize {
        self.first_index + self.curves.len() - 1
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn curves(&self) -> &[Vec<f64>] {
        &self.curves
    }

    /// Curve by absolute index.
    pub fn curve(&self, index: usize) -> Option<&[f64]> {
        index
            .checked_sub(self.first_index)
            .and_then(|c| self.curves.get(c))
            .map(Vec::as_slice)
    }

    pub fn upper(&self) -> &Boundary {
        &self.upper
    }

    pub fn lower(&self) -> &Boundary {
        &self.lower
    }

    pub fn entrance(&self) -> Vec<f64> {
        self.curves.iter().map(|v| v[0]).collect()
    }

    pub fn exit(&self) -> Vec<f64> {
        self.curves.iter().map(|v| v[v.len() - 1]).collect()
    }

    /// Value of the curve above relative curve `c` at site `j`.
    fn above(&self, c: usize, j: usize) -> f64 {
        if c == 0 {
            self.upper.at(j)
        } else {
            self.curves[c - 1][j]
        }
    }

    fn below(&self, c: usize, j: usize) -> f64 {
        if c + 1 == self.curves.len() {
            self.lower.at(j)
        } else {
            self.curves[c + 1][j]
        }
    }

    /// `L^i - L^{i-1}` at site `j` for relative pair `p` (`0..=curves.len()`).
    fn gap(&self, p: usize, j: usize) -> f64 {
        let lower = if p == self.curves.len() {
            self.lower.at(j)
        } else {
            self.curves[p][j]
        };
        let upper = if p == 0 {
            self.upper.at(j)
        } else {
            self.curves[p - 1][j]
        };
        if lower == f64::NEG_INFINITY || upper == f64::INFINITY {
            f64::NEG_INFINITY
        } else {
            lower - upper
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(["curve", "x", "value"])?;
        for (c, v) in self.curves.iter().enumerate() {
            for (j, x) in self.grid.points().enumerate() {
                w.write_record([(self.first_index + c).to_string(), x.to_string(), v[j].to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn sidecar(&self) -> Sidecar {
        Sidecar {
            first_index: self.first_index,
            last_index: self.last_index(),
            grid: self.grid,
            entrance: self.entrance(),
            exit: self.exit(),
            upper: self.upper.clone(),
            lower: self.lower.clone(),
        }
    }

    pub fn write_sidecar<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, &self.sidecar())?;
        Ok(())
    }

    /// Rebuilds an ensemble from its CSV and JSON sidecar.
    pub fn read<C: Read, S: Read>(csv_in: C, sidecar_in: S) -> Result<Ensemble> {
        let side: Sidecar = serde_json::from_reader(sidecar_in)?;
        let rows = parse_rows(csv_in)?;
        side.assemble(&rows)
    }
}

/// Boundary data stored beside the curve CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sidecar {
    pub first_index: usize,
    pub last_index: usize,
    pub grid: Grid1D,
    pub entrance: Vec<f64>,
    pub exit: Vec<f64>,
    pub upper: Boundary,
    pub lower: Boundary,
}

impl Sidecar {
    pub fn parse(text: &str) -> Result<Sidecar> {
        Ok(serde_json::from_str(text)?)
    }

    /// Matches `(curve, x, value)` rows against this sidecar.
    pub fn assemble(&self, rows: &[(usize, f64, f64)]) -> Result<Ensemble> {
        let bad = |m: String| Err(Error::Parse(m));
        if self.last_index < self.first_index {
            return bad("last_index below first_index".into());
        }
        let Some(count) = (self.last_index - self.first_index).checked_add(1) else {
            return bad("curve index range overflows".into());
        };
        let n = self.grid.len();
        if count.checked_mul(n) != Some(rows.len()) {
            return bad(format!(
                "expected {count} curves of {n} points, got {} rows",
                rows.len()
            ));
        }
        if self.entrance.len() != count || self.exit.len() != count {
            return bad("entrance/exit length does not match curve count".into());
        }
        let tol = 1e-9 * self.grid.lo().abs().max(self.grid.hi().abs()).max(1.0);
        let mut curves = Vec::with_capacity(count);
        for c in 0..count {
            let mut v = Vec::with_capacity(n);
            for j in 0..n {
                let (idx, x, val) = rows[c * n + j];
                if idx != self.first_index + c || (x - self.grid.point(j)).abs() > tol {
                    return bad(format!("row {} out of order: curve {idx}, x = {x}", c * n + j));
                }
                v.push(val);
            }
            if v[0] != self.entrance[c] || v[n - 1] != self.exit[c] {
                return bad(format!(
                    "curve {} endpoints disagree with entrance/exit data",
                    self.first_index + c
                ));
            }
            curves.push(v);
        }
        Ensemble::new(
            self.first_index,
            self.grid,
            curves,
            self.upper.clone(),
            self.lower.clone(),
        )
    }
}

/// Reads `curve,x,value` rows.
pub fn parse_rows<R: Read>(input: R) -> Result<Vec<(usize, f64, f64)>> {
    let mut r = csv::ReaderBuilder::new().from_reader(input);
    let header = r.headers().map_err(|e| Error::Parse(e.to_string()))?;
    if header.iter().collect::<Vec<_>>() != ["curve", "x", "value"] {
        return Err(Error::Parse(format!("unexpected header {header:?}")));
    }
    let mut rows = Vec::new();
    for rec in r.deserialize::<(usize, f64, f64)>() {
        rows.push(rec.map_err(|e| Error::Parse(e.to_string()))?);
    }
    Ok(rows)
}

/// Result of [`boltzmann_weight`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Weight {
    pub value: f64,
    /// `-sum of integrals`; `-inf` on underflow.
    pub log_value: f64,
    /// Set when an exponent left the representable range or the weight
    /// rounded to zero.
    pub underflow: bool,
}

/// `exp(-sum_i int H(L^i - L^{i-1}) dx)` over all adjacent pairs including
/// the boundaries, with trapezoid integrals.
pub fn boltzmann_weight(e: &Ensemble, h: &Hamiltonian) -> Weight {
    if h.is_free() {
        return Weight {
            value: 1.0,
            log_value: 0.0,
            underflow: false,
        };
    }
    let rate = h.rate();
    let n = e.grid.len();
    let dx = e.grid.dx();
    let mut total = 0.0;
    for p in 0..=e.curves.len() {
        for j in 0..n {
            let arg = rate * e.gap(p, j);
            if arg > EXP_LIMIT {
                return Weight {
                    value: 0.0,
                    log_value: f64::NEG_INFINITY,
                    underflow: true,
                };
            }
            let w = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
            total += w * dx * arg.exp();
        }
    }
    let value = (-total).exp();
    Weight {
        value,
        log_value: -total,
        underflow: value == 0.0,
    }
}

/// Counters from a sweep.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SweepStats {
    pub sites: usize,
    /// Lattice widenings forced by mass near a lattice end.
    pub widenings: usize,
}

/// One-site conditional law: a Gaussian local bridge tilted by the
/// interaction with the curves directly above and below.
struct SiteLaw {
    mean: f64,
    sd: f64,
    dx: f64,
    rate: f64,
    above: f64,
    below: f64,
}

impl SiteLaw {
    fn new(e: &Ensemble, h: &Hamiltonian, c: usize, j: usize) -> Self {
        let v = &e.curves[c];
        let dx = e.grid.dx();
        Self {
            mean: 0.5 * (v[j - 1] + v[j + 1]),
            sd: (0.5 * dx).sqrt(),
            dx,
            rate: h.rate(),
            above: e.above(c, j),
            below: e.below(c, j),
        }
    }

    fn interacts(&self) -> bool {
        self.rate > 0.0 && (self.above < f64::INFINITY || self.below > f64::NEG_INFINITY)
    }

    /// `H(v - above)` and `H(below - v)`.
    fn pushes(&self, v: f64) -> (f64, f64) {
        let exp = |x: f64| {
            if x == f64::NEG_INFINITY {
                0.0
            } else {
                (self.rate * x).exp()
            }
        };
        (exp(v - self.above), exp(self.below - v))
    }

    fn log_density(&self, v: f64) -> f64 {
        let z = (v - self.mean) / self.sd;
        let (up, down) = self.pushes(v);
        -0.5 * z * z - self.dx * (up + down)
    }

    fn slope(&self, v: f64) -> f64 {
        let (up, down) = self.pushes(v);
        -(v - self.mean) / (self.sd * self.sd) - self.dx * self.rate * (up - down)
    }

    fn curvature(&self, v: f64) -> f64 {
        let (up, down) = self.pushes(v);
        1.0 / (self.sd * self.sd) + self.dx * self.rate * self.rate * (up + down)
    }

    /// Mode of the log-concave density, by bracketing and bisection on the slope.
    fn mode(&self) -> f64 {
        if !self.interacts() {
            return self.mean;
        }
        let s0 = self.slope(self.mean);
        if s0 == 0.0 {
            return self.mean;
        }
        let dir = s0.signum();
        let mut near = self.mean;
        let mut step = self.sd;
        let mut far = self.mean + dir * step;
        while self.slope(far) * dir > 0.0 {
            near = far;
            step *= 2.0;
            far = self.mean + dir * step;
        }
        let (mut lo, mut hi) = if dir > 0.0 { (near, far) } else { (far, near) };
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.slope(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// `[lo, hi]` around the mode with both ends at least `TAIL_DROP` below
    /// the peak, plus the number of widenings that took.
    fn support(&self) -> (f64, f64, f64, usize) {
        let m = self.mode();
        let peak = self.log_density(m);
        let half = LATTICE_SDS / self.curvature(m).sqrt();
        let (mut left, mut right) = (half, half);
        let mut widenings = 0;
        while self.log_density(m - left) > peak - TAIL_DROP {
            left *= 2.0;
            widenings += 1;
        }
        while self.log_density(m + right) > peak - TAIL_DROP {
            right *= 2.0;
            widenings += 1;
        }
        (m - left, m + right, peak, widenings)
    }

    /// Unnormalised CDF at the lattice nodes `lo + k h`, from cell-midpoint masses.
    fn cdf(&self, lo: f64, h: f64, points: usize, peak: f64) -> Vec<f64> {
        let mut f = Vec::with_capacity(points);
        let mut acc = 0.0;
        f.push(0.0);
        for k in 0..points - 1 {
            acc += (self.log_density(lo + (k as f64 + 0.5) * h) - peak).exp();
            f.push(acc);
        }
        f
    }
}

/// Smallest lattice point whose CDF reaches `target`, interpolated linearly.
fn invert(cdf: &[f64], lo: f64, h: f64, target: f64) -> f64 {
    let k = cdf.partition_point(|&f| f < target).clamp(1, cdf.len() - 1) - 1;
    let mass = cdf[k + 1] - cdf[k];
    let frac = if mass > 0.0 {
        ((target - cdf[k]) / mass).clamp(0.0, 1.0)
    } else {
        0.0
    };
    lo + (k as f64 + frac) * h
}

fn sample_site(law: &SiteLaw, u: f64, stats: &mut SweepStats) -> f64 {
    let (lo, hi, peak, widenings) = law.support();
    stats.widenings += widenings;
    let h = (hi - lo) / (LATTICE_POINTS - 1) as f64;
    let cdf = law.cdf(lo, h, LATTICE_POINTS, peak);
    invert(&cdf, lo, h, u * cdf[LATTICE_POINTS - 1])
}

/// One heat-bath sweep in place: curves top to bottom, sites left to right,
/// each interior site redrawn from its one-site conditional by inverse CDF.
pub fn sweep_in_place(e: &mut Ensemble, h: &Hamiltonian, rng: &mut RngStream) -> SweepStats {
    let mut stats = SweepStats::default();
    let n = e.grid.len();
    for c in 0..e.curves.len() {
        for j in 1..n - 1 {
            let law = SiteLaw::new(e, h, c, j);
            let u = rng.uniform();
            e.curves[c][j] = sample_site(&law, u, &mut stats);
            stats.sites += 1;
        }
    }
    stats
}

pub fn resample_sweep(e: &Ensemble, h: &Hamiltonian, rng: &mut RngStream) -> Ensemble {
    let mut out = e.clone();
    sweep_in_place(&mut out, h, rng);
    out
}

fn boundary_le(a: &Boundary, b: &Boundary, n: usize) -> bool {
    (0..n).all(|j| a.at(j) <= b.at(j))
}

/// Checks `lo <= hi` on every curve, boundary and grid point.
pub fn check_ordered(lo: &Ensemble, hi: &Ensemble) -> Result<()> {
    if lo.grid != hi.grid || lo.first_index != hi.first_index || lo.curves.len() != hi.curves.len() {
        return Err(Error::OrderViolated("ensembles have different shapes".into()));
    }
    let n = lo.grid.len();
    for (c, (a, b)) in lo.curves.iter().zip(&hi.curves).enumerate() {
        if let Some(j) = (0..n).find(|&j| a[j] > b[j]) {
            return Err(Error::OrderViolated(format!(
                "curve {} at site {j}",
                lo.first_index + c
            )));
        }
    }
    if !boundary_le(&lo.upper, &hi.upper, n) {
        return Err(Error::OrderViolated("upper boundary".into()));
    }
    if !boundary_le(&lo.lower, &hi.lower, n) {
        return Err(Error::OrderViolated("lower boundary".into()));
    }
    Ok(())
}

/// One sweep of both ensembles driven by the same uniforms.
///
/// At each site both conditionals are tabulated on one common lattice and the
/// upper CDF is capped by the lower one, so the upper draw is never below the
/// lower draw. Ordering of the inputs is checked first.
pub fn monotone_coupled_sweep(
    lo: &Ensemble,
    hi: &Ensemble,
    h: &Hamiltonian,
    rng: &mut RngStream,
) -> Result<(Ensemble, Ensemble)> {
    check_ordered(lo, hi)?;
    let (mut lo, mut hi) = (lo.clone(), hi.clone());
    let mut stats = SweepStats::default();
    let n = lo.grid.len();
    for c in 0..lo.curves.len() {
        for j in 1..n - 1 {
            let u = rng.uniform();
            let (a, b) = coupled_site(&SiteLaw::new(&lo, h, c, j), &SiteLaw::new(&hi, h, c, j), u, &mut stats);
            lo.curves[c][j] = a;
            hi.curves[c][j] = b;
        }
    }
    Ok((lo, hi))
}

fn coupled_site(lo: &SiteLaw, hi: &SiteLaw, u: f64, stats: &mut SweepStats) -> (f64, f64) {
    let (a0, a1, peak_lo, w0) = lo.support();
    let (b0, b1, peak_hi, w1) = hi.support();
    stats.widenings += w0 + w1;
    let start = a0.min(b0);
    let span = a1.max(b1) - start;
    let finest = ((a1 - a0).min(b1 - b0)) / (LATTICE_POINTS - 1) as f64;
    let points = ((span / finest).ceil() as usize + 1).clamp(LATTICE_POINTS, MAX_COUPLED_POINTS);
    let h = span / (points - 1) as f64;
    let mut f_lo = lo.cdf(start, h, points, peak_lo);
    let mut f_hi = hi.cdf(start, h, points, peak_hi);
    let (t_lo, t_hi) = (f_lo[points - 1], f_hi[points - 1]);
    f_lo.iter_mut().for_each(|f| *f /= t_lo);
    for (a, b) in f_hi.iter_mut().zip(&f_lo) {
        *a = (*a / t_hi).min(*b);
    }
    let x_lo = invert(&f_lo, start, h, u);
    let x_hi = invert(&f_hi, start, h, u);
    (x_lo, x_hi.max(x_lo))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bridge::sample_bridge;
    use statrs::distribution::{ContinuousCDF, Normal};

    fn unit_grid(n: usize) -> Grid1D {
        Grid1D::new(0.0, 1.0, n).unwrap()
    }

    #[test]
    fn weight_examples() {
        let g = unit_grid(11);
        let e = Ensemble::flat(1, g, &[10.0, 0.0]).unwrap();
        let w = boltzmann_weight(&e, &Hamiltonian::new(1.0).unwrap());
        assert!((w.value - (-(-10.0f64).exp()).exp()).abs() < 1e-15);
        assert!((w.value - 0.9999546011007987).abs() < 1e-15);

        let single = Ensemble::flat(1, g, &[3.0]).unwrap();
        assert_eq!(boltzmann_weight(&single, &Hamiltonian::new(5.0).unwrap()).value, 1.0);
    }

    #[test]
    fn half_interval_crossing() {
        let g = Grid1D::new(0.0, 1.0, 10).unwrap();
        let top = vec![0.0; 10];
        let bottom: Vec<f64> = (0..10).map(|j| if j < 5 { 1.0 } else { -1e3 }).collect();
        let e = Ensemble::new(1, g, vec![top, bottom], Boundary::PlusInfinity, Boundary::MinusInfinity).unwrap();
        let w = boltzmann_weight(&e, &Hamiltonian::new(8.0).unwrap());
        let exact = (-0.5 * 1f64.exp().powi(2)).exp();
        assert!((w.value - exact).abs() < 1e-12, "{} vs {exact}", w.value);
        assert!(!w.underflow);
    }

    #[test]
    fn weight_underflow_is_flagged() {
        let g = unit_grid(5);
        let e = Ensemble::flat(1, g, &[0.0, 1000.0]).unwrap();
        let w = boltzmann_weight(&e, &Hamiltonian::new(1.0).unwrap());
        assert_eq!(w.value, 0.0);
        assert!(w.underflow);
    }

    #[test]
    fn hamiltonian_is_convex() {
        let h = Hamiltonian::new(2.5).unwrap();
        for i in -40..40 {
            for k in -40..40 {
                let (x, y) = (i as f64 * 0.1, k as f64 * 0.1);
                let lhs = h.eval(0.5 * (x + y));
                let rhs = 0.5 * (h.eval(x) + h.eval(y));
                assert!(lhs <= rhs + 1e-12 * rhs.abs().max(1.0));
            }
        }
        assert_eq!(Hamiltonian::free().eval(100.0), 0.0);
    }

    #[test]
    fn free_site_matches_gaussian_quantiles() {
        let g = unit_grid(3);
        let e = Ensemble::new(
            1,
            g,
            vec![vec![0.0, 0.0, 1.0]],
            Boundary::PlusInfinity,
            Boundary::MinusInfinity,
        )
        .unwrap();
        let law = SiteLaw::new(&e, &Hamiltonian::new(1.0).unwrap(), 0, 1);
        let normal = Normal::new(0.5, 0.5).unwrap();
        let mut stats = SweepStats::default();
        let resolution = 16.0 * 0.5 / (LATTICE_POINTS - 1) as f64;
        for &u in &[0.001, 0.1, 0.3, 0.5, 0.77, 0.999] {
            let x = sample_site(&law, u, &mut stats);
            assert!((x - normal.inverse_cdf(u)).abs() < resolution, "u = {u}");
        }
        assert_eq!(stats.widenings, 0);
    }

    #[test]
    fn free_bridge_mean_after_sweeps() {
        let g = unit_grid(17);
        let mut rng = RngStream::new(5, 0);
        let mut e = Ensemble::new(
            1,
            g,
            vec![g.points().map(|x| if x == 1.0 { 2.0 } else { 0.0 }).collect()],
            Boundary::PlusInfinity,
            Boundary::MinusInfinity,
        )
        .unwrap();
        let h = Hamiltonian::new(1.0).unwrap();
        for _ in 0..200 {
            sweep_in_place(&mut e, &h, &mut rng);
        }
        let mut samples = Vec::new();
        for _ in 0..4000 {
            sweep_in_place(&mut e, &h, &mut rng);
            samples.push(e.curves()[0][8]);
        }
        // Strongly autocorrelated chain; thin before taking a stderr.
        let thinned: Vec<f64> = samples.iter().step_by(20).copied().collect();
        let m = thinned.iter().sum::<f64>() / thinned.len() as f64;
        let sd = (0.25f64).sqrt();
        assert!((m - 1.0).abs() < 3.0 * sd / (thinned.len() as f64).sqrt(), "mean {m}");
    }

    #[test]
    fn free_sweep_preserves_bridge_marginal() {
        let g = unit_grid(9);
        let h = Hamiltonian::free();
        let (mut before, mut after) = (Vec::new(), Vec::new());
        for s in 0..2000 {
            let mut rng = RngStream::new(17, s);
            let path = sample_bridge(0.0, 1.0, 0.0, 0.0, &g, &mut rng).unwrap();
            let e = Ensemble::new(
                1,
                g,
                vec![path.into_values()],
                Boundary::PlusInfinity,
                Boundary::MinusInfinity,
            )
            .unwrap();
            before.push(e.curves()[0][4]);
            after.push(resample_sweep(&e, &h, &mut rng).curves()[0][4]);
        }
        let var = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64;
        assert!((var(&before) - 0.25).abs() < 0.03);
        assert!((var(&after) - 0.25).abs() < 0.03);
    }

    #[test]
    fn coupling_is_diagonal_on_equal_inputs() {
        let g = unit_grid(9);
        let e = Ensemble::flat(1, g, &[1.0, 0.0]).unwrap();
        let h = Hamiltonian::new(1.0).unwrap();
        let mut rng = RngStream::new(3, 0);
        let (a, b) = monotone_coupled_sweep(&e, &e, &h, &mut rng).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn coupling_preserves_order() {
        let g = unit_grid(17);
        let h = Hamiltonian::new(2.0).unwrap();
        for seed in 0..5 {
            let mut lo = Ensemble::flat(1, g, &[0.0, -1.0]).unwrap();
            let mut hi = Ensemble::flat(1, g, &[5.0, 4.0]).unwrap();
            let mut rng = RngStream::new(seed, 0);
            for _ in 0..50 {
                let (a, b) = monotone_coupled_sweep(&lo, &hi, &h, &mut rng).unwrap();
                check_ordered(&a, &b).unwrap();
                lo = a;
                hi = b;
            }
        }
    }

    #[test]
    fn coupling_rejects_unordered_inputs() {
        let g = unit_grid(5);
        let lo = Ensemble::flat(1, g, &[1.0]).unwrap();
        let hi = Ensemble::flat(1, g, &[0.0]).unwrap();
        let h = Hamiltonian::new(1.0).unwrap();
        let mut rng = RngStream::new(0, 0);
        assert!(matches!(
            monotone_coupled_sweep(&lo, &hi, &h, &mut rng),
            Err(Error::OrderViolated(_))
        ));
    }

    #[test]
    fn csv_and_sidecar_round_trip() {
        let g = Grid1D::new(-1.0, 1.0, 5).unwrap();
        let e = Ensemble::new(
            2,
            g,
            vec![vec![1.0, 1.5, 0.25, 1.0, 0.5], vec![0.0, -0.1, 0.3, 0.0, -2.0]],
            Boundary::Path(vec![3.0; 5]),
            Boundary::MinusInfinity,
        )
        .unwrap();
        let (mut c, mut s) = (Vec::new(), Vec::new());
        e.write_csv(&mut c).unwrap();
        e.write_sidecar(&mut s).unwrap();
        assert!(String::from_utf8(c.clone())
            .unwrap()
            .starts_with("curve,x,value\n2,-1,1\n"));
        assert_eq!(Ensemble::read(&c[..], &s[..]).unwrap(), e);
    }

    #[test]
    fn invalid_boundaries_rejected() {
        let g = unit_grid(3);
        assert!(Ensemble::new(
            1,
            g,
            vec![vec![0.0; 3]],
            Boundary::MinusInfinity,
            Boundary::MinusInfinity
        )
        .is_err());
        assert!(Ensemble::new(
            1,
            g,
            vec![vec![0.0; 3]],
            Boundary::PlusInfinity,
            Boundary::Path(vec![0.0; 2])
        )
        .is_err());
        assert!(Ensemble::new(1, g, vec![], Boundary::PlusInfinity, Boundary::MinusInfinity).is_err());
    }

    #[test]
    fn sidecar_index_overflow_is_an_error() {
        let text = r#"{"first_index": 0, "last_index": 18446744073709551615,
            "grid": {"lo": 0.0, "hi": 1.0, "n": 2}, "entrance": [0.0], "exit": [0.0],
            "upper": "plus_infinity", "lower": "minus_infinity"}"#;
        let side = Sidecar::parse(text).unwrap();
        assert!(matches!(
            side.assemble(&[(0, 0.0, 0.0), (0, 1.0, 0.0)]),
            Err(Error::Parse(_))
        ));
    }
}
