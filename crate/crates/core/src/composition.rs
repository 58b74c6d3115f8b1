//! The composition map `I_t`, its zero-temperature limit and the two-time sampler.
//!
//! For profiles `f` and `g` in the scaled variable `u = t^{-2/3} y`,
//!
//! ```text
//! I_t(f, g) = t^{-1/3} [ (2/3) log t + log ∫ exp(t^{1/3} (f(u) + g(-u))) du ]
//! I_∞(f, g) = sup_u { f(u) + g(-u) }
//! ```
//!
//! and the value at the later time is `I_t` applied to the profile at time `t`
//! and an independent, rescaled profile of duration `(alpha - 1) t`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid1D, SamplePath};
use crate::rng::RngStream;
use crate::she::{narrow_wedge_solve, scaled_height, Forcing, HeightField, SheConfig};

/// Required drop, in log units, from the integrand's peak to either window edge.
pub const EDGE_GAP: f64 = 30.0;

/// Quadrature nodes of the common window: the points of `f`'s grid where
/// `g(-u)` is also defined, with `f(u) + g(-u)` at each.
fn overlap(f: &SamplePath, g: &SamplePath) -> Result<(f64, Vec<(f64, f64)>)> {
    let fg = f.grid();
    let gg = g.grid();
    let lo = fg.lo().max(-gg.hi());
    let hi = fg.hi().min(-gg.lo());
    let slack = 1e-12 * fg.hi().abs().max(fg.lo().abs()).max(1.0);
    let mut nodes = Vec::new();
    for (i, u) in fg.points().enumerate() {
        if u < lo - slack || u > hi + slack {
            continue;
        }
        let v = (-u).clamp(gg.lo(), gg.hi());
        let gv = g.eval(v).expect("clamped into g's grid");
        nodes.push((u, f.values()[i] + gv));
    }
    if nodes.len() < 2 {
        return Err(Error::NoOverlap);
    }
    Ok((fg.dx(), nodes))
}

/// `I_t(f, g)` by the trapezoid rule on `f`'s grid, with the maximum exponent
/// factored out before exponentiating.
///
/// Fails with [`Error::WindowTooNarrow`] unless the integrand at both window
/// edges sits at least [`EDGE_GAP`] log units below its peak.
pub fn compose_finite_t(f: &SamplePath, g: &SamplePath, t: f64) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!("t = {t} must be positive")));
    }
    let (du, nodes) = overlap(f, g)?;
    let scale = t.cbrt();
    let mut peak = f64::NEG_INFINITY;
    for &(u, e) in &nodes {
        if !e.is_finite() {
            return Err(Error::NonFiniteIntegrand(u));
        }
        peak = peak.max(scale * e);
    }
    let last = nodes.len() - 1;
    let edge = (scale * nodes[0].1).max(scale * nodes[last].1);
    if peak - edge < EDGE_GAP {
        return Err(Error::WindowTooNarrow { gap: peak - edge });
    }
    let sum: f64 = nodes
        .iter()
        .enumerate()
        .map(|(i, &(_, e))| {
            let w = if i == 0 || i == last { 0.5 } else { 1.0 };
            w * (scale * e - peak).exp()
        })
        .sum();
    let log_integral = du.ln() + peak + sum.ln();
    Ok((2.0 / 3.0 * t.ln() + log_integral) / scale)
}

/// `max_y f(y) + g(-y)` over the grid points of `f` in the common window,
/// returned with the leftmost maximiser.
pub fn compose_zero_t(f: &SamplePath, g: &SamplePath) -> Result<(f64, f64)> {
    let (_, nodes) = overlap(f, g)?;
    let mut best = (f64::NEG_INFINITY, nodes[0].0);
    for &(u, e) in &nodes {
        if e > best.0 {
            best = (e, u);
        }
    }
    Ok(best)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// One solve of duration `alpha t`, read at times `t` and `alpha t`.
    Direct,
    /// Two independent solves joined by `I_t`.
    Composed,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Direct => "direct",
            Method::Composed => "composed",
        }
    }
}

/// A joint sample of the scaled heights at `(t, 0)` and `(alpha t, 0)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoTimePair {
    pub h_one: f64,
    pub h_alpha: f64,
    pub t: f64,
    pub alpha: f64,
    pub method: Method,
    pub seed: u64,
    pub stream: u64,
}

/// The two inputs of the composition law, both on the `u`-grid
/// `[-L t^{-2/3}, L t^{-2/3}]`:
/// the profile `u -> h_t(1, u)` and the rescaled later-time profile
/// `x -> (alpha-1)^{1/3} h_{(alpha-1)t}(1, (alpha-1)^{-2/3} x)`.
pub fn composed_profiles(
    cfg: &SheConfig,
    t: f64,
    alpha: f64,
    early: &Forcing,
    late: &Forcing,
) -> Result<(SamplePath, SamplePath)> {
    check_times(t, alpha)?;
    let first = narrow_wedge_solve(&cfg.for_duration(t, vec![t])?, early)?;
    let rest = (alpha - 1.0) * t;
    let second = narrow_wedge_solve(&cfg.for_duration(rest, vec![rest])?, late)?;
    let span = cfg.half_width / t.powf(2.0 / 3.0);
    let n = first.grid().len();
    let ugrid = Grid1D::new(-span, span, n)?;
    let f = profile(&ugrid, |u| scaled_height(&first, t, 1.0, u))?;
    let shrink = (alpha - 1.0).powf(-2.0 / 3.0);
    let lift = (alpha - 1.0).cbrt();
    let g = profile(&ugrid, |x| Ok(lift * scaled_height(&second, rest, 1.0, shrink * x)?))?;
    Ok((f, g))
}

fn profile(grid: &Grid1D, h: impl Fn(f64) -> Result<f64>) -> Result<SamplePath> {
    let values = grid.points().map(h).collect::<Result<Vec<_>>>()?;
    SamplePath::new(*grid, values)
}

fn check_times(t: f64, alpha: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!("t = {t} must be positive")));
    }
    if !(alpha > 1.0 && alpha.is_finite()) {
        return Err(Error::InvalidArgument(format!("alpha = {alpha} must exceed 1")));
    }
    Ok(())
}

/// Composed two-time sample: the early solve uses `rng`'s stream, the late
/// solve the sub-stream `stream_id + 2^32`, so the two are independent.
pub fn two_time_sample(cfg: &SheConfig, t: f64, alpha: f64, rng: &RngStream) -> Result<TwoTimePair> {
    let (f, g) = composed_profiles(
        cfg,
        t,
        alpha,
        &Forcing::White(rng.restarted()),
        &Forcing::White(rng.substream(1)),
    )?;
    Ok(TwoTimePair {
        h_one: f.eval(0.0).expect("0 lies in the window"),
        h_alpha: compose_finite_t(&f, &g, t)?,
        t,
        alpha,
        method: Method::Composed,
        seed: rng.seed(),
        stream: rng.stream_id(),
    })
}

/// Direct two-time sample from a single solve of duration `alpha t`.
pub fn two_time_direct(cfg: &SheConfig, t: f64, alpha: f64, rng: &RngStream) -> Result<TwoTimePair> {
    let field = direct_field(cfg, t, alpha, &Forcing::White(rng.restarted()))?;
    Ok(TwoTimePair {
        h_one: scaled_height(&field, t, 1.0, 0.0)?,
        h_alpha: scaled_height(&field, t, alpha, 0.0)?,
        t,
        alpha,
        method: Method::Direct,
        seed: rng.seed(),
        stream: rng.stream_id(),
    })
}

/// The single solve behind [`two_time_direct`], recorded at `t` and `alpha t`.
pub fn direct_field(cfg: &SheConfig, t: f64, alpha: f64, forcing: &Forcing) -> Result<HeightField> {
    check_times(t, alpha)?;
    narrow_wedge_solve(&cfg.for_duration(alpha * t, vec![t, alpha * t])?, forcing)
}

/// CSV with columns `t,alpha,method,h_one,h_alpha,seed,stream`.
pub fn write_pairs_csv<W: Write>(pairs: &[TwoTimePair], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(["t", "alpha", "method", "h_one", "h_alpha", "seed", "stream"])?;
    for p in pairs {
        w.write_record([
            p.t.to_string(),
            p.alpha.to_string(),
            p.method.as_str().to_string(),
            p.h_one.to_string(),
            p.h_alpha.to_string(),
            p.seed.to_string(),
            p.stream.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
