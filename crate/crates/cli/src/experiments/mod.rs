//! The experiments behind `kpzlab run`.

mod appendix;
mod gibbs;
mod she_check;
mod spatial;
mod two_time;
mod zero_temp;

use std::collections::BTreeMap;

use kpzlab_core::stats::TailEstimate;
use kpzlab_core::RngStream;
use serde::Serialize;
use serde_json::Value;

use crate::config::{ExperimentConfig, Params};
use crate::error::Result;
use crate::report::ReportBundle;

pub use she_check::noise_off_oracle;
pub use two_time::{algebra, Algebra};

/// Stream ids from here up serve bootstraps and other non-replica draws,
/// far from any replica stream or its sub-streams.
const AUX_BASE: u64 = 1 << 62;

#[derive(Clone, Copy, Debug)]
pub struct Ctx {
    pub seed: u64,
    pub workers: usize,
}

impl Ctx {
    /// Replica `i` draws from stream `i`.
    pub fn replica(&self, i: u64) -> RngStream {
        RngStream::new(self.seed, i)
    }

    pub fn aux(&self, k: u64) -> RngStream {
        RngStream::new(self.seed, AUX_BASE + k)
    }
}

/// Validates the configuration, then runs the experiment.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ReportBundle> {
    let params = cfg.params()?;
    let ctx = Ctx {
        seed: cfg.seed,
        workers: cfg.workers,
    };
    let mut bundle = match &params {
        Params::SheCheck(p) => she_check::run(p, &ctx)?,
        Params::TwoTime(p) => two_time::run(p, &ctx)?,
        Params::Remote(p) => zero_temp::remote(p, &ctx)?,
        Params::Adjacent(p) => zero_temp::adjacent(p, &ctx)?,
        Params::Tails(p) => zero_temp::tails(p, &ctx)?,
        Params::ZeroTempScan(p) => zero_temp::scan_experiment(p, &ctx)?,
        Params::Spatial(p) => spatial::extremes(p, &ctx)?,
        Params::Modulus(p) => spatial::modulus(p, &ctx)?,
        Params::Gibbs(p) => gibbs::run(p, &ctx)?,
        Params::Appendix(p) => appendix::run(p, &ctx)?,
    };
    bundle.experiment = cfg.experiment;
    bundle.seed = cfg.seed;
    bundle.parameters = serde_json::to_value(&params)?;
    Ok(bundle)
}

/// JSON number, or `null` for a non-finite value.
pub(crate) fn val(v: f64) -> Value {
    if v.is_finite() {
        Value::from(v)
    } else {
        Value::Null
    }
}

pub(crate) fn json<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

pub(crate) fn tail_json(e: &TailEstimate) -> Value {
    let mut m = serde_json::Map::new();
    m.insert("p_hat".into(), val(e.p_hat));
    m.insert("ci_lo".into(), val(e.ci_lo));
    m.insert("ci_hi".into(), val(e.ci_hi));
    m.insert("count".into(), Value::from(e.count));
    m.insert("n".into(), Value::from(e.n));
    Value::Object(m)
}

pub(crate) fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub(crate) type Estimates = BTreeMap<String, Value>;

/// Bundle whose experiment, seed and parameters are filled in by
/// [`run_experiment`].
pub(crate) fn bundle(
    estimates: Estimates,
    checks: Vec<crate::report::Check>,
    csv: Vec<u8>,
    plot: crate::svg::Plot,
) -> ReportBundle {
    ReportBundle {
        experiment: crate::config::Experiment::SheCheck,
        seed: 0,
        parameters: Value::Null,
        estimates,
        checks,
        csv,
        plot,
    }
}
