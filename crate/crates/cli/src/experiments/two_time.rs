use kpzlab_core::composition::{compose_finite_t, two_time_direct, two_time_sample, write_pairs_csv, TwoTimePair};
use kpzlab_core::she::SheConfig;
use kpzlab_core::stats::{ks_two_sample, mean, variance};
use kpzlab_core::{Grid1D, RngStream, SamplePath};

use super::{bundle, json, val, Ctx, Estimates};
use crate::config::TwoTimeParams;
use crate::error::Result;
use crate::pool::run_replicas;
use crate::report::{Check, ReportBundle};
use crate::svg::Plot;

pub(crate) fn run(p: &TwoTimeParams, ctx: &Ctx) -> Result<ReportBundle> {
    let mut est = Estimates::new();
    let mut checks = Vec::new();

    let alg = algebra(p.algebra_cases, &mut ctx.aux(0))?;
    est.insert("shift_identity_max_error".into(), val(alg.shift_error));
    checks.push(Check::new(
        "shift_identity",
        alg.shift_error <= p.algebra_tol,
        format!(
            "max |I(f+c, g) - I(f, g) - c| = {:.3e} over {} cases, tolerance {:.0e}",
            alg.shift_error, p.algebra_cases, p.algebra_tol
        ),
    ));
    checks.push(Check::new(
        "monotone_in_f",
        alg.monotone_violations == 0,
        format!("{} violations over {} cases", alg.monotone_violations, p.algebra_cases),
    ));

    let cfg = SheConfig::with_stable_dt(p.dx, p.half_width, p.alpha * p.t, vec![p.alpha * p.t])?;
    let pairs = run_replicas(ctx.workers, p.replicas, |i| {
        let rng = ctx.replica(i);
        let direct = two_time_direct(&cfg, p.t, p.alpha, &rng.substream(2))?;
        let composed = two_time_sample(&cfg, p.t, p.alpha, &rng)?;
        Ok((direct, composed))
    })?;
    let pick = |f: fn(&(TwoTimePair, TwoTimePair)) -> f64| -> Vec<f64> { pairs.iter().map(f).collect() };
    let direct_alpha = pick(|q| q.0.h_alpha);
    let composed_alpha = pick(|q| q.1.h_alpha);
    let direct_one = pick(|q| q.0.h_one);
    let composed_one = pick(|q| q.1.h_one);
    for (name, xs) in [
        ("direct_h_alpha", &direct_alpha),
        ("composed_h_alpha", &composed_alpha),
        ("direct_h_one", &direct_one),
        ("composed_h_one", &composed_one),
    ] {
        est.insert(format!("{name}_mean"), val(mean(xs)));
        est.insert(format!("{name}_variance"), val(variance(xs)));
    }
    let ks = ks_two_sample(&direct_alpha, &composed_alpha)?;
    est.insert("ks_h_alpha".into(), json(&ks));
    est.insert("ks_h_one".into(), json(&ks_two_sample(&direct_one, &composed_one)?));
    checks.push(Check::new(
        "direct_vs_composed",
        ks.p_value >= p.ks_level,
        format!(
            "KS on h(alpha, 0): D = {:.4}, p = {:.4}, level {}, N = {} per method",
            ks.statistic, ks.p_value, p.ks_level, p.replicas
        ),
    ));

    let flat: Vec<TwoTimePair> = pairs.into_iter().flat_map(|(d, c)| [d, c]).collect();
    let mut csv = Vec::new();
    write_pairs_csv(&flat, &mut csv)?;
    let plot = Plot::ecdf_of(
        "h(alpha, 0): direct against composed",
        "h(alpha, 0)",
        &[("direct", &direct_alpha), ("composed", &composed_alpha)],
    );
    Ok(bundle(est, checks, csv, plot))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Algebra {
    pub shift_error: f64,
    pub monotone_violations: usize,
}

/// Random peaked profiles on `[-4, 4]`: the shift identity and monotonicity
/// of `I_t` in its first argument.
pub fn algebra(cases: usize, rng: &mut RngStream) -> Result<Algebra> {
    let grid = Grid1D::new(-4.0, 4.0, 161)?;
    let profile = |rng: &mut RngStream| -> Result<SamplePath> {
        let values = grid.points().map(|x| rng.normal() - 2.0 * x * x).collect();
        Ok(SamplePath::new(grid, values)?)
    };
    let mut out = Algebra {
        shift_error: 0.0,
        monotone_violations: 0,
    };
    for _ in 0..cases {
        let f = profile(rng)?;
        let g = profile(rng)?;
        let c = 100.0 * rng.uniform() - 50.0;
        let t = 0.5 + 20.0 * rng.uniform();
        let base = compose_finite_t(&f, &g, t)?;
        let shifted = compose_finite_t(&f.map(|_, v| v + c)?, &g, t)?;
        out.shift_error = out.shift_error.max((shifted - base - c).abs());
        let bumps: Vec<f64> = (0..grid.len()).map(|_| rng.uniform()).collect();
        let raised = SamplePath::new(grid, f.values().iter().zip(&bumps).map(|(v, b)| v + b).collect())?;
        if compose_finite_t(&raised, &g, t)? < base {
            out.monotone_violations += 1;
        }
    }
    Ok(out)
}
