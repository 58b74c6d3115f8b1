use kpzlab_core::she::{narrow_wedge_solve, scaled_height, Forcing, SheConfig};
use kpzlab_core::stats::{mean, tail_estimate, variance, TailEstimate};

use super::{bundle, tail_json, val, Ctx, Estimates};
use crate::config::{ModulusParams, SpatialParams};
use crate::error::Result;
use crate::pool::run_replicas;
use crate::report::{csv_table, num, Check, ReportBundle};
use crate::svg::Plot;

/// One noisy solve to time `t`; the scaled profile `(u, h(u))` at the grid
/// points with `lo <= u <= hi`.
fn profiles(
    t: f64,
    dx: f64,
    half_width: f64,
    lo: f64,
    hi: f64,
    replicas: usize,
    ctx: &Ctx,
) -> Result<Vec<Vec<(f64, f64)>>> {
    let cfg = SheConfig::with_stable_dt(dx, half_width, t, vec![t])?;
    cfg.check_window(lo.abs().max(hi.abs()))?;
    let stretch = t.powf(2.0 / 3.0);
    let us: Vec<f64> = cfg
        .space_grid()
        .points()
        .map(|x| x / stretch)
        .filter(|u| *u >= lo - 1e-12 && *u <= hi + 1e-12)
        .collect();
    run_replicas(ctx.workers, replicas, |i| {
        let field = narrow_wedge_solve(&cfg, &Forcing::White(ctx.replica(i)))?;
        us.iter().map(|&u| Ok((u, scaled_height(&field, t, 1.0, u)?))).collect()
    })
}

fn tails(label: &str, samples: &[f64], thresholds: &[f64], est: &mut Estimates) -> Result<Vec<TailEstimate>> {
    est.insert(format!("{label}_mean"), val(mean(samples)));
    est.insert(format!("{label}_variance"), val(variance(samples)));
    thresholds
        .iter()
        .map(|&s| {
            let e = tail_estimate(samples, s)?;
            est.insert(format!("{label}_tail[{s}]"), tail_json(&e));
            Ok(e)
        })
        .collect()
}

/// Strict decay from the first to the last threshold.
fn decay(name: &str, event: &str, thresholds: &[f64], tail: &[TailEstimate]) -> Check {
    let (first, last) = (tail[0].p_hat, tail[tail.len() - 1].p_hat);
    let (s0, s1) = (thresholds[0], thresholds[thresholds.len() - 1]);
    Check::new(
        name,
        last < first,
        format!("P({event} {s1}) = {last:.5} against P({event} {s0}) = {first:.5}"),
    )
}

pub(crate) fn extremes(p: &SpatialParams, ctx: &Ctx) -> Result<ReportBundle> {
    let profiles = profiles(p.t, p.dx, p.half_width, -p.x_range, p.x_range, p.replicas, ctx)?;
    let (mut sups, mut infs) = (Vec::new(), Vec::new());
    for prof in &profiles {
        let sup = prof
            .iter()
            .map(|(u, h)| h + (1.0 - p.nu) * u * u / 2.0)
            .fold(f64::NEG_INFINITY, f64::max);
        let inf = prof
            .iter()
            .map(|(u, h)| h + (1.0 + p.nu) * u * u / 2.0)
            .fold(f64::INFINITY, f64::min);
        sups.push(sup);
        infs.push(-inf);
    }
    let mut est = Estimates::new();
    let up = tails("sup", &sups, &p.thresholds, &mut est)?;
    let down = tails("neg_inf", &infs, &p.thresholds, &mut est)?;
    let checks = vec![
        decay("sup_tail_decay", "S >", &p.thresholds, &up),
        decay("inf_tail_decay", "-I >", &p.thresholds, &down),
    ];
    let rows = sups
        .iter()
        .zip(&infs)
        .enumerate()
        .map(|(i, (s, n))| vec![i.to_string(), num(*s), num(-n)]);
    let csv = csv_table(&["replica", "sup", "inf"], rows)?;
    let negated: Vec<f64> = infs.iter().map(|v| -v).collect();
    let plot = Plot::ecdf_of("spatial extremes", "value", &[("sup", &sups), ("inf", &negated)]);
    Ok(bundle(est, checks, csv, plot))
}

/// `max |g(x) - g(y)| / (sqrt(d) ln(w / d)^{2/3})` over grid pairs at distance
/// `0 < d <= w / 2`, where `g(u) = h(u) + u^2/2` and `w` is the window width.
pub(crate) fn modulus_constant(profile: &[(f64, f64)], width: f64) -> f64 {
    let g: Vec<(f64, f64)> = profile.iter().map(|(u, h)| (*u, h + u * u / 2.0)).collect();
    let mut best = 0.0f64;
    for (i, &(x, gx)) in g.iter().enumerate() {
        for &(y, gy) in &g[i + 1..] {
            let d = y - x;
            if d > width / 2.0 + 1e-12 {
                break;
            }
            best = best.max((gy - gx).abs() / (d.sqrt() * (width / d).ln().powf(2.0 / 3.0)));
        }
    }
    best
}

pub(crate) fn modulus(p: &ModulusParams, ctx: &Ctx) -> Result<ReportBundle> {
    let profiles = profiles(p.t, p.dx, p.half_width, p.a, p.b, p.replicas, ctx)?;
    let width = p.b - p.a;
    let cs: Vec<f64> = profiles.iter().map(|prof| modulus_constant(prof, width)).collect();
    let mut est = Estimates::new();
    let tail = tails("modulus", &cs, &p.thresholds, &mut est)?;
    let checks = vec![decay("modulus_tail_decay", "C >", &p.thresholds, &tail)];
    let csv = csv_table(
        &["replica", "modulus"],
        cs.iter().enumerate().map(|(i, c)| vec![i.to_string(), num(*c)]),
    )?;
    let plot = Plot::histogram("modulus of continuity", "C", &cs, 30);
    Ok(bundle(est, checks, csv, plot))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_profile_has_zero_modulus() {
        let prof: Vec<(f64, f64)> = (0..21)
            .map(|k| {
                let u = -1.0 + 0.1 * k as f64;
                (u, -u * u / 2.0 + 3.0)
            })
            .collect();
        assert!(modulus_constant(&prof, 2.0).abs() < 1e-12);
    }

    #[test]
    fn single_jump_modulus() {
        let prof = vec![(0.0, 0.0), (0.25, -0.03125), (0.5, 1.0 - 0.125), (1.0, -0.5)];
        let c = modulus_constant(&prof, 1.0);
        let at = |d: f64| 1.0 / (d.sqrt() * (1.0 / d).ln().powf(2.0 / 3.0));
        assert!((c - at(0.25).max(at(0.5))).abs() < 1e-12);
    }
}
