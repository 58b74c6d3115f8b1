use std::sync::Arc;

use kpzlab_core::stats::{fit_power_law, pearson_corr, tail_estimate, CorrEstimate, PowerLawFit, TailEstimate};
use kpzlab_core::zerotemp::{write_zero_temp_csv, ZeroTempModel, ZeroTempPair, ZeroTempReplica, DEFAULT_RESOLUTION};
use kpzlab_core::Grid1D;

use super::{bundle, json, tail_json, val, Ctx, Estimates};
use crate::config::{AdjacentParams, RemoteParams, TailParams, ZeroTempScanParams};
use crate::error::Result;
use crate::pool::run_replicas;
use crate::report::{Check, ReportBundle};
use crate::svg::{Axes, Plot, Series};

/// Pairs for every replica (outer) and every `beta` (inner).
struct Samples {
    betas: Vec<f64>,
    pairs: Vec<Vec<ZeroTempPair>>,
}

impl Samples {
    fn draw(n: usize, betas: &[f64], replicas: usize, ctx: &Ctx) -> Result<Self> {
        let model: Arc<ZeroTempModel> = ZeroTempModel::cached(n, DEFAULT_RESOLUTION)?;
        let windows: Vec<Grid1D> = betas
            .iter()
            .map(|&b| model.window(b))
            .collect::<kpzlab_core::Result<_>>()?;
        let pairs = run_replicas(ctx.workers, replicas, |i| {
            let rep = ZeroTempReplica::new(&model, &ctx.replica(i));
            betas.iter().zip(&windows).map(|(&b, w)| rep.pair(b, w)).collect()
        })?;
        Ok(Self {
            betas: betas.to_vec(),
            pairs,
        })
    }

    fn column(&self, beta: f64) -> Vec<(f64, f64)> {
        let k = self.betas.iter().position(|&b| b == beta).expect("beta was sampled");
        self.pairs.iter().map(|row| (row[k].b_one, row[k].b_beta)).collect()
    }

    fn csv(&self) -> Result<Vec<u8>> {
        let flat: Vec<ZeroTempPair> = self.pairs.iter().flatten().cloned().collect();
        let mut out = Vec::new();
        write_zero_temp_csv(&flat, &mut out)?;
        Ok(out)
    }
}

fn union(lists: &[&[f64]]) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    for &v in lists.iter().flat_map(|l| l.iter()) {
        if !out.contains(&v) {
            out.push(v);
        }
    }
    out
}

fn precision(replicas: usize, min_replicas: usize) -> Option<Check> {
    (replicas < min_replicas).then(|| {
        Check::new(
            "precision",
            false,
            format!("insufficient precision: {replicas} replicas, at least {min_replicas} needed"),
        )
    })
}

/// Correlation at each point and a power-law fit of `transform(corr)`.
struct Scan {
    points: Vec<(f64, CorrEstimate)>,
    fit: Option<PowerLawFit>,
}

struct ScanSpec<'a> {
    label: &'a str,
    xs: &'a [f64],
    transform: fn(f64) -> f64,
    /// Accepted slope range.
    window: (f64, f64),
    /// First aux stream for the bootstraps.
    boot_base: u64,
}

fn scan(
    spec: ScanSpec,
    column: impl Fn(f64) -> Vec<(f64, f64)>,
    ctx: &Ctx,
    est: &mut Estimates,
    checks: &mut Vec<Check>,
) -> Scan {
    let ScanSpec {
        label,
        xs,
        transform,
        window,
        boot_base,
    } = spec;
    let mut points = Vec::new();
    let mut bad = None;
    for (k, &x) in xs.iter().enumerate() {
        match pearson_corr(&column(x), &ctx.aux(boot_base + k as u64)) {
            Ok(c) => {
                est.insert(format!("{label}_corr[{x}]"), json(&c));
                if !(transform(c.estimate) > 0.0) && bad.is_none() {
                    bad = Some(format!(
                        "transformed correlation at {x} is {:.4}, not positive",
                        transform(c.estimate)
                    ));
                }
                points.push((x, c));
            }
            Err(e) => {
                bad.get_or_insert(format!("correlation at {x}: {e}"));
            }
        }
    }
    let name = format!("{label}_slope");
    if let Some(reason) = bad {
        checks.push(Check::new(name, false, format!("insufficient precision: {reason}")));
        return Scan { points, fit: None };
    }
    let ys: Vec<f64> = points.iter().map(|(_, c)| transform(c.estimate)).collect();
    match fit_power_law(xs, &ys) {
        Ok(fit) => {
            est.insert(format!("{label}_fit"), json(&fit));
            checks.push(Check::new(
                name,
                fit.slope >= window.0 && fit.slope <= window.1,
                format!(
                    "slope {:.4} (stderr {:.4}, r^2 {:.4}), window [{}, {}]",
                    fit.slope, fit.slope_stderr, fit.r_squared, window.0, window.1
                ),
            ));
            Scan { points, fit: Some(fit) }
        }
        Err(e) => {
            checks.push(Check::new(name, false, format!("insufficient precision: {e}")));
            Scan { points, fit: None }
        }
    }
}

fn series(label: &str, s: &Scan, transform: fn(f64) -> f64) -> Vec<Series> {
    let pts: Vec<(f64, f64)> = s.points.iter().map(|(x, c)| (*x, transform(c.estimate))).collect();
    let mut out = vec![Series::new(label, pts.clone())];
    if let (Some(fit), Some(first), Some(last)) = (s.fit, pts.first(), pts.last()) {
        let line = |x: f64| (fit.intercept + fit.slope * x.ln()).exp();
        out.push(
            Series::new(
                format!("{label} fit, slope {:.3}", fit.slope),
                vec![(first.0, line(first.0)), (last.0, line(last.0))],
            )
            .line(),
        );
    }
    out
}

fn identity(c: f64) -> f64 {
    c
}

fn complement(c: f64) -> f64 {
    1.0 - c
}

fn remote_scan(p: &RemoteParams, s: &Samples, ctx: &Ctx, est: &mut Estimates, checks: &mut Vec<Check>) -> Scan {
    let spec = ScanSpec {
        label: "remote",
        xs: &p.alpha,
        transform: identity,
        window: (p.slope_min, p.slope_max),
        boot_base: 0,
    };
    scan(spec, |a| s.column(a - 1.0), ctx, est, checks)
}

fn adjacent_scan(p: &AdjacentParams, s: &Samples, ctx: &Ctx, est: &mut Estimates, checks: &mut Vec<Check>) -> Scan {
    let spec = ScanSpec {
        label: "adjacent",
        xs: &p.beta,
        transform: complement,
        window: (p.slope_min, p.slope_max),
        boot_base: 1000,
    };
    scan(spec, |b| s.column(b), ctx, est, checks)
}

/// `(b_beta - b_one) / beta^{1/3}` per replica.
fn differences(p: &TailParams, s: &Samples) -> Vec<f64> {
    let scale = p.beta.cbrt();
    s.column(p.beta)
        .iter()
        .map(|(one, later)| (later - one) / scale)
        .collect()
}

fn tail_checks(p: &TailParams, d: &[f64], est: &mut Estimates, checks: &mut Vec<Check>) -> Result<()> {
    let neg: Vec<f64> = d.iter().map(|v| -v).collect();
    let both = |s: f64| -> Result<(TailEstimate, TailEstimate)> { Ok((tail_estimate(d, s)?, tail_estimate(&neg, s)?)) };
    for &s in &p.thresholds {
        let (up, lo) = both(s)?;
        est.insert(format!("upper_tail[{s}]"), tail_json(&up));
        est.insert(format!("lower_tail[{s}]"), tail_json(&lo));
        let slack = p.sigmas * (up.stderr().powi(2) + lo.stderr().powi(2)).sqrt();
        checks.push(Check::new(
            format!("lower_not_heavier[{s}]"),
            lo.p_hat <= up.p_hat + slack,
            format!(
                "P(D < -{s}) = {:.5} against P(D > {s}) = {:.5} + {slack:.5}",
                lo.p_hat, up.p_hat
            ),
        ));
    }
    let (from, _) = both(p.decay_from)?;
    let (to, _) = both(p.decay_to)?;
    checks.push(Check::new(
        "upper_tail_decay",
        to.p_hat < from.p_hat,
        format!(
            "P(D > {}) = {:.5} against P(D > {}) = {:.5}",
            p.decay_to, to.p_hat, p.decay_from, from.p_hat
        ),
    ));
    est.insert("difference_mean".into(), val(kpzlab_core::stats::mean(d)));
    est.insert("difference_variance".into(), val(kpzlab_core::stats::variance(d)));
    Ok(())
}

pub(crate) fn remote(p: &RemoteParams, ctx: &Ctx) -> Result<ReportBundle> {
    let betas: Vec<f64> = p.alpha.iter().map(|a| a - 1.0).collect();
    let s = Samples::draw(p.n, &betas, p.replicas, ctx)?;
    let (mut est, mut checks) = (Estimates::new(), Vec::new());
    checks.extend(precision(p.replicas, p.min_replicas));
    let r = remote_scan(p, &s, ctx, &mut est, &mut checks);
    let plot = Plot::new(
        "remote correlation",
        "alpha",
        "Corr",
        Axes::LogLog,
        series("Corr", &r, identity),
    );
    Ok(bundle(est, checks, s.csv()?, plot))
}

pub(crate) fn adjacent(p: &AdjacentParams, ctx: &Ctx) -> Result<ReportBundle> {
    let s = Samples::draw(p.n, &p.beta, p.replicas, ctx)?;
    let (mut est, mut checks) = (Estimates::new(), Vec::new());
    checks.extend(precision(p.replicas, p.min_replicas));
    let a = adjacent_scan(p, &s, ctx, &mut est, &mut checks);
    let plot = Plot::new(
        "adjacent correlation",
        "beta",
        "1 - Corr",
        Axes::LogLog,
        series("1 - Corr", &a, complement),
    );
    Ok(bundle(est, checks, s.csv()?, plot))
}

pub(crate) fn tails(p: &TailParams, ctx: &Ctx) -> Result<ReportBundle> {
    let s = Samples::draw(p.n, &[p.beta], p.replicas, ctx)?;
    let (mut est, mut checks) = (Estimates::new(), Vec::new());
    checks.extend(precision(p.replicas, p.min_replicas));
    let d = differences(p, &s);
    tail_checks(p, &d, &mut est, &mut checks)?;
    let plot = Plot::ecdf_of(
        "scaled two-time difference",
        "(h(1 + beta) - h(1)) / beta^(1/3)",
        &[("D", &d)],
    );
    Ok(bundle(est, checks, s.csv()?, plot))
}

pub(crate) fn scan_experiment(p: &ZeroTempScanParams, ctx: &Ctx) -> Result<ReportBundle> {
    let (rp, ap, tp) = (p.remote(), p.adjacent(), p.tails());
    let remote_betas: Vec<f64> = rp.alpha.iter().map(|a| a - 1.0).collect();
    let betas = union(&[&remote_betas, &ap.beta, &[tp.beta]]);
    let s = Samples::draw(p.n, &betas, p.replicas, ctx)?;
    let (mut est, mut checks) = (Estimates::new(), Vec::new());
    checks.extend(precision(p.replicas, p.min_replicas));
    let r = remote_scan(&rp, &s, ctx, &mut est, &mut checks);
    let a = adjacent_scan(&ap, &s, ctx, &mut est, &mut checks);
    tail_checks(&tp, &differences(&tp, &s), &mut est, &mut checks)?;
    let mut lines = series("Corr against alpha", &r, identity);
    lines.extend(series("1 - Corr against beta", &a, complement));
    let plot = Plot::new(
        "zero-temperature correlation scans",
        "alpha or beta",
        "value",
        Axes::LogLog,
        lines,
    );
    Ok(bundle(est, checks, s.csv()?, plot))
}
