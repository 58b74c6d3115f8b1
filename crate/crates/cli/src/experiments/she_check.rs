use kpzlab_core::she::{narrow_wedge_solve, scaled_height, Forcing, SheConfig};
use kpzlab_core::stats::{fkg_check, ks_two_sample, mean, variance};

use super::{bundle, json, median, val, Ctx, Estimates};
use crate::config::SheCheckParams;
use crate::error::Result;
use crate::pool::run_replicas;
use crate::report::{csv_table, num, Check, ReportBundle};
use crate::svg::Plot;

pub(crate) fn run(p: &SheCheckParams, ctx: &Ctx) -> Result<ReportBundle> {
    let mut est = Estimates::new();
    let mut checks = Vec::new();

    let (sup_err, spread) = noise_off_oracle(p)?;
    est.insert("noise_off_sup_error".into(), val(sup_err));
    est.insert("noise_off_shifted_spread".into(), val(spread));
    checks.push(Check::new(
        "noise_off_oracle",
        sup_err <= p.oracle_tol,
        format!(
            "sup |log Z - log p| = {sup_err:.3e} on [-{r}, {r}], tolerance {:.1e}",
            p.oracle_tol,
            r = p.oracle_range
        ),
    ));
    checks.push(Check::new(
        "noise_off_flat",
        spread <= p.oracle_tol,
        format!("spread of h + x^2/2 = {spread:.3e}, tolerance {:.1e}", p.oracle_tol),
    ));

    let long = p.alpha * p.t;
    let cfg = SheConfig::with_stable_dt(p.dx, p.half_width, long, vec![p.t, long])?;
    let reach = p.x_points.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    cfg.check_window(reach)?;
    let samples = run_replicas(ctx.workers, p.replicas, |i| {
        let field = narrow_wedge_solve(&cfg, &Forcing::White(ctx.replica(i)))?;
        let shifted = p
            .x_points
            .iter()
            .map(|&x| Ok(scaled_height(&field, p.t, 1.0, x)? + x * x / 2.0))
            .collect::<kpzlab_core::Result<Vec<f64>>>()?;
        let h_one = scaled_height(&field, p.t, 1.0, 0.0)?;
        let h_alpha = scaled_height(&field, p.t, p.alpha, 0.0)?;
        Ok((shifted, h_one, h_alpha))
    })?;

    let columns: Vec<Vec<f64>> = (0..p.x_points.len())
        .map(|k| samples.iter().map(|s| s.0[k]).collect())
        .collect();
    for (k, col) in columns.iter().enumerate() {
        let x = p.x_points[k];
        est.insert(format!("shifted_mean[x={x}]"), val(mean(col)));
        est.insert(format!("shifted_variance[x={x}]"), val(variance(col)));
    }
    for a in 0..columns.len() {
        for b in a + 1..columns.len() {
            let (xa, xb) = (p.x_points[a], p.x_points[b]);
            let ks = ks_two_sample(&columns[a], &columns[b])?;
            est.insert(format!("stationarity_ks[{xa},{xb}]"), json(&ks));
            checks.push(Check::new(
                format!("stationarity[{xa},{xb}]"),
                ks.p_value >= p.ks_level,
                format!(
                    "KS D = {:.4}, p = {:.4}, level {}",
                    ks.statistic, ks.p_value, p.ks_level
                ),
            ));
        }
    }

    let pairs: Vec<(f64, f64)> = samples.iter().map(|s| (s.1, s.2)).collect();
    let (s1, s2) = (
        median(&samples.iter().map(|s| s.1).collect::<Vec<_>>()),
        median(&samples.iter().map(|s| s.2).collect::<Vec<_>>()),
    );
    match fkg_check(&pairs, s1, s2) {
        Ok(rep) => {
            let detail = format!(
                "P(A and B) - P(A)P(B) = {:.4} at medians ({s1:.4}, {s2:.4}){}",
                rep.margins.get("positive_association").copied().unwrap_or(f64::NAN),
                if rep.flags.is_empty() {
                    String::new()
                } else {
                    format!("; {}", rep.flags.join("; "))
                }
            );
            checks.push(Check::new("fkg", rep.passed(), detail));
            est.insert("fkg".into(), json(&rep));
        }
        Err(e) => checks.push(Check::new("fkg", false, format!("insufficient precision: {e}"))),
    }

    let mut rows = Vec::new();
    for (i, s) in samples.iter().enumerate() {
        for (k, &x) in p.x_points.iter().enumerate() {
            rows.push(vec![i.to_string(), "1".into(), num(x), num(s.0[k])]);
        }
        rows.push(vec![i.to_string(), num(p.alpha), "0".into(), num(s.2)]);
    }
    let csv = csv_table(&["replica", "time_ratio", "x", "value"], rows)?;
    let labels: Vec<String> = p.x_points.iter().map(|x| format!("x = {x}")).collect();
    let series: Vec<(&str, &[f64])> = labels
        .iter()
        .map(|l| l.as_str())
        .zip(columns.iter().map(|c| c.as_slice()))
        .collect();
    let plot = Plot::ecdf_of("shifted height h(1, x) + x^2/2", "value", &series);
    Ok(bundle(est, checks, csv, plot))
}

/// Silent solve against the heat kernel: sup error of `log Z` on
/// `|x| <= oracle_range`, and the spread of the shifted scaled height there.
pub fn noise_off_oracle(p: &SheCheckParams) -> Result<(f64, f64)> {
    let cfg = SheConfig::with_stable_dt(p.oracle_dx, p.half_width, p.t, vec![p.t])?;
    let field = narrow_wedge_solve(&cfg, &Forcing::Silent)?;
    let grid = field.grid();
    let z = field.z(0);
    let t = p.t;
    let mut sup_err = 0.0f64;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let stretch = t.powf(2.0 / 3.0);
    for (i, x) in grid.points().enumerate() {
        if x.abs() > p.oracle_range + 1e-12 {
            continue;
        }
        let exact = -x * x / (2.0 * t) - 0.5 * (2.0 * std::f64::consts::PI * t).ln();
        sup_err = sup_err.max((z[i].ln() - exact).abs());
        let u = x / stretch;
        let s = scaled_height(&field, t, 1.0, u)? + u * u / 2.0;
        lo = lo.min(s);
        hi = hi.max(s);
    }
    Ok((sup_err, hi - lo))
}
