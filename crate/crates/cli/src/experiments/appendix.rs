use kpzlab_core::appendix::{
    corr_bounds_check, corr_expansion_exact, cov_lower_from_conditional, monotone_cov_check, variance_from_tails,
    CorrDecomposition, DiscreteJoint, TailMode, TailSpec,
};
use kpzlab_core::stats::{pearson, Report};
use kpzlab_core::{Error, RngStream};

use super::{bundle, val, Ctx, Estimates};
use crate::config::AppendixParams;
use crate::error::Result;
use crate::report::{csv_table, num, Check, ReportBundle};
use crate::svg::{Axes, Plot, Series};

/// Lower tail-variance bound at `theta = 1, alpha = 1.5, c = 1, s0 = 1` with
/// mean cap 1, from an independent quadrature.
const LOWER_REFERENCE: f64 = 0.19855776375581521;
/// The matching upper bound.
const UPPER_REFERENCE: f64 = 2.2089273882693856;

struct Rows(Vec<Vec<String>>);

impl Rows {
    fn report(&mut self, source: &str, index: usize, rep: &Report) {
        for q in &rep.asserted_inequalities {
            self.0.push(vec![
                source.into(),
                index.to_string(),
                q.name.clone(),
                num(q.lhs),
                num(q.rhs),
                q.holds.to_string(),
            ]);
        }
    }

    fn one(&mut self, source: &str, index: usize, name: &str, lhs: f64, rhs: f64, holds: bool) {
        self.0.push(vec![
            source.into(),
            index.to_string(),
            name.into(),
            num(lhs),
            num(rhs),
            holds.to_string(),
        ]);
    }
}

pub(crate) fn run(p: &AppendixParams, ctx: &Ctx) -> Result<ReportBundle> {
    let mut est = Estimates::new();
    let mut checks = Vec::new();
    let mut rows = Rows(Vec::new());

    joints(p, ctx, &mut est, &mut checks, &mut rows)?;
    let ratios = corr_grid(p, &mut est, &mut checks, &mut rows)?;
    corr_monte_carlo(p, ctx, &mut est, &mut checks, &mut rows)?;
    tail_variance(&mut est, &mut checks, &mut rows)?;

    let csv = csv_table(&["source", "index", "inequality", "lhs", "rhs", "holds"], rows.0)?;
    let plot = Plot::new(
        "correlation residual over the grid",
        "chi",
        "|R| / chi^(3/2)",
        Axes::Linear,
        vec![Series::new("grid points", ratios)],
    );
    Ok(bundle(est, checks, csv, plot))
}

/// `E[X | Y >= a] - E X`, or `None` when `Y >= a` is null.
fn conditional_excess(j: &DiscreteJoint, a: f64) -> Option<f64> {
    let (mut mass, mut first) = (0.0, 0.0);
    for (i, x) in j.xs().iter().enumerate() {
        for (k, y) in j.ys().iter().enumerate() {
            if *y >= a {
                mass += j.prob(i, k);
                first += x * j.prob(i, k);
            }
        }
    }
    (mass > 0.0).then(|| first / mass - j.mean_x())
}

fn joints(p: &AppendixParams, ctx: &Ctx, est: &mut Estimates, checks: &mut Vec<Check>, rows: &mut Rows) -> Result<()> {
    let mut rng = ctx.aux(0);
    let (mut eligible, mut failed, mut lower_checked, mut lower_failed) = (0usize, 0usize, 0usize, 0usize);
    let mut first_failure = None;
    for k in 0..p.joints {
        let j = DiscreteJoint::random(&mut rng, p.support, p.support)?;
        let m = p.support / 2;
        let a = 0.5 * (j.ys()[m - 1] + j.ys()[m]);
        let rep = monotone_cov_check(&j, a);
        if !rep.hypotheses_passed {
            continue;
        }
        eligible += 1;
        rows.report("monotone_cov", k, &rep);
        if !rep.passed() {
            failed += 1;
            first_failure.get_or_insert(k);
        }
        if let Some(excess) = conditional_excess(&j, a).filter(|e| *e > 0.0) {
            let lower = cov_lower_from_conditional(&j, a, p.c2_fraction * excess);
            if lower.hypotheses_passed {
                lower_checked += 1;
                rows.report("cov_lower", k, &lower);
                if !lower.passed() {
                    lower_failed += 1;
                    first_failure.get_or_insert(k);
                }
            }
        }
    }
    est.insert("joints_eligible".into(), eligible.into());
    est.insert("joints_lower_bound_checked".into(), lower_checked.into());
    let at = first_failure
        .map(|k| format!(", first at joint {k}"))
        .unwrap_or_default();
    checks.push(Check::new(
        "monotone_cov",
        eligible > 0 && failed == 0,
        format!(
            "{failed} failures among {eligible} of {} joints meeting the hypotheses{at}",
            p.joints
        ),
    ));
    checks.push(Check::new(
        "cov_lower_from_conditional",
        lower_checked > 0 && lower_failed == 0,
        format!("{lower_failed} failures among {lower_checked} joints meeting the precondition"),
    ));
    Ok(())
}

/// Returns `(chi, |R| / chi^{3/2})` at every grid point inside the hypothesis.
fn corr_grid(
    p: &AppendixParams,
    est: &mut Estimates,
    checks: &mut Vec<Check>,
    rows: &mut Rows,
) -> Result<Vec<(f64, f64)>> {
    let (mut inside, mut failed, mut worst) = (0usize, 0usize, 0.0f64);
    let mut ratios = Vec::new();
    for k in 1..=p.chi_steps {
        let chi = 0.25 * k as f64 / p.chi_steps as f64;
        for m in 0..p.psi_steps {
            let psi = chi.sqrt() * (-1.0 + 2.0 * m as f64 / (p.psi_steps - 1) as f64);
            let d = CorrDecomposition::new(chi, psi)?;
            let rep = match corr_bounds_check(&d, p.c_cap) {
                Ok(rep) => rep,
                Err(Error::HypothesisViolated(_)) => continue,
                Err(e) => return Err(e.into()),
            };
            inside += 1;
            let ratio = rep.margins["ratio"].abs();
            worst = worst.max(ratio);
            ratios.push((chi, ratio));
            if !rep.passed() {
                failed += 1;
                rows.report("corr_bounds", inside, &rep);
            }
        }
    }
    est.insert("corr_grid_points".into(), inside.into());
    est.insert("corr_grid_max_ratio".into(), val(worst));
    checks.push(Check::new(
        "corr_bounds",
        inside > 0 && failed == 0,
        format!(
            "{failed} failures on {inside} grid points; max |R| / chi^(3/2) = {worst:.4}, cap {}",
            p.c_cap
        ),
    ));
    Ok(ratios)
}

/// Sample correlation of `(X + Y, Y)` with `Y, Y'` standard normal and
/// `X = psi Y + sqrt(theta) Y'`.
pub(crate) fn corr_sample(d: &CorrDecomposition, samples: usize, rng: &mut RngStream) -> Result<f64> {
    let pairs: Vec<(f64, f64)> = (0..samples)
        .map(|_| {
            let y = rng.normal();
            let x = d.psi * y + d.theta.sqrt() * rng.normal();
            (x + y, y)
        })
        .collect();
    Ok(pearson(&pairs)?)
}

fn corr_monte_carlo(
    p: &AppendixParams,
    ctx: &Ctx,
    est: &mut Estimates,
    checks: &mut Vec<Check>,
    rows: &mut Rows,
) -> Result<()> {
    let mut worst = 0.0f64;
    let mut failed = 0;
    for (k, &[chi, psi]) in p.mc_points.iter().enumerate() {
        let d = CorrDecomposition::new(chi, psi)?;
        let exact = corr_expansion_exact(&d)?;
        let hat = corr_sample(&d, p.mc_samples, &mut ctx.aux(1 + k as u64))?;
        let se = (1.0 - exact * exact) / (p.mc_samples as f64).sqrt();
        let z = (hat - exact).abs() / se;
        worst = worst.max(z);
        let holds = z <= p.sigmas;
        failed += usize::from(!holds);
        est.insert(format!("corr_mc[{chi},{psi}]"), val(hat));
        est.insert(format!("corr_exact[{chi},{psi}]"), val(exact));
        rows.one("corr_mc", k, "sigmas_from_exact", p.sigmas, z, holds);
    }
    checks.push(Check::new(
        "corr_expansion_mc",
        failed == 0,
        format!(
            "{failed} of {} points off by more than {} stderr; worst {worst:.2}",
            p.mc_points.len(),
            p.sigmas
        ),
    ));
    Ok(())
}

fn tail_variance(est: &mut Estimates, checks: &mut Vec<Check>, rows: &mut Rows) -> Result<()> {
    let mut ok = true;
    for (k, theta) in [0.5, 1.0, 3.0].into_iter().enumerate() {
        let spec = TailSpec::new(theta, 2.0, 0.5, 0.1)?;
        let up = variance_from_tails(&spec, TailMode::UpperBound, 0.0)?;
        let holds = up >= theta * theta;
        ok &= holds;
        rows.one("tail_variance", k, "gaussian_dominated", up, theta * theta, holds);
    }
    let spec = TailSpec::new(1.0, 1.5, 1.0, 1.0)?;
    let lower = variance_from_tails(&spec, TailMode::LowerBound, 1.0)?;
    let upper = variance_from_tails(&spec, TailMode::UpperBound, 1.0)?;
    est.insert("tail_variance_lower".into(), val(lower));
    est.insert("tail_variance_upper".into(), val(upper));
    let ordered = upper >= lower;
    rows.one("tail_variance", 3, "upper_above_lower", upper, lower, ordered);
    let reference = (lower - LOWER_REFERENCE).abs() <= 1e-6 && (upper - UPPER_REFERENCE).abs() <= 1e-6;
    rows.one("tail_variance", 4, "lower_reference", lower, LOWER_REFERENCE, reference);
    let doubled = TailSpec::new(2.0, 1.5, 1.0, 1.0)?;
    let scaled = variance_from_tails(&doubled, TailMode::LowerBound, 1.0)?;
    let quadratic = (scaled - 4.0 * lower).abs() <= 1e-12 * scaled.abs().max(1.0);
    rows.one(
        "tail_variance",
        5,
        "theta_squared_scaling",
        scaled,
        4.0 * lower,
        quadratic,
    );
    checks.push(Check::new(
        "tail_variance",
        ok && ordered && reference && quadratic,
        format!("lower {lower:.6}, upper {upper:.6}; gaussian domination {ok}, theta scaling {quadratic}"),
    ));
    Ok(())
}
