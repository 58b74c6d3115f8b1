use kpzlab_core::bridge::{bridge_min_tail, sample_bridge};
use kpzlab_core::ensemble::{monotone_coupled_sweep, sweep_in_place, Boundary, Ensemble, Hamiltonian};
use kpzlab_core::stats::ks_one_sample;
use kpzlab_core::{Grid1D, RngStream};
use statrs::distribution::{ContinuousCDF, Normal};

use super::{bundle, json, val, Ctx, Estimates};
use crate::config::GibbsParams;
use crate::error::Result;
use crate::pool::run_replicas;
use crate::report::{csv_table, num, Check, ReportBundle};
use crate::svg::Plot;

pub(crate) fn run(p: &GibbsParams, ctx: &Ctx) -> Result<ReportBundle> {
    let mut est = Estimates::new();
    let mut checks = Vec::new();
    let mut rows = Vec::new();

    let z = invariance(p, ctx)?;
    let std_normal = Normal::standard();
    let ks = ks_one_sample(&z, |x| std_normal.cdf(x))?;
    est.insert("invariance_ks".into(), json(&ks));
    checks.push(Check::new(
        "bridge_invariance",
        ks.p_value >= p.ks_level,
        format!(
            "KS D = {:.4}, p = {:.4} over {} sites, level {}",
            ks.statistic,
            ks.p_value,
            z.len(),
            p.ks_level
        ),
    ));
    rows.extend(
        z.iter()
            .enumerate()
            .map(|(i, v)| vec!["invariance".into(), i.to_string(), num(*v), String::new()]),
    );

    let violations = coupling(p, ctx)?;
    let total: usize = violations.iter().sum();
    est.insert("coupling_violations".into(), total.into());
    checks.push(Check::new(
        "coupling_order",
        total == 0,
        format!(
            "{total} ordering violations over {} sweeps x {} seeds",
            p.coupling_sweeps, p.coupling_seeds
        ),
    ));
    rows.extend(
        violations
            .iter()
            .enumerate()
            .map(|(k, v)| vec!["coupling".into(), k.to_string(), v.to_string(), String::new()]),
    );

    for (k, case) in p.bridge_cases.iter().enumerate() {
        let [a, b, length, m] = *case;
        let exact = bridge_min_tail(a, b, length, m)?;
        let grid = Grid1D::new(0.0, length, p.bridge_points)?;
        let hat = bridge_min_mc(a, b, m, &grid, p.bridge_samples, &mut ctx.aux(1 + k as u64))?;
        let se = (exact * (1.0 - exact) / p.bridge_samples as f64).sqrt();
        let label = format!("[{a},{b},{length},{m}]");
        est.insert(format!("bridge_min_exact{label}"), val(exact));
        est.insert(format!("bridge_min_mc{label}"), val(hat));
        checks.push(Check::new(
            format!("bridge_min{label}"),
            (hat - exact).abs() <= p.sigmas * se,
            format!("Monte Carlo {hat:.5} against exact {exact:.5}, stderr {se:.2e}"),
        ));
        rows.push(vec!["bridge_min".into(), k.to_string(), num(hat), num(exact)]);
    }

    let csv = csv_table(&["part", "index", "value", "reference"], rows)?;
    let plot = Plot::ecdf_of(
        "standardised free-bridge sites after heat-bath sweeps",
        "z",
        &[("z", &z)],
    );
    Ok(bundle(est, checks, csv, plot))
}

/// Replica `i` starts from an exact bridge, is swept with the free
/// Hamiltonian, and reports one interior site scaled to unit variance.
fn invariance(p: &GibbsParams, ctx: &Ctx) -> Result<Vec<f64>> {
    let grid = Grid1D::new(0.0, p.length, p.grid_points)?;
    let interior = p.grid_points - 2;
    let h = Hamiltonian::free();
    run_replicas(ctx.workers, p.replicas, |i| {
        let mut rng = ctx.replica(i);
        let start = sample_bridge(0.0, p.length, 0.0, 0.0, &grid, &mut rng)?;
        let mut e = Ensemble::new(
            1,
            grid,
            vec![start.into_values()],
            Boundary::PlusInfinity,
            Boundary::MinusInfinity,
        )?;
        for _ in 0..p.sweeps {
            sweep_in_place(&mut e, &h, &mut rng);
        }
        let j = 1 + i as usize % interior;
        let s = grid.point(j);
        Ok(e.curves()[0][j] / (s * (p.length - s) / p.length).sqrt())
    })
}

/// Ordering violations per seed for the coupled chain started from two
/// ordered flat ensembles.
fn coupling(p: &GibbsParams, ctx: &Ctx) -> Result<Vec<usize>> {
    let grid = Grid1D::new(0.0, p.length, p.grid_points)?;
    let h = Hamiltonian::new(p.interaction_t)?;
    let levels: Vec<f64> = (0..p.curves).map(|c| -(c as f64)).collect();
    let lifted: Vec<Vec<f64>> = levels.iter().map(|l| vec![l + 0.5; grid.len()]).collect();
    let floor = Boundary::Path(vec![-(p.curves as f64) - 0.5; grid.len()]);
    let lo0 = Ensemble::flat(1, grid, &levels)?;
    let hi0 = Ensemble::new(1, grid, lifted, Boundary::PlusInfinity, floor)?;
    run_replicas(ctx.workers, p.coupling_seeds, |k| {
        let mut rng = ctx.aux(1000 + k);
        let (mut lo, mut hi) = (lo0.clone(), hi0.clone());
        let mut violations = 0;
        for _ in 0..p.coupling_sweeps {
            (lo, hi) = monotone_coupled_sweep(&lo, &hi, &h, &mut rng)?;
            let bad: usize = lo
                .curves()
                .iter()
                .zip(hi.curves())
                .map(|(a, b)| a.iter().zip(b).filter(|(x, y)| x > y).count())
                .sum();
            if bad > 0 {
                violations += bad;
                break;
            }
        }
        Ok(violations)
    })
}

/// Fraction of grid bridges from `a` to `b` whose continuous path reaches
/// `-m`. Between grid points the crossing is drawn from the exact
/// Brownian-bridge law given the two endpoint values.
pub(crate) fn bridge_min_mc(a: f64, b: f64, m: f64, grid: &Grid1D, samples: usize, rng: &mut RngStream) -> Result<f64> {
    let dt = grid.dx();
    let mut hits = 0usize;
    for _ in 0..samples {
        let path = sample_bridge(grid.lo(), grid.hi(), a, b, grid, rng)?;
        let v = path.values();
        let mut crossed = v.iter().any(|x| *x <= -m);
        for w in v.windows(2) {
            if crossed {
                break;
            }
            let p = (-2.0 * (w[0] + m) * (w[1] + m) / dt).exp();
            crossed = rng.uniform() < p;
        }
        hits += crossed as usize;
    }
    Ok(hits as f64 / samples as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn start_below_level_always_crosses() {
        let g = Grid1D::new(0.0, 1.0, 9).unwrap();
        let p = bridge_min_mc(-2.0, 0.0, 1.0, &g, 50, &mut RngStream::new(1, 0)).unwrap();
        assert_eq!(p, 1.0);
    }

    #[test]
    fn two_point_grid_matches_formula() {
        let g = Grid1D::new(0.0, 1.0, 2).unwrap();
        let n = 40_000;
        let p = bridge_min_mc(0.0, 0.0, 0.5, &g, n, &mut RngStream::new(2, 0)).unwrap();
        let exact = bridge_min_tail(0.0, 0.0, 1.0, 0.5).unwrap();
        assert!((p - exact).abs() < 4.0 * (exact * (1.0 - exact) / n as f64).sqrt());
    }
}
