//! Brownian bridges and the reflection-principle minimum law.

use crate::error::{Error, Result};
use crate::grid::{Grid1D, SamplePath};
use crate::rng::RngStream;

/// Relative slack when matching grid endpoints to the bridge interval.
const ENDPOINT_TOL: f64 = 1e-12;

/// A discretised Brownian bridge from `(a_time, a_val)` to `(b_time, b_val)`.
///
/// Built as a Gaussian random walk whose endpoint error is removed by
/// subtracting the linear drift, which gives the exact bridge law on the grid.
/// The grid must run exactly from `a_time` to `b_time`.
pub fn sample_bridge(
    a_time: f64,
    b_time: f64,
    a_val: f64,
    b_val: f64,
    grid: &Grid1D,
    rng: &mut RngStream,
) -> Result<SamplePath> {
    if !(a_time < b_time) {
        return Err(Error::DegenerateInterval { a: a_time, b: b_time });
    }
    let span = b_time - a_time;
    let tol = ENDPOINT_TOL * span.max(a_time.abs()).max(b_time.abs()).max(1.0);
    if (grid.lo() - a_time).abs() > tol || (grid.hi() - b_time).abs() > tol {
        return Err(Error::GridMismatch {
            grid_lo: grid.lo(),
            grid_hi: grid.hi(),
            a: a_time,
            b: b_time,
        });
    }
    let n = grid.len();
    let step_sd = grid.dx().sqrt();
    let mut walk = Vec::with_capacity(n);
    walk.push(0.0);
    let mut w = 0.0;
    for _ in 1..n {
        w += step_sd * rng.normal();
        walk.push(w);
    }
    let end = walk[n - 1];
    let last = (n - 1) as f64;
    let mut values: Vec<f64> = walk
        .iter()
        .enumerate()
        .map(|(i, &w)| {
            let frac = i as f64 / last;
            a_val + w - frac * end + frac * (b_val - a_val)
        })
        .collect();
    values[0] = a_val;
    values[n - 1] = b_val;
    SamplePath::new(*grid, values)
}

/// `P(min of the bridge <= -m)` for a Brownian bridge of duration `length`
/// from `a_val` to `b_val`: `exp(-2 (a_val + m)(b_val + m) / length)`.
///
/// Returns 1 once `-m` reaches either endpoint.
pub fn bridge_min_tail(a_val: f64, b_val: f64, length: f64, m: f64) -> Result<f64> {
    if !(length > 0.0) {
        return Err(Error::NonPositiveLength(length));
    }
    let da = a_val + m;
    let db = b_val + m;
    if da <= 0.0 || db <= 0.0 {
        return Ok(1.0);
    }
    Ok((-2.0 * da * db / length).exp().min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_are_pinned_exactly() {
        let g = Grid1D::new(0.5, 2.0, 31).unwrap();
        let mut rng = RngStream::new(1, 0);
        let p = sample_bridge(0.5, 2.0, 0.3, -1.7, &g, &mut rng).unwrap();
        assert_eq!(p.values()[0], 0.3);
        assert_eq!(*p.values().last().unwrap(), -1.7);
    }

    #[test]
    fn two_point_grid_is_deterministic() {
        let g = Grid1D::new(0.0, 1.0, 2).unwrap();
        let mut rng = RngStream::new(1, 0);
        let p = sample_bridge(0.0, 1.0, 2.0, 3.0, &g, &mut rng).unwrap();
        assert_eq!(p.values(), &[2.0, 3.0]);
    }

    #[test]
    fn rejects_degenerate_and_mismatched() {
        let g = Grid1D::new(0.0, 1.0, 5).unwrap();
        let mut rng = RngStream::new(1, 0);
        assert!(matches!(
            sample_bridge(1.0, 1.0, 0.0, 0.0, &g, &mut rng),
            Err(Error::DegenerateInterval { .. })
        ));
        assert!(matches!(
            sample_bridge(0.0, 2.0, 0.0, 0.0, &g, &mut rng),
            Err(Error::GridMismatch { .. })
        ));
    }

    #[test]
    fn closed_form_values() {
        assert_eq!(bridge_min_tail(0.0, 0.0, 1.0, 1.0).unwrap(), (-2.0f64).exp());
        assert_eq!(bridge_min_tail(0.0, 0.0, 3.0, 0.0).unwrap(), 1.0);
        assert_eq!(bridge_min_tail(1.0, -1.0, 2.0, 0.5).unwrap(), 1.0);
        assert!(matches!(
            bridge_min_tail(0.0, 0.0, 0.0, 1.0),
            Err(Error::NonPositiveLength(_))
        ));
    }

    #[test]
    fn tail_is_monotone_in_level_and_endpoints() {
        let mut prev = 1.0;
        for k in 0..50 {
            let p = bridge_min_tail(0.2, 0.4, 1.5, k as f64 * 0.1).unwrap();
            assert!(p <= prev);
            prev = p;
        }
        let lo = bridge_min_tail(0.0, 0.0, 1.0, 0.5).unwrap();
        let hi = bridge_min_tail(0.5, 0.5, 1.0, 0.5).unwrap();
        assert!(hi < lo);
    }
}
