//! Exact and brute-force checks of the covariance and variance toolkit:
//! monotone-conditioning covariance bounds on finite joints, the correlation
//! of `Z = X + Y` with `Y`, and variance bounds from stretched-exponential tails.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma, gamma_ur};

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::stats::Report;

/// Absolute slack on every exact inequality.
pub const EXACT_TOL: f64 = 1e-12;

/// `chi = Var X / Var Y`, `psi = Cov(X, Y) / Var Y`, `theta = chi - psi^2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrDecomposition {
    pub chi: f64,
    pub psi: f64,
    pub theta: f64,
}

impl CorrDecomposition {
    pub fn new(chi: f64, psi: f64) -> Result<Self> {
        if !(chi >= 0.0 && chi.is_finite() && psi.is_finite()) {
            return Err(Error::InvalidArgument(format!("chi = {chi}, psi = {psi}")));
        }
        if psi * psi > chi * (1.0 + 1e-12) {
            return Err(Error::InvalidArgument(format!(
                "psi^2 = {} exceeds chi = {chi}",
                psi * psi
            )));
        }
        Ok(Self {
            chi,
            psi,
            theta: (chi - psi * psi).max(0.0),
        })
    }

    pub fn from_moments(var_x: f64, var_y: f64, cov: f64) -> Result<Self> {
        if !(var_y > 0.0) {
            return Err(Error::DegenerateVariance);
        }
        CorrDecomposition::new(var_x / var_y, cov / var_y)
    }
}

/// `Corr(X + Y, Y) = (1 + psi) / sqrt(1 + 2 psi + chi)`.
pub fn corr_expansion_exact(d: &CorrDecomposition) -> Result<f64> {
    let radicand = 1.0 + 2.0 * d.psi + d.chi;
    if !(radicand > 0.0) {
        return Err(Error::DegenerateVariance);
    }
    Ok((1.0 + d.psi) / radicand.sqrt())
}

/// Residual `R = Corr(Z, Y) - (1 - theta/2)` against `c_cap chi^{3/2}`.
///
/// Only the magnitude bound is asserted; the signed ratio `R / chi^{3/2}` is
/// reported as the margin `ratio`.
pub fn corr_bounds_check(d: &CorrDecomposition, c_cap: f64) -> Result<Report> {
    if !(d.chi.max((2.0 * d.psi + d.chi).abs()) < 1.0) {
        return Err(Error::HypothesisViolated(format!(
            "max(chi, |2 psi + chi|) = {} is not below 1",
            d.chi.max((2.0 * d.psi + d.chi).abs())
        )));
    }
    let r = corr_expansion_exact(d)? - (1.0 - 0.5 * d.theta);
    let scale = d.chi.powf(1.5);
    let mut rep = Report::new("corr_bounds");
    rep.assert_ge("cap_minus_abs_residual", c_cap * scale, r.abs(), EXACT_TOL);
    rep.margin("residual", r);
    rep.margin("ratio", if scale > 0.0 { r / scale } else { 0.0 });
    Ok(rep)
}

/// A probability matrix on a finite product grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteJoint {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// `p[i][j] = P(X = xs[i], Y = ys[j])`.
    p: Vec<Vec<f64>>,
}

fn strictly_increasing(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite()) && v.windows(2).all(|w| w[0] < w[1])
}

impl DiscreteJoint {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>, p: Vec<Vec<f64>>) -> Result<Self> {
        if xs.is_empty() || ys.is_empty() || !strictly_increasing(&xs) || !strictly_increasing(&ys) {
            return Err(Error::InvalidArgument(
                "supports must be finite and strictly increasing".into(),
            ));
        }
        if p.len() != xs.len() || p.iter().any(|row| row.len() != ys.len()) {
            return Err(Error::InvalidArgument("probability matrix shape mismatch".into()));
        }
        if p.iter().flatten().any(|&q| !(q >= 0.0 && q.is_finite())) {
            return Err(Error::InvalidArgument("negative or non-finite probability".into()));
        }
        let total: f64 = p.iter().flatten().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("probabilities sum to {total}")));
        }
        Ok(Self { xs, ys, p })
    }

    /// Normalises non-negative `weights` to total mass one.
    pub fn from_weights(xs: Vec<f64>, ys: Vec<f64>, weights: Vec<Vec<f64>>) -> Result<Self> {
        let total: f64 = weights.iter().flatten().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::InvalidArgument(format!("weights sum to {total}")));
        }
        let p = weights
            .into_iter()
            .map(|row| row.into_iter().map(|w| w / total).collect())
            .collect();
        DiscreteJoint::new(xs, ys, p)
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn prob(&self, i: usize, j: usize) -> f64 {
        self.p[i][j]
    }

    /// `sum p(i,j) [x_i satisfies fx] [y_j satisfies fy]`.
    fn mass(&self, fx: impl Fn(f64) -> bool, fy: impl Fn(f64) -> bool) -> f64 {
        let mut m = 0.0;
        for (i, &x) in self.xs.iter().enumerate() {
            if !fx(x) {
                continue;
            }
            for (j, &y) in self.ys.iter().enumerate() {
                if fy(y) {
                    m += self.p[i][j];
                }
            }
        }
        m
    }

    /// `E[g(X, Y); Y satisfies fy]`.
    fn expect(&self, g: impl Fn(f64, f64) -> f64, fy: impl Fn(f64) -> bool) -> f64 {
        let mut m = 0.0;
        for (i, &x) in self.xs.iter().enumerate() {
            for (j, &y) in self.ys.iter().enumerate() {
                if fy(y) {
                    m += self.p[i][j] * g(x, y);
                }
            }
        }
        m
    }

    pub fn mean_x(&self) -> f64 {
        self.expect(|x, _| x, |_| true)
    }

    pub fn mean_y(&self) -> f64 {
        self.expect(|_, y| y, |_| true)
    }

    pub fn cov(&self) -> f64 {
        let (mx, my) = (self.mean_x(), self.mean_y());
        self.expect(|x, y| (x - mx) * (y - my), |_| true)
    }

    /// Scans the product-form monotone-conditioning inequalities
    ///
    /// ```text
    /// P(Y > v) P(X > r, Y > u)   >= P(Y > u) P(X > r, Y > v)
    /// P(Y <= v) P(X > r, Y <= u) >= P(Y <= u) P(X > r, Y <= v)
    /// ```
    ///
    /// over every `r` and `u > v` drawn from the support values plus one point
    /// below each support. Returns the most negative slack found.
    pub fn monotone_hypotheses(&self) -> f64 {
        let below = |v: &[f64]| v[0] - 1.0;
        let rs: Vec<f64> = std::iter::once(below(&self.xs))
            .chain(self.xs.iter().copied())
            .collect();
        let levels: Vec<f64> = std::iter::once(below(&self.ys))
            .chain(self.ys.iter().copied())
            .collect();
        let mut worst = f64::INFINITY;
        for &r in &rs {
            for (k, &v) in levels.iter().enumerate() {
                for &u in &levels[k + 1..] {
                    let up = self.mass(|_| true, |y| y > v) * self.mass(|x| x > r, |y| y > u)
                        - self.mass(|_| true, |y| y > u) * self.mass(|x| x > r, |y| y > v);
                    let down = self.mass(|_| true, |y| y <= v) * self.mass(|x| x > r, |y| y <= u)
                        - self.mass(|_| true, |y| y <= u) * self.mass(|x| x > r, |y| y <= v);
                    worst = worst.min(up).min(down);
                }
            }
        }
        worst
    }

    /// Random joint on sorted supports in `[-2, 2]`. Half the draws use the
    /// totally positive form `p ∝ a_i b_j exp(k x_i y_j)`, `k >= 0`, which
    /// satisfies the monotone-conditioning hypotheses; the rest are unstructured.
    pub fn random(rng: &mut RngStream, nx: usize, ny: usize) -> Result<Self> {
        let support = |rng: &mut RngStream, n: usize| -> Vec<f64> {
            let mut v: Vec<f64> = (0..n).map(|_| 4.0 * rng.uniform() - 2.0).collect();
            v.sort_by(f64::total_cmp);
            v
        };
        let xs = support(rng, nx);
        let ys = support(rng, ny);
        let structured = rng.uniform() < 0.5;
        let k = 2.0 * rng.uniform();
        let a: Vec<f64> = (0..nx).map(|_| rng.uniform()).collect();
        let b: Vec<f64> = (0..ny).map(|_| rng.uniform()).collect();
        let mut w = vec![vec![0.0; ny]; nx];
        for i in 0..nx {
            for j in 0..ny {
                w[i][j] = if structured {
                    a[i] * b[j] * (k * xs[i] * ys[j]).exp()
                } else {
                    rng.uniform()
                };
            }
        }
        DiscreteJoint::from_weights(xs, ys, w)
    }
}

/// Conditional means given `Y >= a` and `Y <= a`, when both events have mass.
struct Split {
    p_ge: f64,
    ex_ge: f64,
    ey_ge: f64,
    ey_gt: f64,
    ey_le: f64,
}

fn split(j: &DiscreteJoint, a: f64) -> Option<Split> {
    let p_ge = j.mass(|_| true, |y| y >= a);
    let p_gt = j.mass(|_| true, |y| y > a);
    let p_le = j.mass(|_| true, |y| y <= a);
    if p_ge <= 0.0 || p_gt <= 0.0 || p_le <= 0.0 {
        return None;
    }
    Some(Split {
        p_ge,
        ex_ge: j.expect(|x, _| x, |y| y >= a) / p_ge,
        ey_ge: j.expect(|_, y| y, |y| y >= a) / p_ge,
        ey_gt: j.expect(|_, y| y, |y| y > a) / p_gt,
        ey_le: j.expect(|_, y| y, |y| y <= a) / p_le,
    })
}

/// Scans the monotone-conditioning hypotheses; when they hold, asserts
/// `Cov >= 0` and
/// `Cov >= P(Y >= a) (E[X | Y >= a] - E X) (E[Y | Y > a] - E[Y | Y <= a])`.
/// When a conditioning event is null the right side is taken as 0.
pub fn monotone_cov_check(j: &DiscreteJoint, a: f64) -> Report {
    let mut rep = Report::new("monotone_cov");
    let slack = j.monotone_hypotheses();
    rep.margin("hypothesis_slack", slack);
    rep.hypotheses_passed = slack >= -EXACT_TOL;
    if !rep.hypotheses_passed {
        return rep;
    }
    let cov = j.cov();
    rep.assert_ge("cov_nonnegative", cov, 0.0, EXACT_TOL);
    let bound = match split(j, a) {
        Some(s) => s.p_ge * (s.ex_ge - j.mean_x()) * (s.ey_gt - s.ey_le),
        None => {
            rep.flag("degenerate conditioning: bound taken as 0");
            0.0
        }
    };
    rep.assert_ge("cov_conditional_bound", cov, bound, EXACT_TOL);
    rep
}

/// When the hypotheses and `E[X | Y >= c1] >= E X + c2` hold, asserts
/// `Cov >= c2 P(Y >= c1) (E[Y | Y >= c1] - E[Y | Y <= c1])`.
pub fn cov_lower_from_conditional(j: &DiscreteJoint, c1: f64, c2: f64) -> Report {
    let mut rep = Report::new("cov_lower_from_conditional");
    let slack = j.monotone_hypotheses();
    rep.margin("hypothesis_slack", slack);
    rep.hypotheses_passed = slack >= -EXACT_TOL;
    let p_le = j.mass(|_| true, |y| y <= c1);
    let s = split(j, c1).filter(|s| s.ex_ge >= j.mean_x() + c2);
    match s {
        Some(s) if rep.hypotheses_passed && p_le > 0.0 => {
            rep.margin("conditional_excess", s.ex_ge - j.mean_x() - c2);
            let bound = c2 * s.p_ge * (s.ey_ge - s.ey_le);
            rep.assert_ge("cov_lower_bound", j.cov(), bound, EXACT_TOL);
        }
        _ => {
            rep.hypotheses_passed = false;
            rep.flag("precondition not met: nothing asserted");
        }
    }
    rep
}

/// Stretched-exponential tail data: for `s >= s0`, tail probabilities at
/// `s theta` are compared with `exp(-c s^alpha)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailSpec {
    pub theta: f64,
    pub alpha: f64,
    pub c: f64,
    pub s0: f64,
}

impl TailSpec {
    pub fn new(theta: f64, alpha: f64, c: f64, s0: f64) -> Result<Self> {
        let spec = Self { theta, alpha, c, s0 };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) {
            return Err(Error::Divergent(format!("alpha = {} must be positive", self.alpha)));
        }
        for (name, v) in [("theta", self.theta), ("c", self.c), ("s0", self.s0)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} = {v} must be positive")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailMode {
    /// `Var X <= C theta^2` given both tails below `exp(-c s^alpha)`.
    UpperBound,
    /// `Var X >= c theta^2` given `|E X| <= mean_cap theta` and the upper
    /// tail above `exp(-c s^alpha)`.
    LowerBound,
}

/// Adaptive Simpson on `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn rec(
        f: &impl Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// `int_w^inf v^{k-1} exp(-c v^alpha) dv = c^{-k/alpha} Gamma(k/alpha, c w^alpha) / alpha`.
fn stretched_moment_tail(k: f64, c: f64, alpha: f64, w: f64) -> f64 {
    let a = k / alpha;
    c.powf(-a) * gamma_ur(a, c * w.powf(alpha)) * gamma(a) / alpha
}

/// Relative accuracy of the quadrature.
const REL_TOL: f64 = 1e-8;
/// Exponent span covered by quadrature before the analytic remainder.
const BULK_SPAN: f64 = 40.0;

/// Integrates `weight(v) exp(-c v^alpha)` from `w0` to infinity: adaptive
/// Simpson until the exponent has dropped by `BULK_SPAN`, then the remainder
/// in closed form.
fn stretched_integral(spec: &TailSpec, w0: f64, shift: f64) -> f64 {
    let (c, alpha) = (spec.c, spec.alpha);
    let w1 = ((c * w0.powf(alpha) + BULK_SPAN) / c).powf(1.0 / alpha);
    // weight(v) = 2 (v - shift) for v = shift + s.
    let f = |v: f64| 2.0 * (v - shift) * (-c * v.powf(alpha)).exp();
    let rough = adaptive_simpson(&f, w0, w1, 1e-6).abs().max(1e-300);
    let bulk = adaptive_simpson(&f, w0, w1, REL_TOL * rough);
    let tail = 2.0 * stretched_moment_tail(2.0, c, alpha, w1) - 2.0 * shift * stretched_moment_tail(1.0, c, alpha, w1);
    bulk + tail
}

/// Certified variance bounds from stretched-exponential tails.
///
/// Upper: `theta^2 int_0^inf 2 s min(1, 2 exp(-c s^alpha)) ds` with the cap
/// in force below `S = max(s0, (ln 2 / c)^{1/alpha})`.
/// Lower: with `C1 = mean_cap`,
/// `theta^2 int_{max(0, s0 - C1)}^inf 2 s exp(-c (C1 + s)^alpha) ds`,
/// which covers both signs of the mean.
pub fn variance_from_tails(spec: &TailSpec, mode: TailMode, mean_cap: f64) -> Result<f64> {
    spec.validate()?;
    let theta2 = spec.theta * spec.theta;
    let value = match mode {
        TailMode::UpperBound => {
            let s = spec.s0.max((std::f64::consts::LN_2 / spec.c).powf(1.0 / spec.alpha));
            s * s + 2.0 * stretched_integral(spec, s, 0.0)
        }
        TailMode::LowerBound => {
            if !(mean_cap >= 0.0 && mean_cap.is_finite()) {
                return Err(Error::InvalidArgument(format!("mean_cap = {mean_cap}")));
            }
            let start = (spec.s0 - mean_cap).max(0.0) + mean_cap;
            stretched_integral(spec, start, mean_cap)
        }
    };
    if !value.is_finite() {
        return Err(Error::Divergent(format!("{mode:?} integral is {value}")));
    }
    Ok(theta2 * value)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform_diagonal() -> DiscreteJoint {
        DiscreteJoint::new(vec![0.0, 1.0], vec![0.0, 1.0], vec![vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap()
    }

    #[test]
    fn exact_correlation_examples() {
        assert_eq!(
            corr_expansion_exact(&CorrDecomposition::new(0.0, 0.0).unwrap()).unwrap(),
            1.0
        );
        let half = corr_expansion_exact(&CorrDecomposition::new(1.0, 0.0).unwrap()).unwrap();
        assert!((half - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        let v = corr_expansion_exact(&CorrDecomposition::new(0.04, 0.1).unwrap()).unwrap();
        assert!((v - 0.9878291611472619).abs() < 1e-15);
        assert!(corr_expansion_exact(&CorrDecomposition {
            chi: 1.0,
            psi: -1.0,
            theta: 0.0
        })
        .is_err());
    }

    #[test]
    fn corr_bounds_examples() {
        let zero = corr_bounds_check(&CorrDecomposition::new(0.0, 0.0).unwrap(), 0.0).unwrap();
        assert!(zero.passed());
        assert_eq!(zero.margins["residual"], 0.0);
        // Psi = sqrt(chi) is perfect correlation: the residual vanishes.
        let edge = corr_bounds_check(&CorrDecomposition::new(0.09, 0.3).unwrap(), 5.0).unwrap();
        assert!(edge.margins["residual"].abs() < 1e-15);
        let inside = corr_bounds_check(&CorrDecomposition::new(0.09, 0.29).unwrap(), 5.0).unwrap();
        assert!(inside.margins["residual"] > 0.0);
        assert!(corr_bounds_check(&CorrDecomposition::new(0.9, 0.9).unwrap(), 5.0).is_err());
    }

    #[test]
    fn corr_bounds_hold_on_grid() {
        let mut worst: f64 = 0.0;
        for k in 1..=25 {
            let chi = 0.01 * k as f64;
            for m in 0..=40 {
                let psi = chi.sqrt() * (-1.0 + m as f64 / 20.0);
                let d = CorrDecomposition::new(chi, psi).unwrap();
                if let Ok(rep) = corr_bounds_check(&d, 5.0) {
                    assert!(rep.passed(), "chi {chi} psi {psi}");
                    worst = worst.max(rep.margins["ratio"].abs());
                }
            }
        }
        assert!(worst < 0.5, "{worst}");
    }

    #[test]
    fn diagonal_joint_is_tight() {
        let j = uniform_diagonal();
        let rep = monotone_cov_check(&j, 0.5);
        assert!(rep.hypotheses_passed && rep.passed());
        assert!((j.cov() - 0.25).abs() < 1e-15);
        assert!(rep.margins["cov_conditional_bound"].abs() < 1e-15);
        let rep = cov_lower_from_conditional(&j, 0.5, 0.5);
        assert!(rep.passed());
        assert!(rep.margins["cov_lower_bound"].abs() < 1e-15);
    }

    #[test]
    fn independent_joint() {
        let a = [0.2, 0.5, 0.3];
        let b = [0.6, 0.4];
        let w: Vec<Vec<f64>> = a.iter().map(|x| b.iter().map(|y| x * y).collect()).collect();
        let j = DiscreteJoint::from_weights(vec![-1.0, 0.0, 2.0], vec![0.0, 3.0], w).unwrap();
        let rep = monotone_cov_check(&j, 1.0);
        assert!(rep.passed());
        assert!(j.cov().abs() < 1e-15);
        let rep = cov_lower_from_conditional(&j, 1.0, 0.1);
        assert!(!rep.hypotheses_passed);
        assert!(rep.asserted_inequalities.is_empty());
    }

    #[test]
    fn anti_diagonal_fails_hypotheses() {
        let j = DiscreteJoint::new(vec![0.0, 1.0], vec![0.0, 1.0], vec![vec![0.0, 0.5], vec![0.5, 0.0]]).unwrap();
        let rep = monotone_cov_check(&j, 0.5);
        assert!(!rep.hypotheses_passed);
        assert!(rep.asserted_inequalities.is_empty());
    }

    #[test]
    fn random_joints_never_contradict() {
        let mut rng = RngStream::new(12, 0);
        let mut passing = 0;
        for _ in 0..300 {
            let j = DiscreteJoint::random(&mut rng, 4, 4).unwrap();
            let a = j.ys()[1] + 0.5 * (j.ys()[2] - j.ys()[1]);
            let rep = monotone_cov_check(&j, a);
            if rep.hypotheses_passed {
                passing += 1;
                assert!(rep.passed(), "{rep:?}");
            }
        }
        assert!(passing > 50);
    }

    #[test]
    fn joint_validation() {
        assert!(DiscreteJoint::new(vec![1.0, 0.0], vec![0.0], vec![vec![0.5], vec![0.5]]).is_err());
        assert!(DiscreteJoint::new(vec![0.0], vec![0.0], vec![vec![0.9]]).is_err());
        assert!(DiscreteJoint::new(vec![0.0], vec![0.0], vec![vec![1.0]]).is_ok());
    }

    #[test]
    fn simpson_on_polynomials_and_gaussians() {
        let v = adaptive_simpson(&|x: f64| x * x * x, 0.0, 2.0, 1e-12);
        assert!((v - 4.0).abs() < 1e-12);
        let g = adaptive_simpson(&|x: f64| (-x * x).exp(), -10.0, 10.0, 1e-12);
        assert!((g - std::f64::consts::PI.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn upper_bound_closed_forms() {
        // alpha = 1: int_S^inf 4 s e^{-cs} ds = 4 e^{-cS} (S/c + 1/c^2).
        let spec = TailSpec::new(1.0, 1.0, 0.5, 3.0).unwrap();
        let s: f64 = 3.0;
        let exact = s * s + 4.0 * (-0.5 * s).exp() * (s / 0.5 + 4.0);
        let got = variance_from_tails(&spec, TailMode::UpperBound, 0.0).unwrap();
        assert!((got - exact).abs() < 1e-8 * exact, "{got} vs {exact}");
        // alpha = 2: int_S^inf 4 s e^{-c s^2} ds = (2/c) e^{-c S^2}.
        let spec = TailSpec::new(1.0, 2.0, 1.0, 1.0).unwrap();
        let exact = 1.0 + 2.0 * (-1.0f64).exp();
        let got = variance_from_tails(&spec, TailMode::UpperBound, 0.0).unwrap();
        assert!((got - exact).abs() < 1e-8 * exact);
        let spec = TailSpec::new(1.0, 1.5, 1.0, 1.0).unwrap();
        let got = variance_from_tails(&spec, TailMode::UpperBound, 0.0).unwrap();
        assert!((got - 2.2089273882693856).abs() < 1e-8);
    }

    #[test]
    fn gaussian_variance_is_dominated() {
        // Standard normal: P(|X| > s) <= e^{-s^2/2} on each side.
        for theta in [0.5, 1.0, 3.0] {
            let spec = TailSpec::new(theta, 2.0, 0.5, 0.1).unwrap();
            assert!(variance_from_tails(&spec, TailMode::UpperBound, 0.0).unwrap() >= theta * theta);
        }
    }

    #[test]
    fn theta_scales_quadratically() {
        for mode in [TailMode::UpperBound, TailMode::LowerBound] {
            let one = variance_from_tails(&TailSpec::new(1.0, 1.3, 0.7, 1.2).unwrap(), mode, 0.5).unwrap();
            let two = variance_from_tails(&TailSpec::new(2.0, 1.3, 0.7, 1.2).unwrap(), mode, 0.5).unwrap();
            assert_eq!(two, 4.0 * one);
        }
    }

    #[test]
    fn lower_bound_reference() {
        let spec = TailSpec::new(1.0, 1.5, 1.0, 1.0).unwrap();
        let v = variance_from_tails(&spec, TailMode::LowerBound, 1.0).unwrap();
        assert!((v - 0.19855776375581521).abs() < 1e-6, "{v}");
        let up = variance_from_tails(&spec, TailMode::UpperBound, 1.0).unwrap();
        assert!(up >= v);
    }

    #[test]
    fn non_positive_alpha_diverges() {
        assert!(matches!(TailSpec::new(1.0, 0.0, 1.0, 1.0), Err(Error::Divergent(_))));
    }
}
