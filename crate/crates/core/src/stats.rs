//! Estimators used to read exponents and tail shapes off simulations.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Resamples used for bootstrap standard errors.
pub const BOOTSTRAP_RESAMPLES: usize = 1000;
/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

/// One checked inequality `lhs >= rhs`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Inequality {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Outcome of a hypothesis-and-conclusion check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub name: String,
    pub hypotheses_passed: bool,
    pub asserted_inequalities: Vec<Inequality>,
    pub margins: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

impl Report {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            hypotheses_passed: true,
            asserted_inequalities: Vec::new(),
            margins: BTreeMap::new(),
            flags: Vec::new(),
        }
    }

    /// Records `lhs >= rhs - slack` and its margin `lhs - rhs`.
    pub fn assert_ge(&mut self, name: &str, lhs: f64, rhs: f64, slack: f64) -> bool {
        let holds = lhs >= rhs - slack;
        self.asserted_inequalities.push(Inequality {
            name: name.to_string(),
            lhs,
            rhs,
            holds,
        });
        self.margins.insert(name.to_string(), lhs - rhs);
        holds
    }

    pub fn margin(&mut self, name: &str, value: f64) {
        self.margins.insert(name.to_string(), value);
    }

    pub fn flag(&mut self, text: impl Into<String>) {
        self.flags.push(text.into());
    }

    /// Hypotheses held and every asserted inequality holds.
    pub fn passed(&self) -> bool {
        self.hypotheses_passed && self.asserted_inequalities.iter().all(|i| i.holds)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Sample Pearson correlation.
pub fn pearson(pairs: &[(f64, f64)]) -> Result<f64> {
    if pairs.len() < 3 {
        return Err(Error::TooFewSamples {
            need: 3,
            got: pairs.len(),
        });
    }
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in pairs {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if !(sxx > 0.0 && syy > 0.0) {
        return Err(Error::DegenerateVariance);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrEstimate {
    pub estimate: f64,
    pub stderr: f64,
}

/// Pearson correlation with a bootstrap standard error drawn from `rng`.
/// Resamples with a degenerate coordinate are skipped.
pub fn pearson_corr(pairs: &[(f64, f64)], rng: &RngStream) -> Result<CorrEstimate> {
    let estimate = pearson(pairs)?;
    let mut rng = rng.restarted();
    let mut draws = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    let mut buf = vec![(0.0, 0.0); pairs.len()];
    for _ in 0..BOOTSTRAP_RESAMPLES {
        for b in buf.iter_mut() {
            *b = pairs[rng.below(pairs.len())];
        }
        if let Ok(r) = pearson(&buf) {
            draws.push(r);
        }
    }
    let stderr = if draws.len() >= 2 {
        variance(&draws).sqrt()
    } else {
        f64::NAN
    };
    Ok(CorrEstimate { estimate, stderr })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub slope_stderr: f64,
}

/// Least squares of `log y` on `log x`.
pub fn fit_power_law(xs: &[f64], ys: &[f64]) -> Result<PowerLawFit> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidArgument(format!("{} xs but {} ys", xs.len(), ys.len())));
    }
    if xs.len() < 3 {
        return Err(Error::TooFewSamples { need: 3, got: xs.len() });
    }
    if let Some(&bad) = xs.iter().chain(ys).find(|&&v| !(v > 0.0)) {
        return Err(Error::NonPositive(bad));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let (mx, my) = (mean(&lx), mean(&ly));
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::DegenerateVariance);
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let ss_tot: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    let dof = (xs.len() - 2) as f64;
    Ok(PowerLawFit {
        slope,
        intercept,
        r_squared,
        slope_stderr: (ss_res / dof / sxx).sqrt(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub p_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub count: usize,
    pub n: usize,
}

impl TailEstimate {
    /// Binomial standard error of `p_hat`.
    pub fn stderr(&self) -> f64 {
        (self.p_hat * (1.0 - self.p_hat) / self.n as f64).sqrt()
    }
}

/// Frequency of `sample > threshold` with a 95% Wilson interval.
pub fn tail_estimate(samples: &[f64], threshold: f64) -> Result<TailEstimate> {
    if samples.is_empty() {
        return Err(Error::TooFewSamples { need: 1, got: 0 });
    }
    let n = samples.len();
    let count = samples.iter().filter(|&&s| s > threshold).count();
    let (nf, p) = (n as f64, count as f64 / n as f64);
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / nf;
    let centre = (p + z2 / (2.0 * nf)) / denom;
    let half = Z95 / denom * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    let ci_lo = if count == 0 { 0.0 } else { (centre - half).max(0.0) };
    let ci_hi = if count == n { 1.0 } else { (centre + half).min(1.0) };
    Ok(TailEstimate {
        p_hat: p,
        ci_lo,
        ci_hi,
        count,
        n,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Kolmogorov survival function `Q(lambda) = 2 sum (-1)^{k-1} exp(-2 k^2 lambda^2)`.
fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=200 {
        let kf = k as f64;
        let term = sign * (-2.0 * kf * kf * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-16 * sum.abs() {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn ks_p_value(d: f64, effective_n: f64) -> f64 {
    let root = effective_n.sqrt();
    kolmogorov_q((root + 0.12 + 0.11 / root) * d)
}

fn sorted(xs: &[f64]) -> Result<Vec<f64>> {
    if xs.iter().any(|x| x.is_nan()) {
        return Err(Error::InvalidArgument("NaN sample".into()));
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Two-sample Kolmogorov–Smirnov test with the asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::TooFewSamples { need: 1, got: 0 });
    }
    let (a, b) = (sorted(a)?, sorted(b)?);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(KsResult {
        statistic: d,
        p_value: ks_p_value(d, na * nb / (na + nb)),
    })
}

/// One-sample Kolmogorov–Smirnov test against a continuous `cdf`.
pub fn ks_one_sample(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<KsResult> {
    if samples.is_empty() {
        return Err(Error::TooFewSamples { need: 1, got: 0 });
    }
    let s = sorted(samples)?;
    let n = s.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in s.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i as f64 + 1.0) / n - f);
    }
    Ok(KsResult {
        statistic: d,
        p_value: ks_p_value(d, n),
    })
}

/// Plug-in value and delta-method standard error of
/// `sum_k sign_k * mean(a_k) * mean(b_k)` over indicator columns.
fn bilinear(terms: &[(f64, &[f64], &[f64])]) -> (f64, f64) {
    let n = terms[0].1.len();
    let means: Vec<(f64, f64)> = terms.iter().map(|(_, a, b)| (mean(a), mean(b))).collect();
    let value: f64 = terms.iter().zip(&means).map(|((s, _, _), (ma, mb))| s * ma * mb).sum();
    let influence: Vec<f64> = (0..n)
        .map(|i| {
            terms
                .iter()
                .zip(&means)
                .map(|((s, a, b), (ma, mb))| s * (mb * a[i] + ma * b[i]))
                .sum()
        })
        .collect();
    (value, (variance(&influence) / n as f64).sqrt())
}

fn indicator(xs: impl Iterator<Item = bool>) -> Vec<f64> {
    xs.map(|b| if b { 1.0 } else { 0.0 }).collect()
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Positive association of upper tails, `P(X > s1, Y > s2) >= P(X > s1) P(Y > s2)`,
/// and the two conditional-monotonicity cross-ratio inequalities
///
/// ```text
/// P(X > v) P(Y > r, X > u)   >= P(X > u) P(Y > r, X > v)
/// P(X <= v) P(Y > r, X <= u) >= P(X <= u) P(Y > r, X <= v)
/// ```
///
/// at `r = s2`, `u = max(s1, q75(X))`, `v = min(s1, q25(X))`, each allowed
/// three standard errors of slack. Empty tail cells flag the check
/// inconclusive rather than failing it.
pub fn fkg_check(pairs: &[(f64, f64)], s1: f64, s2: f64) -> Result<Report> {
    if pairs.len() < 100 {
        return Err(Error::TooFewSamples {
            need: 100,
            got: pairs.len(),
        });
    }
    let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let mut report = Report::new("fkg");
    let a = indicator(pairs.iter().map(|p| p.0 > s1));
    let b = indicator(pairs.iter().map(|p| p.1 > s2));
    let ab: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
    let ones = vec![1.0; pairs.len()];
    for (name, col) in [("P(X>s1)", &a), ("P(Y>s2)", &b)] {
        let p = mean(col);
        if p == 0.0 || p == 1.0 {
            report.flag(format!("inconclusive: {name} = {p}"));
        }
    }
    let (d, se) = bilinear(&[(1.0, &ab, &ones), (-1.0, &a, &b)]);
    report.assert_ge("positive_association", d, 0.0, 3.0 * se);
    report.margin("positive_association_stderr", se);

    let sx = sorted(&xs)?;
    let u = s1.max(quantile(&sx, 0.75));
    let v = s1.min(quantile(&sx, 0.25));
    if u > v {
        let gt = |t: f64| indicator(xs.iter().map(move |&x| x > t));
        let le = |t: f64| indicator(xs.iter().map(move |&x| x <= t));
        let with_b = |c: Vec<f64>| -> Vec<f64> { c.iter().zip(&b).map(|(x, y)| x * y).collect() };
        let (gv, gu, lu, lv) = (gt(v), gt(u), le(u), le(v));
        let (bgu, bgv, blv, blu) = (
            with_b(gu.clone()),
            with_b(gv.clone()),
            with_b(lv.clone()),
            with_b(lu.clone()),
        );
        if bgu.iter().all(|&x| x == 0.0) || blv.iter().all(|&x| x == 0.0) {
            report.flag("inconclusive: empty cross-ratio cell");
        }
        let (g1, se1) = bilinear(&[(1.0, &gv, &bgu), (-1.0, &gu, &bgv)]);
        report.assert_ge("cross_ratio_upper", g1, 0.0, 3.0 * se1);
        report.margin("cross_ratio_upper_stderr", se1);
        let (g2, se2) = bilinear(&[(1.0, &lv, &blu), (-1.0, &lu, &blv)]);
        report.assert_ge("cross_ratio_lower", g2, 0.0, 3.0 * se2);
        report.margin("cross_ratio_lower_stderr", se2);
    } else {
        report.flag("inconclusive: X has no spread");
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{ContinuousCDF, Normal};

    #[test]
    fn exact_correlations() {
        let line: Vec<(f64, f64)> = (1..=10).map(|i| (i as f64, 2.0 * i as f64 + 3.0)).collect();
        assert_eq!(pearson(&line).unwrap(), 1.0);
        let anti: Vec<(f64, f64)> = (1..=10).map(|i| (i as f64, -(i as f64))).collect();
        assert_eq!(pearson(&anti).unwrap(), -1.0);
        let flat = vec![(1.0, 2.0), (2.0, 2.0), (3.0, 2.0)];
        assert_eq!(pearson(&flat), Err(Error::DegenerateVariance));
    }

    #[test]
    fn independent_normals_are_uncorrelated() {
        let mut r = RngStream::new(8, 0);
        let pairs: Vec<(f64, f64)> = (0..10_000).map(|_| (r.normal(), r.normal())).collect();
        let c = pearson_corr(&pairs, &RngStream::new(8, 1)).unwrap();
        assert!(c.estimate.abs() < 0.03);
        assert!((c.stderr - 0.01).abs() < 0.002, "{}", c.stderr);
    }

    #[test]
    fn bootstrap_is_reproducible() {
        let mut r = RngStream::new(1, 0);
        let pairs: Vec<(f64, f64)> = (0..50).map(|_| (r.normal(), r.normal())).collect();
        let s = RngStream::new(2, 3);
        assert_eq!(pearson_corr(&pairs, &s).unwrap(), pearson_corr(&pairs, &s).unwrap());
    }

    #[test]
    fn power_law_examples() {
        let xs = [4.0, 8.0, 16.0, 32.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| x.powf(-1.0 / 3.0)).collect();
        let f = fit_power_law(&xs, &ys).unwrap();
        assert!((f.slope + 1.0 / 3.0).abs() < 1e-10);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 5.0 * x.powf(2.0 / 3.0)).collect();
        let f = fit_power_law(&xs, &ys).unwrap();
        assert!((f.slope - 2.0 / 3.0).abs() < 1e-10);
        assert!((f.intercept - 5f64.ln()).abs() < 1e-10);
        assert!(matches!(
            fit_power_law(&[1.0, 0.0, 2.0], &[1.0, 1.0, 1.0]),
            Err(Error::NonPositive(_))
        ));
    }

    #[test]
    fn noisy_power_law_slope() {
        let xs = [4.0, 8.0, 16.0, 32.0];
        let mut inside = 0;
        for seed in 0..1000 {
            let mut r = RngStream::new(seed, 0);
            let ys: Vec<f64> = xs
                .iter()
                .map(|x: &f64| x.powf(-1.0 / 3.0) * (0.05 * r.normal()).exp())
                .collect();
            let s = fit_power_law(&xs, &ys).unwrap().slope;
            if s > -0.43 && s < -0.24 {
                inside += 1;
            }
        }
        assert!(inside >= 990, "{inside}");
    }

    #[test]
    fn tail_examples() {
        let t = tail_estimate(&[0.0; 20], 1.0).unwrap();
        assert_eq!((t.p_hat, t.ci_lo), (0.0, 0.0));
        assert!(t.ci_hi > 0.0);
        assert_eq!(tail_estimate(&[-1.0, 1.0], 0.0).unwrap().p_hat, 0.5);
        let mut r = RngStream::new(77, 0);
        let xs: Vec<f64> = (0..100_000).map(|_| r.normal()).collect();
        let t = tail_estimate(&xs, 2.0).unwrap();
        assert!(t.ci_lo <= 0.02275 && 0.02275 <= t.ci_hi, "{t:?}");
        assert_eq!(tail_estimate(&[1.0, 1.0], 1.0).unwrap().p_hat, 0.0);
    }

    #[test]
    fn kolmogorov_reference_values() {
        // Q(1.36) is the familiar 5% point; Q(1.63) the 1% point.
        assert!((kolmogorov_q(1.3581) - 0.05).abs() < 1e-3);
        assert!((kolmogorov_q(1.6276) - 0.01).abs() < 1e-3);
    }

    #[test]
    fn ks_detects_shift_and_accepts_same_law() {
        let mut r = RngStream::new(3, 0);
        let a: Vec<f64> = (0..2000).map(|_| r.normal()).collect();
        let b: Vec<f64> = (0..2000).map(|_| r.normal()).collect();
        let c: Vec<f64> = (0..2000).map(|_| r.normal() + 0.3).collect();
        assert!(ks_two_sample(&a, &b).unwrap().p_value > 0.01);
        assert!(ks_two_sample(&a, &c).unwrap().p_value < 1e-6);
        let n = Normal::new(0.0, 1.0).unwrap();
        assert!(ks_one_sample(&a, |x| n.cdf(x)).unwrap().p_value > 0.01);
        assert!(ks_one_sample(&c, |x| n.cdf(x)).unwrap().p_value < 1e-6);
    }

    #[test]
    fn ks_statistic_by_hand() {
        let r = ks_two_sample(&[1.0, 2.0, 3.0], &[2.5, 3.5, 4.5]).unwrap();
        assert!((r.statistic - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn fkg_examples() {
        let mut r = RngStream::new(4, 0);
        let same: Vec<(f64, f64)> = (0..500).map(|_| r.normal()).map(|x| (x, x)).collect();
        let rep = fkg_check(&same, 0.0, 0.0).unwrap();
        assert!(rep.passed());
        assert!(rep.margins["positive_association"] > 0.2);
        let indep: Vec<(f64, f64)> = (0..500).map(|_| (r.normal(), r.normal())).collect();
        let rep = fkg_check(&indep, 0.0, 0.0).unwrap();
        assert!(rep.passed());
        assert!(rep.margins["positive_association"].abs() < 4.0 * rep.margins["positive_association_stderr"]);
        assert!(fkg_check(&indep[..50], 0.0, 0.0).is_err());
    }

    #[test]
    fn fkg_flags_empty_cells() {
        let pairs: Vec<(f64, f64)> = (0..200).map(|i| (i as f64, i as f64)).collect();
        let rep = fkg_check(&pairs, 1e6, 0.0).unwrap();
        assert!(!rep.flags.is_empty());
    }

    #[test]
    fn report_json_fields() {
        let mut rep = Report::new("demo");
        rep.assert_ge("x", 1.0, 0.5, 0.0);
        let v: serde_json::Value = serde_json::from_str(&rep.to_json().unwrap()).unwrap();
        for key in ["name", "hypotheses_passed", "asserted_inequalities", "margins"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert!(rep.passed());
    }
}
