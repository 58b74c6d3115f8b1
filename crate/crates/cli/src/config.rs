//! Experiment configuration: a JSON file, `--set key=value` overrides and the
//! `KPZLAB_SEED` environment variable.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, Result};

pub const SEED_ENV: &str = "KPZLAB_SEED";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    SheCheck,
    TwoTimeConsistency,
    CorrScanRemote,
    CorrScanAdjacent,
    TemporalTails,
    SpatialExtremes,
    Modulus,
    GibbsCheck,
    ZeroTempScan,
    AppendixVerify,
}

impl Experiment {
    pub const ALL: [Experiment; 10] = [
        Experiment::SheCheck,
        Experiment::TwoTimeConsistency,
        Experiment::CorrScanRemote,
        Experiment::CorrScanAdjacent,
        Experiment::TemporalTails,
        Experiment::SpatialExtremes,
        Experiment::Modulus,
        Experiment::GibbsCheck,
        Experiment::ZeroTempScan,
        Experiment::AppendixVerify,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Experiment::SheCheck => "she-check",
            Experiment::TwoTimeConsistency => "two-time-consistency",
            Experiment::CorrScanRemote => "corr-scan-remote",
            Experiment::CorrScanAdjacent => "corr-scan-adjacent",
            Experiment::TemporalTails => "temporal-tails",
            Experiment::SpatialExtremes => "spatial-extremes",
            Experiment::Modulus => "modulus",
            Experiment::GibbsCheck => "gibbs-check",
            Experiment::ZeroTempScan => "zero-temp-scan",
            Experiment::AppendixVerify => "appendix-verify",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| CliError::UnknownExperiment(s.to_string()))
    }
}

fn default_workers() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub parameters: BTreeMap<String, Value>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        Self {
            experiment,
            parameters: BTreeMap::new(),
            seed: 0,
            workers: 1,
            output_dir: None,
        }
    }

    /// Parses a config file. The experiment name is checked on its own so an
    /// unknown name is reported as such rather than as a schema error.
    pub fn parse(text: &str) -> Result<Self> {
        let raw: Value = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        let obj = raw
            .as_object()
            .ok_or_else(|| CliError::Config("top level must be an object".into()))?;
        match obj.get("experiment") {
            Some(Value::String(name)) => {
                name.parse::<Experiment>()?;
            }
            Some(_) => return Err(CliError::Config("`experiment` must be a string".into())),
            None => return Err(CliError::Config("missing `experiment`".into())),
        }
        let cfg: ExperimentConfig = serde_json::from_value(raw).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.workers == 0 {
            return Err(CliError::param("workers", "must be at least 1"));
        }
        self.params().map(|_| ())
    }

    /// Applies one `key=value` override. `seed`, `workers`, `output_dir` and
    /// `experiment` address the top level; anything else, with or without a
    /// `parameters.` prefix, is an experiment parameter.
    pub fn apply_set(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = parse_set(assignment)?;
        match key.as_str() {
            "seed" => self.seed = as_u64(&key, &value)?,
            "workers" => self.workers = as_u64(&key, &value)? as usize,
            "output_dir" => match value {
                Value::String(s) => self.output_dir = Some(PathBuf::from(s)),
                _ => return Err(CliError::param(&key, "expected a path")),
            },
            "experiment" => match value {
                Value::String(s) => self.experiment = s.parse()?,
                _ => return Err(CliError::param(&key, "expected a name")),
            },
            _ => {
                let name = key.strip_prefix("parameters.").unwrap_or(&key);
                if name.is_empty() || name.contains('.') {
                    return Err(CliError::param(&key, "nested keys are not supported"));
                }
                self.parameters.insert(name.to_string(), value);
            }
        }
        Ok(())
    }

    /// Replaces the seed with the value of `KPZLAB_SEED`, if given.
    pub fn apply_env_seed(&mut self, value: Option<&str>) -> Result<()> {
        if let Some(v) = value {
            self.seed = v
                .trim()
                .parse()
                .map_err(|_| CliError::param(SEED_ENV, format!("`{v}` is not a non-negative integer")))?;
        }
        Ok(())
    }

    /// Typed, validated parameters for the configured experiment.
    pub fn params(&self) -> Result<Params> {
        let p = match self.experiment {
            Experiment::SheCheck => Params::SheCheck(decode(&self.parameters)?),
            Experiment::TwoTimeConsistency => Params::TwoTime(decode(&self.parameters)?),
            Experiment::CorrScanRemote => Params::Remote(decode(&self.parameters)?),
            Experiment::CorrScanAdjacent => Params::Adjacent(decode(&self.parameters)?),
            Experiment::TemporalTails => Params::Tails(decode(&self.parameters)?),
            Experiment::SpatialExtremes => Params::Spatial(decode(&self.parameters)?),
            Experiment::Modulus => Params::Modulus(decode(&self.parameters)?),
            Experiment::GibbsCheck => Params::Gibbs(decode(&self.parameters)?),
            Experiment::ZeroTempScan => Params::ZeroTempScan(decode(&self.parameters)?),
            Experiment::AppendixVerify => Params::Appendix(decode(&self.parameters)?),
        };
        p.validate()?;
        Ok(p)
    }
}

/// Splits `key=value`; the value is read as JSON when it parses, otherwise
/// as a bare string.
pub fn parse_set(assignment: &str) -> Result<(String, Value)> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("`{assignment}` is not of the form key=value")))?;
    let key = key.trim();
    if key.is_empty()
        || !key
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
    {
        return Err(CliError::Config(format!("bad key `{key}`")));
    }
    let raw = raw.trim();
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    Ok((key.to_string(), value))
}

fn as_u64(key: &str, v: &Value) -> Result<u64> {
    v.as_u64()
        .ok_or_else(|| CliError::param(key, "expected a non-negative integer"))
}

fn decode<T: DeserializeOwned>(map: &BTreeMap<String, Value>) -> Result<T> {
    let obj: serde_json::Map<String, Value> = map.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
    serde_json::from_value(Value::Object(obj)).map_err(|e| CliError::Config(format!("parameters: {e}")))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Params {
    SheCheck(SheCheckParams),
    TwoTime(TwoTimeParams),
    Remote(RemoteParams),
    Adjacent(AdjacentParams),
    Tails(TailParams),
    Spatial(SpatialParams),
    Modulus(ModulusParams),
    Gibbs(GibbsParams),
    ZeroTempScan(ZeroTempScanParams),
    Appendix(AppendixParams),
}

impl Params {
    pub fn validate(&self) -> Result<()> {
        match self {
            Params::SheCheck(p) => p.validate(),
            Params::TwoTime(p) => p.validate(),
            Params::Remote(p) => p.validate(),
            Params::Adjacent(p) => p.validate(),
            Params::Tails(p) => p.validate(),
            Params::Spatial(p) => p.validate(),
            Params::Modulus(p) => p.validate(),
            Params::Gibbs(p) => p.validate(),
            Params::ZeroTempScan(p) => p.validate(),
            Params::Appendix(p) => p.validate(),
        }
    }
}

fn positive(key: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::param(key, format!("{v} must be positive and finite")))
    }
}

fn finite(key: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(CliError::param(key, "must be finite"))
    }
}

fn at_least(key: &str, v: usize, min: usize) -> Result<()> {
    if v >= min {
        Ok(())
    } else {
        Err(CliError::param(key, format!("{v} is below the minimum {min}")))
    }
}

fn level(key: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(CliError::param(key, format!("{v} must lie in (0, 1)")))
    }
}

fn list(key: &str, v: &[f64], min_len: usize, check: impl Fn(f64) -> bool) -> Result<()> {
    if v.len() < min_len {
        return Err(CliError::param(key, format!("need at least {min_len} values")));
    }
    if let Some(bad) = v.iter().find(|&&x| !(x.is_finite() && check(x))) {
        return Err(CliError::param(key, format!("value {bad} out of range")));
    }
    Ok(())
}

fn window(lo_key: &str, lo: f64, hi_key: &str, hi: f64) -> Result<()> {
    finite(lo_key, lo)?;
    finite(hi_key, hi)?;
    if lo < hi {
        Ok(())
    } else {
        Err(CliError::param(hi_key, format!("{hi} must exceed {lo_key} = {lo}")))
    }
}

fn grid(dx: f64, half_width: f64) -> Result<()> {
    positive("dx", dx)?;
    positive("half_width", half_width)?;
    let cells = half_width / dx;
    if (cells - cells.round()).abs() > 1e-9 * cells.max(1.0) {
        return Err(CliError::param("half_width", "must be a multiple of dx"));
    }
    Ok(())
}

fn lines(n: usize) -> Result<()> {
    at_least("n", n, 16)
}

/// Noise-off oracle, one-point stationarity and positive association.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SheCheckParams {
    pub t: f64,
    pub oracle_dx: f64,
    pub oracle_range: f64,
    pub oracle_tol: f64,
    pub dx: f64,
    pub half_width: f64,
    pub alpha: f64,
    pub x_points: Vec<f64>,
    pub replicas: usize,
    pub ks_level: f64,
}

impl Default for SheCheckParams {
    fn default() -> Self {
        Self {
            t: 1.0,
            oracle_dx: 1.0 / 64.0,
            oracle_range: 4.0,
            oracle_tol: 1e-3,
            dx: 1.0 / 32.0,
            half_width: 8.0,
            alpha: 2.0,
            x_points: vec![0.0, 0.5, 1.0],
            replicas: 500,
            ks_level: 0.01,
        }
    }
}

impl SheCheckParams {
    fn validate(&self) -> Result<()> {
        positive("t", self.t)?;
        grid(self.oracle_dx, self.half_width)?;
        grid(self.dx, self.half_width)?;
        positive("oracle_range", self.oracle_range)?;
        if self.oracle_range > self.half_width {
            return Err(CliError::param("oracle_range", "exceeds half_width"));
        }
        positive("oracle_tol", self.oracle_tol)?;
        if !(self.alpha > 1.0 && self.alpha.is_finite()) {
            return Err(CliError::param("alpha", "must exceed 1"));
        }
        list("x_points", &self.x_points, 2, |_| true)?;
        at_least("replicas", self.replicas, 1)?;
        level("ks_level", self.ks_level)
    }
}

/// Direct against composed two-time samples, plus the exact algebra of `I_t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TwoTimeParams {
    pub t: f64,
    pub alpha: f64,
    pub dx: f64,
    pub half_width: f64,
    pub replicas: usize,
    pub ks_level: f64,
    pub algebra_cases: usize,
    pub algebra_tol: f64,
}

impl Default for TwoTimeParams {
    fn default() -> Self {
        Self {
            t: 1.0,
            alpha: 2.0,
            dx: 1.0 / 32.0,
            half_width: 8.0,
            replicas: 500,
            ks_level: 0.01,
            algebra_cases: 100,
            algebra_tol: 1e-10,
        }
    }
}

impl TwoTimeParams {
    fn validate(&self) -> Result<()> {
        positive("t", self.t)?;
        if !(self.alpha > 1.0 && self.alpha.is_finite()) {
            return Err(CliError::param("alpha", "must exceed 1"));
        }
        grid(self.dx, self.half_width)?;
        at_least("replicas", self.replicas, 1)?;
        level("ks_level", self.ks_level)?;
        positive("algebra_tol", self.algebra_tol)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RemoteParams {
    pub n: usize,
    pub alpha: Vec<f64>,
    pub replicas: usize,
    pub min_replicas: usize,
    pub slope_min: f64,
    pub slope_max: f64,
}

impl Default for RemoteParams {
    fn default() -> Self {
        Self {
            n: 200,
            alpha: vec![4.0, 8.0, 16.0, 32.0],
            replicas: 2000,
            min_replicas: 100,
            slope_min: -0.55,
            slope_max: -0.15,
        }
    }
}

impl RemoteParams {
    fn validate(&self) -> Result<()> {
        lines(self.n)?;
        list("alpha", &self.alpha, 3, |a| a > 1.0)?;
        at_least("replicas", self.replicas, 1)?;
        window("slope_min", self.slope_min, "slope_max", self.slope_max)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdjacentParams {
    pub n: usize,
    pub beta: Vec<f64>,
    pub replicas: usize,
    pub min_replicas: usize,
    pub slope_min: f64,
    pub slope_max: f64,
}

impl Default for AdjacentParams {
    fn default() -> Self {
        Self {
            n: 200,
            beta: vec![0.025, 0.05, 0.1, 0.2],
            replicas: 2000,
            min_replicas: 100,
            slope_min: 0.40,
            slope_max: 0.95,
        }
    }
}

impl AdjacentParams {
    fn validate(&self) -> Result<()> {
        lines(self.n)?;
        list("beta", &self.beta, 3, |b| b > 0.0 && b < 1.0)?;
        at_least("replicas", self.replicas, 1)?;
        window("slope_min", self.slope_min, "slope_max", self.slope_max)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TailParams {
    pub n: usize,
    pub beta: f64,
    pub thresholds: Vec<f64>,
    pub replicas: usize,
    pub min_replicas: usize,
    pub decay_from: f64,
    pub decay_to: f64,
    pub sigmas: f64,
}

impl Default for TailParams {
    fn default() -> Self {
        Self {
            n: 200,
            beta: 0.1,
            thresholds: vec![1.0, 2.0, 3.0, 4.0],
            replicas: 2000,
            min_replicas: 100,
            decay_from: 2.0,
            decay_to: 4.0,
            sigmas: 3.0,
        }
    }
}

impl TailParams {
    fn validate(&self) -> Result<()> {
        lines(self.n)?;
        positive("beta", self.beta)?;
        list("thresholds", &self.thresholds, 1, |s| s > 0.0)?;
        at_least("replicas", self.replicas, 1)?;
        positive("decay_from", self.decay_from)?;
        window("decay_from", self.decay_from, "decay_to", self.decay_to)?;
        positive("sigmas", self.sigmas)
    }
}

/// The remote scan, adjacent scan and temporal tails on one set of replicas.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ZeroTempScanParams {
    pub n: usize,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub tail_beta: f64,
    pub thresholds: Vec<f64>,
    pub replicas: usize,
    pub min_replicas: usize,
    pub remote_slope_min: f64,
    pub remote_slope_max: f64,
    pub adjacent_slope_min: f64,
    pub adjacent_slope_max: f64,
    pub decay_from: f64,
    pub decay_to: f64,
    pub sigmas: f64,
}

impl Default for ZeroTempScanParams {
    fn default() -> Self {
        let (r, a, t) = (
            RemoteParams::default(),
            AdjacentParams::default(),
            TailParams::default(),
        );
        Self {
            n: 200,
            alpha: r.alpha,
            beta: a.beta,
            tail_beta: t.beta,
            thresholds: t.thresholds,
            replicas: 2000,
            min_replicas: 100,
            remote_slope_min: r.slope_min,
            remote_slope_max: r.slope_max,
            adjacent_slope_min: a.slope_min,
            adjacent_slope_max: a.slope_max,
            decay_from: t.decay_from,
            decay_to: t.decay_to,
            sigmas: t.sigmas,
        }
    }
}

impl ZeroTempScanParams {
    pub fn remote(&self) -> RemoteParams {
        RemoteParams {
            n: self.n,
            alpha: self.alpha.clone(),
            replicas: self.replicas,
            min_replicas: self.min_replicas,
            slope_min: self.remote_slope_min,
            slope_max: self.remote_slope_max,
        }
    }

    pub fn adjacent(&self) -> AdjacentParams {
        AdjacentParams {
            n: self.n,
            beta: self.beta.clone(),
            replicas: self.replicas,
            min_replicas: self.min_replicas,
            slope_min: self.adjacent_slope_min,
            slope_max: self.adjacent_slope_max,
        }
    }

    pub fn tails(&self) -> TailParams {
        TailParams {
            n: self.n,
            beta: self.tail_beta,
            thresholds: self.thresholds.clone(),
            replicas: self.replicas,
            min_replicas: self.min_replicas,
            decay_from: self.decay_from,
            decay_to: self.decay_to,
            sigmas: self.sigmas,
        }
    }

    fn validate(&self) -> Result<()> {
        self.remote().validate()?;
        self.adjacent().validate()?;
        self.tails().validate()
    }
}

/// Tails of `sup_x h(x) + (1 - nu) x^2/2` and `inf_x h(x) + (1 + nu) x^2/2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpatialParams {
    pub t: f64,
    pub dx: f64,
    pub half_width: f64,
    pub x_range: f64,
    pub nu: f64,
    pub replicas: usize,
    pub thresholds: Vec<f64>,
}

impl Default for SpatialParams {
    fn default() -> Self {
        Self {
            t: 1.0,
            dx: 1.0 / 32.0,
            half_width: 8.0,
            x_range: 2.0,
            nu: 0.5,
            replicas: 500,
            thresholds: vec![0.0, 1.0, 2.0, 3.0, 4.0],
        }
    }
}

impl SpatialParams {
    fn validate(&self) -> Result<()> {
        positive("t", self.t)?;
        grid(self.dx, self.half_width)?;
        positive("x_range", self.x_range)?;
        if !(self.nu > 0.0 && self.nu < 1.0) {
            return Err(CliError::param("nu", "must lie in (0, 1)"));
        }
        at_least("replicas", self.replicas, 1)?;
        list("thresholds", &self.thresholds, 2, |_| true)
    }
}

/// The Hölder-type modulus of the parabolically shifted profile over `[a, b]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModulusParams {
    pub t: f64,
    pub dx: f64,
    pub half_width: f64,
    pub a: f64,
    pub b: f64,
    pub replicas: usize,
    pub thresholds: Vec<f64>,
}

impl Default for ModulusParams {
    fn default() -> Self {
        Self {
            t: 1.0,
            dx: 1.0 / 32.0,
            half_width: 8.0,
            a: -1.0,
            b: 1.0,
            replicas: 500,
            thresholds: vec![1.0, 1.5, 2.0, 2.5, 3.0, 4.0],
        }
    }
}

impl ModulusParams {
    fn validate(&self) -> Result<()> {
        positive("t", self.t)?;
        grid(self.dx, self.half_width)?;
        window("a", self.a, "b", self.b)?;
        at_least("replicas", self.replicas, 1)?;
        list("thresholds", &self.thresholds, 2, |s| s > 0.0)
    }
}

/// Heat-bath invariance of the free bridge, the monotone coupling and the
/// bridge minimum law.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GibbsParams {
    pub grid_points: usize,
    pub length: f64,
    pub sweeps: usize,
    pub replicas: usize,
    pub ks_level: f64,
    pub curves: usize,
    pub interaction_t: f64,
    pub coupling_seeds: usize,
    pub coupling_sweeps: usize,
    pub bridge_samples: usize,
    pub bridge_points: usize,
    pub bridge_cases: Vec<[f64; 4]>,
    pub sigmas: f64,
}

impl Default for GibbsParams {
    fn default() -> Self {
        Self {
            grid_points: 17,
            length: 1.0,
            sweeps: 10,
            replicas: 2000,
            ks_level: 0.01,
            curves: 2,
            interaction_t: 1.0,
            coupling_seeds: 100,
            coupling_sweeps: 100,
            bridge_samples: 100_000,
            bridge_points: 65,
            bridge_cases: vec![[0.0, 0.0, 1.0, 1.0], [1.0, -1.0, 2.0, 2.0]],
            sigmas: 3.0,
        }
    }
}

impl GibbsParams {
    fn validate(&self) -> Result<()> {
        at_least("grid_points", self.grid_points, 3)?;
        positive("length", self.length)?;
        at_least("replicas", self.replicas, 1)?;
        level("ks_level", self.ks_level)?;
        at_least("curves", self.curves, 1)?;
        positive("interaction_t", self.interaction_t)?;
        at_least("bridge_samples", self.bridge_samples, 2)?;
        at_least("bridge_points", self.bridge_points, 2)?;
        for c in &self.bridge_cases {
            if c.iter().any(|v| !v.is_finite()) || !(c[2] > 0.0) {
                return Err(CliError::param("bridge_cases", "need finite [a, b, length > 0, m]"));
            }
        }
        positive("sigmas", self.sigmas)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppendixParams {
    pub joints: usize,
    pub support: usize,
    pub c2_fraction: f64,
    pub c_cap: f64,
    pub chi_steps: usize,
    pub psi_steps: usize,
    pub mc_points: Vec<[f64; 2]>,
    pub mc_samples: usize,
    pub sigmas: f64,
}

impl Default for AppendixParams {
    fn default() -> Self {
        Self {
            joints: 1000,
            support: 4,
            c2_fraction: 0.5,
            c_cap: 5.0,
            chi_steps: 25,
            psi_steps: 41,
            mc_points: vec![
                [1.0, 0.0],
                [0.04, 0.1],
                [0.25, -0.2],
                [0.09, 0.15],
                [0.5, 0.5],
                [0.16, -0.3],
            ],
            mc_samples: 200_000,
            sigmas: 3.0,
        }
    }
}

impl AppendixParams {
    fn validate(&self) -> Result<()> {
        at_least("joints", self.joints, 1)?;
        at_least("support", self.support, 2)?;
        level("c2_fraction", self.c2_fraction)?;
        positive("c_cap", self.c_cap)?;
        at_least("chi_steps", self.chi_steps, 1)?;
        at_least("psi_steps", self.psi_steps, 2)?;
        for &[chi, psi] in &self.mc_points {
            if !(chi > 0.0 && psi * psi < chi && 1.0 + 2.0 * psi + chi > 0.0) {
                return Err(CliError::param("mc_points", format!("({chi}, {psi}) is degenerate")));
            }
        }
        at_least("mc_samples", self.mc_samples, 10)?;
        positive("sigmas", self.sigmas)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_takes_defaults() {
        let cfg = ExperimentConfig::parse(r#"{"experiment": "corr-scan-remote"}"#).unwrap();
        assert_eq!(cfg.seed, 0);
        assert_eq!(cfg.workers, 1);
        assert_eq!(cfg.params().unwrap(), Params::Remote(RemoteParams::default()));
    }

    #[test]
    fn unknown_names_are_errors() {
        let e = ExperimentConfig::parse(r#"{"experiment": "warp-drive"}"#).unwrap_err();
        assert!(matches!(e, CliError::UnknownExperiment(ref s) if s == "warp-drive"));
        let e = ExperimentConfig::parse(r#"{"experiment": "modulus", "parameters": {"bogus": 1}}"#).unwrap_err();
        assert!(e.to_string().contains("bogus"), "{e}");
        let e = ExperimentConfig::parse(r#"{"experiment": "modulus", "colour": 1}"#).unwrap_err();
        assert!(e.to_string().contains("colour"), "{e}");
    }

    #[test]
    fn replicas_must_be_positive() {
        let e = ExperimentConfig::parse(r#"{"experiment": "she-check", "parameters": {"replicas": 0}}"#).unwrap_err();
        assert!(matches!(e, CliError::Parameter { ref key, .. } if key == "replicas"));
    }

    #[test]
    fn set_overrides() {
        let mut cfg = ExperimentConfig::new(Experiment::CorrScanRemote);
        cfg.apply_set("replicas=4").unwrap();
        cfg.apply_set("parameters.alpha=[2, 3, 5]").unwrap();
        cfg.apply_set("seed=17").unwrap();
        cfg.apply_set("output_dir=out/x").unwrap();
        let Params::Remote(p) = cfg.params().unwrap() else {
            panic!()
        };
        assert_eq!(p.replicas, 4);
        assert_eq!(p.alpha, vec![2.0, 3.0, 5.0]);
        assert_eq!(cfg.seed, 17);
        assert_eq!(cfg.output_dir, Some(PathBuf::from("out/x")));
        assert!(cfg.apply_set("seed=-1").is_err());
        assert!(cfg.apply_set("no-equals").is_err());
        assert!(cfg.apply_set("=3").is_err());
        assert!(cfg.apply_set("a.b.c=3").is_err());
    }

    #[test]
    fn set_values_fall_back_to_strings() {
        assert_eq!(parse_set("k=abc").unwrap(), ("k".into(), Value::String("abc".into())));
        assert_eq!(parse_set("k = 2.5 ").unwrap(), ("k".into(), serde_json::json!(2.5)));
        assert_eq!(parse_set("k=").unwrap(), ("k".into(), Value::String(String::new())));
    }

    #[test]
    fn env_seed() {
        let mut cfg = ExperimentConfig::new(Experiment::Modulus);
        cfg.apply_env_seed(None).unwrap();
        assert_eq!(cfg.seed, 0);
        cfg.apply_env_seed(Some("99")).unwrap();
        assert_eq!(cfg.seed, 99);
        assert!(cfg.apply_env_seed(Some("x")).is_err());
    }

    #[test]
    fn experiment_names_round_trip() {
        for e in Experiment::ALL {
            assert_eq!(e.name().parse::<Experiment>().unwrap(), e);
            assert_eq!(serde_json::to_value(e).unwrap(), Value::String(e.name().into()));
        }
    }

    #[test]
    fn defaults_validate() {
        for e in Experiment::ALL {
            ExperimentConfig::new(e).validate().unwrap();
        }
    }
}
