//! The acceptance suite behind `kpzlab verify`.

use std::fmt;
use std::str::FromStr;

use serde_json::{json, Value};

use crate::config::{Experiment, ExperimentConfig};
use crate::error::{CliError, Result};

/// `Full` runs every suite at its default size; `Quick` shrinks replica
/// counts and grids so the whole suite runs in well under a minute.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Scale {
    #[default]
    Full,
    Quick,
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scale::Full => "full",
            Scale::Quick => "quick",
        })
    }
}

impl FromStr for Scale {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Scale::Full),
            "quick" => Ok(Scale::Quick),
            other => Err(CliError::param(
                "scale",
                format!("`{other}` is neither `quick` nor `full`"),
            )),
        }
    }
}

pub const SUITES: [Experiment; 5] = [
    Experiment::SheCheck,
    Experiment::TwoTimeConsistency,
    Experiment::ZeroTempScan,
    Experiment::GibbsCheck,
    Experiment::AppendixVerify,
];

fn quick_parameters(e: Experiment) -> Value {
    match e {
        Experiment::SheCheck => json!({"dx": 0.0625, "replicas": 150}),
        Experiment::TwoTimeConsistency => json!({"dx": 0.0625, "replicas": 100}),
        Experiment::ZeroTempScan => json!({"replicas": 300}),
        Experiment::GibbsCheck => json!({
            "replicas": 500,
            "coupling_seeds": 20,
            "coupling_sweeps": 20,
            "bridge_samples": 20000,
        }),
        Experiment::AppendixVerify => json!({"mc_samples": 50000}),
        _ => json!({}),
    }
}

/// The suite configurations at the given scale.
pub fn suite(scale: Scale, seed: u64, workers: usize) -> Result<Vec<ExperimentConfig>> {
    SUITES
        .iter()
        .map(|&e| {
            let mut cfg = ExperimentConfig::new(e);
            cfg.seed = seed;
            cfg.workers = workers;
            if scale == Scale::Quick {
                if let Value::Object(m) = quick_parameters(e) {
                    cfg.parameters = m.into_iter().collect();
                }
            }
            cfg.validate()?;
            Ok(cfg)
        })
        .collect()
}
