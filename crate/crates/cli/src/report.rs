//! Report bundles and their CSV, JSON and SVG files.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::Experiment;
use crate::error::{CliError, Result};
use crate::svg::Plot;

/// One pass/fail criterion of an experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReportBundle {
    pub experiment: Experiment,
    pub seed: u64,
    pub parameters: Value,
    pub estimates: BTreeMap<String, Value>,
    pub checks: Vec<Check>,
    /// Raw samples, already encoded as CSV.
    pub csv: Vec<u8>,
    pub plot: Plot,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl Format {
    pub fn extension(&self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Svg => "svg",
        }
    }
}

impl ReportBundle {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    pub fn summary(&self) -> Value {
        let mut m = serde_json::Map::new();
        m.insert("experiment".into(), Value::String(self.experiment.name().into()));
        m.insert("seed".into(), Value::from(self.seed));
        m.insert("parameters".into(), self.parameters.clone());
        m.insert(
            "estimates".into(),
            Value::Object(self.estimates.iter().map(|(k, v)| (k.clone(), v.clone())).collect()),
        );
        m.insert("checks".into(), serde_json::to_value(&self.checks).expect("plain data"));
        m.insert(
            "status".into(),
            Value::String(if self.passed() { "pass" } else { "fail" }.into()),
        );
        Value::Object(m)
    }

    pub fn render(&self, format: Format) -> Result<Vec<u8>> {
        Ok(match format {
            Format::Csv => self.csv.clone(),
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.summary())?;
                s.push('\n');
                s.into_bytes()
            }
            Format::Svg => self.plot.render().into_bytes(),
        })
    }

    /// Writes `<dir>/<experiment>.{csv,json,svg}` and returns the paths.
    pub fn emit(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let mut written = Vec::new();
        for format in [Format::Csv, Format::Json, Format::Svg] {
            let path = dir.join(format!("{}.{}", self.experiment.name(), format.extension()));
            let bytes = self.render(format)?;
            fs::write(&path, bytes).map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            })?;
            written.push(path);
        }
        Ok(written)
    }
}

/// Encodes a header and rows as CSV with LF line endings.
pub fn csv_table<S: AsRef<str>>(header: &[&str], rows: impl IntoIterator<Item = Vec<S>>) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|s| s.as_ref()))?;
    }
    w.into_inner().map_err(|e| CliError::Pool(e.to_string()))
}

/// Shortest round-trip text for a float.
pub fn num(v: f64) -> String {
    v.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::svg::{Plot, Series};
    use serde_json::json;

    fn bundle() -> ReportBundle {
        ReportBundle {
            experiment: Experiment::Modulus,
            seed: 3,
            parameters: json!({"b": 1.0, "a": -1.0}),
            estimates: BTreeMap::from([
                ("z".to_string(), json!(0.1 + 0.2)),
                ("a".to_string(), json!([1e-300, 5e300])),
            ]),
            checks: vec![Check::new("c", true, "ok")],
            csv: csv_table(&["x", "y"], Vec::<Vec<String>>::new()).unwrap(),
            plot: Plot::ecdf("t", "x", vec![Series::new("s", vec![(1.0, 0.5)])]),
        }
    }

    #[test]
    fn empty_table_is_header_only() {
        assert_eq!(bundle().csv, b"x,y\n");
    }

    #[test]
    fn quoting_and_line_endings() {
        let t = csv_table(&["a", "b"], vec![vec!["1,2", "say \"hi\""], vec!["x", "y"]]).unwrap();
        assert_eq!(String::from_utf8(t).unwrap(), "a,b\n\"1,2\",\"say \"\"hi\"\"\"\nx,y\n");
    }

    #[test]
    fn json_round_trips_with_sorted_keys() {
        let b = bundle();
        let text = String::from_utf8(b.render(Format::Json).unwrap()).unwrap();
        let back: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(back, b.summary());
        let keys: Vec<&str> = ["checks", "estimates", "experiment", "parameters", "seed", "status"].to_vec();
        let mut pos: Vec<usize> = keys.iter().map(|k| text.find(&format!("\"{k}\"")).unwrap()).collect();
        let sorted = {
            let mut p = pos.clone();
            p.sort();
            p
        };
        assert_eq!(pos, sorted);
        pos.dedup();
        assert_eq!(pos.len(), keys.len());
    }

    #[test]
    fn status_follows_checks() {
        let mut b = bundle();
        assert_eq!(b.summary()["status"], "pass");
        b.checks.push(Check::new("d", false, "no"));
        assert_eq!(b.summary()["status"], "fail");
        assert_eq!(b.failures().len(), 1);
    }

    #[test]
    fn emit_writes_three_files() {
        let dir = tempfile::tempdir().unwrap();
        let paths = bundle().emit(dir.path()).unwrap();
        assert_eq!(paths.len(), 3);
        assert!(paths.iter().all(|p| p.exists()));
        assert!(paths[0].ends_with("modulus.csv"));
    }

    #[test]
    fn unwritable_directory_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("plain");
        std::fs::write(&file, "x").unwrap();
        assert!(matches!(bundle().emit(&file.join("sub")), Err(CliError::Io { .. })));
    }
}
