use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn kpzlab(args: &[&str], env_seed: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_kpzlab"));
    cmd.args(args).env_remove("KPZLAB_SEED");
    if let Some(s) = env_seed {
        cmd.env("KPZLAB_SEED", s);
    }
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("config.json");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn summary(dir: &Path, experiment: &str) -> Value {
    serde_json::from_slice(&fs::read(dir.join(format!("{experiment}.json"))).unwrap()).unwrap()
}

const SMALL_MODULUS: &str = r#"{"experiment": "modulus", "parameters": {"dx": 0.0625, "replicas": 12}}"#;

#[test]
fn appendix_verify_passes_with_seed_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"experiment": "appendix-verify", "seed": 1}"#);
    let out = kpzlab(&["run", &cfg, "--out", dir.path().to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let s = summary(dir.path(), "appendix-verify");
    assert_eq!(s["status"], "pass");
    let names: Vec<&str> = s["checks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    for n in [
        "monotone_cov",
        "cov_lower_from_conditional",
        "corr_bounds",
        "corr_expansion_mc",
        "tail_variance",
    ] {
        assert!(names.contains(&n), "{n} missing from {names:?}");
    }
    assert!(s["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true));
}

#[test]
fn same_seed_gives_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_MODULUS);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for (out, workers) in [(&a, "1"), (&b, "3")] {
        let o = kpzlab(
            &["run", &cfg, "--workers", workers, "--out", out.to_str().unwrap()],
            None,
        );
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for ext in ["csv", "json", "svg"] {
        let name = format!("modulus.{ext}");
        assert_eq!(
            fs::read(a.join(&name)).unwrap(),
            fs::read(b.join(&name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn too_few_replicas_is_insufficient_precision() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"experiment": "corr-scan-remote"}"#);
    let out = kpzlab(
        &[
            "run",
            &cfg,
            "--set",
            "replicas=4",
            "--out",
            dir.path().to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("insufficient precision"));
    assert_eq!(summary(dir.path(), "corr-scan-remote")["status"], "fail");
}

#[test]
fn unknown_experiment_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"experiment": "kpz-everything"}"#);
    let out = kpzlab(&["run", &cfg, "--out", dir.path().to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("kpz-everything"));
}

#[test]
fn unknown_parameter_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_MODULUS);
    let out = kpzlab(
        &["run", &cfg, "--set", "radius=3", "--out", dir.path().to_str().unwrap()],
        None,
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("radius"));
}

#[test]
fn missing_config_file_is_an_error() {
    let out = kpzlab(&["run", "/nonexistent/config.json"], None);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn seed_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"experiment": "appendix-verify", "seed": 3, "parameters": {"mc_samples": 1000}}"#,
    );
    let d = dir.path().to_str().unwrap();
    kpzlab(&["run", &cfg, "--out", d], Some("5"));
    assert_eq!(summary(dir.path(), "appendix-verify")["seed"], 5);
    kpzlab(&["run", &cfg, "--out", d, "--set", "seed=6"], Some("5"));
    assert_eq!(summary(dir.path(), "appendix-verify")["seed"], 6);
    kpzlab(&["run", &cfg, "--out", d], None);
    assert_eq!(summary(dir.path(), "appendix-verify")["seed"], 3);
}

#[test]
fn outputs_are_well_formed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_MODULUS);
    let out = kpzlab(&["run", &cfg, "--out", dir.path().to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let svg = fs::read_to_string(dir.path().join("modulus.svg")).unwrap();
    let doc = roxmltree::Document::parse(&svg).expect("well-formed SVG");
    assert_eq!(doc.root_element().tag_name().name(), "svg");
    let csv = fs::read_to_string(dir.path().join("modulus.csv")).unwrap();
    assert!(!csv.contains('\r'));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "replica,modulus");
    assert_eq!(lines.len(), 13);
    let s = summary(dir.path(), "modulus");
    assert_eq!(s["parameters"]["replicas"], 12);
}
