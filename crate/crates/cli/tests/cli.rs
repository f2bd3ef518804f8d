use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;
use trimul_cli::report::{digest, emit_report, Format};
use trimul_core::export::CsvTable;

fn trimul(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trimul")).args(args).output().unwrap()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

fn check_manifest(dir: &Path) -> Value {
    let m = read_json(&dir.join("manifest.json"));
    for o in m["outputs"].as_array().unwrap() {
        let bytes = fs::read(dir.join(o["file"].as_str().unwrap())).unwrap();
        assert_eq!(digest(&bytes), o["sha256"].as_str().unwrap());
    }
    m
}

#[test]
fn boundary_reports_divergence_at_three() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("run");
    let o = trimul(&["boundary", "--q", "3", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_json(&out.join("boundary.json"));
    assert_eq!(r["verdict"], "diverging");
    assert_eq!(r["l_max"], 1_000_000);
    let m = check_manifest(&out);
    assert_eq!(m["config"]["kind"], "boundary");
}

#[test]
fn zero_multiplier_gives_empty_tensor() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("cfg.json");
    fs::write(&cfg, r#"{"multiplier": {"shape": "zero"}, "j_max": 2}"#).unwrap();
    let out = tmp.path().join("run");
    let o = trimul(&["analyze", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read(out.join("coefficients.jsonl")).unwrap().len(), 0);
    assert_eq!(read_json(&out.join("summary.json"))["coefficients"], 0);
    check_manifest(&out);
}

#[test]
fn missing_field_is_usage_error_and_writes_nothing() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("run");
    let o = trimul(&["bound-sweep", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("q:"));
    assert!(!out.exists());
}

#[test]
fn unknown_config_field_is_usage_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("cfg.json");
    fs::write(&cfg, r#"{"q": 2, "colour": "blue"}"#).unwrap();
    let o = trimul(&["boundary", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn refusal_has_exit_three() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("run");
    let o = trimul(&["analyze", "--grid", "8", "--jmax", "3", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("too coarse"));
    assert!(!out.exists());
}

#[test]
fn unwritable_output_has_exit_four() {
    let tmp = TempDir::new().unwrap();
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let out = blocker.join("run");
    let o = trimul(&["boundary", "--q", "5", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn flags_override_config() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("cfg.json");
    fs::write(&cfg, r#"{"q": 10, "l_max": 5000}"#).unwrap();
    let out = tmp.path().join("run");
    let o = trimul(&["boundary", "--config", cfg.to_str().unwrap(), "--q", "3", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let r = read_json(&out.join("boundary.json"));
    assert_eq!(r["q"].as_f64(), Some(3.0));
    assert_eq!(r["l_max"], 5000);
}

#[test]
fn identical_config_gives_identical_outputs() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("cfg.json");
    fs::write(&cfg, r#"{"n_max": 4}"#).unwrap();
    let run = |name: &str| {
        let out = tmp.path().join(name);
        let o = trimul(&["necessity", "--config", cfg.to_str().unwrap(), "--trials", "64", "--seed", "5", "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
        out
    };
    let (a, b) = (run("a"), run("b"));
    for f in ["growth.json", "growth.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let csv = fs::read_to_string(a.join("growth.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3 + 1);
}

#[test]
fn partition_trees_verify() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("run");
    let o = trimul(&["partition", "--jmax", "2", "--grid", "32", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let blocks = read_json(&out.join("partition.json"));
    let blocks = blocks.as_array().unwrap();
    assert!(!blocks.is_empty());
    for b in blocks {
        assert!(b["report"]["failures"].as_array().unwrap().is_empty());
    }
    check_manifest(&out);
}

#[test]
fn selftest_passes() {
    let o = trimul(&["selftest"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.lines().all(|l| l.starts_with("PASS")));
}

#[test]
fn emitted_reports_round_trip() {
    let tmp = TempDir::new().unwrap();
    let values: Vec<f64> = vec![0.1, 1.0 / 3.0, 1e-300, -7.25e17, f64::MIN_POSITIVE];
    let path = tmp.path().join("v.json");
    let d1 = emit_report(&values, None, Format::Json, &path).unwrap();
    let d2 = emit_report(&values, None, Format::Json, &path).unwrap();
    assert_eq!(d1, d2);
    let back: Vec<f64> = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(back, values);

    let mut t = CsvTable::new(&["x"]);
    for v in &values {
        t.push_floats(&[*v]);
    }
    let csv = tmp.path().join("v.csv");
    emit_report(&values, Some(&t), Format::Csv, &csv).unwrap();
    assert_eq!(fs::read_to_string(&csv).unwrap().lines().count(), values.len() + 1);
    let leftovers: Vec<_> = fs::read_dir(tmp.path())
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().ends_with(".tmp"))
        .collect();
    assert!(leftovers.is_empty());
}
