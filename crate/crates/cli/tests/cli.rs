use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn strz(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_strz")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

const SMALL: &str = "[grid]\ndim = 1\nhalf_width = 16.0\npoints = 64\n\n[solver]\nt1 = 0.2\ndt = 0.01\nrecord_every = 5\n";

#[test]
fn admissible_reports_dual_pair() {
    let out = strz(&["admissible", "--p", "4", "--q", "4", "--n", "2"]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["admissible"], true);
    assert_eq!(v["dual"][0], "4/3");
}

#[test]
fn bad_flags_exit_with_usage_code() {
    assert_eq!(code(&strz(&["admissible", "--p", "1/2", "--q", "4", "--n", "2"])), 2);
    assert_eq!(code(&strz(&["verify", "--criterion", "13"])), 2);
    assert_eq!(code(&strz(&["frobnicate"])), 2);
}

#[test]
fn unknown_config_keys_are_usage_errors() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "c.toml", "[grid]\nbogus = 1\n");
    let out = strz(&["config", "--config", &cfg]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));
}

#[test]
fn precondition_failures_exit_with_three() {
    assert_eq!(code(&strz(&["eigensolve", "--dim", "5"])), 3);
}

#[test]
fn missing_config_is_an_io_error() {
    assert_eq!(code(&strz(&["config", "--config", "/nonexistent/strz.toml"])), 5);
}

#[test]
fn bad_thread_count_is_rejected() {
    let out = Command::new(env!("CARGO_BIN_EXE_strz"))
        .args(["admissible", "--p", "4", "--q", "4", "--n", "2"])
        .env("STRZ_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
    let out = Command::new(env!("CARGO_BIN_EXE_strz"))
        .args(["admissible", "--p", "4", "--q", "4", "--n", "2"])
        .env("STRZ_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
}

#[test]
fn config_round_trip_is_idempotent() {
    let dir = TempDir::new().unwrap();
    let first = strz(&["config", "--config", &write(dir.path(), "a.toml", SMALL)]);
    assert_eq!(code(&first), 0);
    let text = String::from_utf8(first.stdout).unwrap();
    let second = strz(&["config", "--config", &write(dir.path(), "b.toml", &text)]);
    assert_eq!(String::from_utf8(second.stdout).unwrap(), text);
}

#[test]
fn simulate_is_deterministic_and_hashes_its_config() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "c.toml", SMALL);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let res = strz(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap(), "--snapshot"]);
        assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    }
    let ta = fs::read_to_string(a.join("trajectory.csv")).unwrap();
    assert_eq!(ta, fs::read_to_string(b.join("trajectory.csv")).unwrap());
    assert!(ta.starts_with("t,l2_norm\n"));
    assert_eq!(ta.lines().count(), 1 + 5);
    assert_eq!(fs::read(a.join("final.strz")).unwrap(), fs::read(b.join("final.strz")).unwrap());

    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(a.join("summary.json")).unwrap()).unwrap();
    let hash = summary["config_sha256"].as_str().unwrap();
    assert_eq!(hash.len(), 64);
    assert!(hash.chars().all(|c| c.is_ascii_hexdigit()));
    assert_eq!(summary["command"], "simulate");
}

#[test]
fn snapshot_datum_round_trips_through_simulate() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("first");
    let cfg = write(dir.path(), "c.toml", SMALL);
    assert_eq!(code(&strz(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap(), "--snapshot"])), 0);
    let snap = out.join("final.strz");
    let text = format!("{SMALL}\n[initial]\nkind = \"snapshot\"\npath = {:?}\n", snap.to_str().unwrap());
    let cfg2 = write(dir.path(), "d.toml", &text);
    let res = strz(&["simulate", "--config", &cfg2, "--out", dir.path().join("second").to_str().unwrap()]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));

    let wrong = text.replace("points = 64", "points = 32");
    let cfg3 = write(dir.path(), "e.toml", &wrong);
    assert_eq!(code(&strz(&["simulate", "--config", &cfg3])), 3);
}

#[test]
fn counterexample_writes_ratio_table() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("ce");
    let res = strz(&[
        "counterexample", "--kind", "subcritical", "--r", "2", "--s", "4", "--n", "2", "--K", "12", "--points",
        "32", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let mut reader = csv::Reader::from_path(out.join("ratios.csv")).unwrap();
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, ["p", "q", "k", "start", "length", "eps", "ratio"]);
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert!(!rows.is_empty());
    for row in &rows {
        let ratio: f64 = row[6].parse().unwrap();
        assert!(ratio.is_finite() && ratio > 0.0);
    }
}

#[test]
fn verify_writes_criteria_table() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("v");
    let res = strz(&["verify", "--criterion", "2", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&res), 0);
    assert!(String::from_utf8_lossy(&res.stdout).contains("[PASS]"));
    let table = fs::read_to_string(out.join("criteria.csv")).unwrap();
    assert!(table.starts_with("id,name,passed,detail,seconds\n2,"));
}
