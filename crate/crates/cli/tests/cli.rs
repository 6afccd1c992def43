use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_heisenwave")).args(args).output().expect("spawn")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json_of(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("json on stdout")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn no_arguments_print_usage_and_exit_2() {
    let o = run(&[]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}

#[test]
fn admissible_endpoint_example() {
    let o = run(&["admissible", "--N", "4", "--p", "7", "--r", "14/3"]);
    assert_eq!(code(&o), 0);
    let v = json_of(&o);
    assert_eq!(v["results"][0]["admissible"], Value::Bool(true));
    assert_eq!(v["results"][0]["on_kohn_segment"], Value::Bool(true));
    assert!(v["config_hash"].as_str().unwrap().len() == 64);
}

#[test]
fn malformed_input_exits_2() {
    assert_eq!(code(&run(&["admissible", "--N", "5", "--p", "7", "--r", "2"])), 2);
    assert_eq!(code(&run(&["admissible", "--N", "4", "--p", "7.5", "--r", "2"])), 2);
    assert_eq!(code(&run(&["propagate", "--j", "7", "--t", "1"])), 2);
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"unknown": 1}"#).unwrap();
    let o = run(&["--config", path(&cfg), "admissible", "--N", "4", "--p", "7", "--r", "14/3"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("[admissible]"));
}

#[test]
fn kernel_then_besov_is_comparable_to_l2() {
    let dir = tempfile::tempdir().unwrap();
    let k = dir.path().join("k.json");
    let o = run(&["kernel", "--tag", "full", "--j", "0", "--modes", "1", "--out", path(&k)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let o = run(&["besov", "--input", path(&k), "--rho", "0", "--q", "2", "--r", "2"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let ratio = json_of(&o)["results"][0]["ratio_to_l2"].as_f64().unwrap();
    assert!((0.5..=2.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn json_output_is_reproducible() {
    let args = ["--seed", "3", "strichartz", "--p", "inf", "--r", "2", "--rho", "0", "--t-window", "1"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let c = run(&["--seed", "4", "strichartz", "--p", "inf", "--r", "2", "--rho", "0", "--t-window", "1"]);
    assert_ne!(json_of(&a)["config_hash"], json_of(&c)["config_hash"]);
}

#[test]
fn csv_has_header() {
    let o = run(&["--format", "csv", "strichartz", "--p", "inf", "--r", "2", "--rho", "0", "--t-window", "1"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("claim_id,expected_lo,expected_hi,observed,pass,runtime"));
    assert!(lines.next().unwrap().starts_with("strichartz.growth,"));
}

#[test]
fn report_merges_verdicts_and_sets_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.json");
    let bad = dir.path().join("bad.json");
    let cfg = dir.path().join("strict.json");
    let base = ["strichartz", "--p", "inf", "--r", "2", "--rho", "0", "--t-window", "1"];
    let o = run(&[&["--out", path(&good)][..], &base[..]].concat());
    assert_eq!(code(&o), 0);
    // An interval that excludes the observed growth turns the verdict into a failure.
    std::fs::write(&cfg, r#"{"tolerances": {"strichartz.growth": [1, 2]}}"#).unwrap();
    let o = run(&[&["--config", path(&cfg), "--out", path(&bad)][..], &base[..]].concat());
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("FAIL strichartz.growth"));

    let o = run(&["report", path(&good)]);
    assert_eq!(code(&o), 0);
    let o = run(&["report", path(&good), path(&bad)]);
    assert_eq!(code(&o), 1);
    let v = json_of(&o);
    assert_eq!(v["results"][0]["total"], 2);
    assert_eq!(v["results"][0]["passed"], 1);
    assert_eq!(code(&run(&["report", path(&dir.path().join("missing.json"))])), 2);
}
