use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_channel-phases"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn analyze_weyl_reports_wielandt_power_and_index() {
    let dir = tempfile::tempdir().unwrap();
    let w = dir.path().join("w.json");
    assert!(run(&["construct", "weyl", "--D", "2", "--r", "3", "--out", path_str(&w)]).status.success());
    let out = run(&["analyze", "--in", path_str(&w)]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["primitive"]["verdict"], true);
    assert_eq!(v["primitive"]["n_star"], 2);
    assert_eq!(v["multiplicity_index"], serde_json::json!([2]));
    assert_eq!(v["kraus_rank"], 3);
}

#[test]
fn shift_channel_analysis_reports_degree() {
    let dir = tempfile::tempdir().unwrap();
    let s = dir.path().join("s.json");
    let out = run(&["construct", "shift", "--dims", "2,1", "--r", "2", "--seed", "4", "--out", path_str(&s)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&run(&["analyze", "--in", path_str(&s)]));
    assert_eq!(v["degree"], 2);
    assert_eq!(v["primitive"]["verdict"], false);
    assert_eq!(v["irreducible"]["verdict"], true);
}

#[test]
fn kraus_rank_mismatch_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    run(&["construct", "weyl", "--D", "2", "--r", "3", "--out", path_str(&a)]);
    run(&["construct", "random", "--D", "2", "--r", "2", "--seed", "1", "--out", path_str(&b)]);
    let out = run(&["path", "--a", path_str(&a), "--b", path_str(&b)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Kraus rank mismatch"));
}

#[test]
fn malformed_input_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"dim\": 2, \"kraus\": [").unwrap();
    let out = run(&["analyze", "--in", path_str(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("parse error"));

    let out = run(&["construct", "weyl", "--D", "two"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn path_output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    run(&["construct", "random", "--D", "2", "--r", "2", "--seed", "1", "--out", path_str(&a)]);
    run(&["construct", "random", "--D", "2", "--r", "2", "--seed", "2", "--out", path_str(&b)]);
    let go = |name: &str| {
        let p = dir.path().join(name);
        let args = ["path", "--a", path_str(&a), "--b", path_str(&b), "--samples", "9", "--seed", "3", "--out", path_str(&p)];
        let out = run(&args);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        std::fs::read(&p).unwrap()
    };
    assert_eq!(go("p1.json"), go("p2.json"));
}

#[test]
fn construct_then_mps_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("flip.json");
    run(&["construct", "flip", "--out", path_str(&f)]);
    let out = run(&["mps", "--channel", path_str(&f), "--N", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    let amps = v["amplitudes"].as_array().unwrap();
    assert_eq!(amps.len(), 8);
    // odd rings carry no weight for a degree-2 channel
    assert!(amps.iter().all(|z| z[0].as_f64().unwrap().abs() < 1e-12 && z[1].as_f64().unwrap().abs() < 1e-12));
}

#[test]
fn selftest_passes() {
    let out = run(&["selftest"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
}
