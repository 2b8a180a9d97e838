//! End-to-end runs of the binary: exit codes, outputs, determinism.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn scenarios() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_neurocactus"))
        .args(args)
        .env("NEUROCACTUS_LOG", "error")
        .output()
        .expect("binary runs")
}

fn path(p: &std::path::Path) -> &str {
    p.to_str().expect("utf-8 path")
}

fn summary(out: &Output) -> serde_json::Value {
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    assert_eq!(text.lines().count(), 1, "one summary line: {text}");
    serde_json::from_str(text.trim()).unwrap()
}

#[test]
fn simulate_impulse_succeeds_and_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "simulate",
        "--scenario",
        path(&scenarios().join("impulse14.json")),
        "--out",
        path(dir.path()),
        "--plot",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let s = summary(&out);
    assert_eq!(s["passed"], true);
    assert_eq!(s["scenario"], "impulse14");
    for name in [
        "trajectory.csv",
        "weights.csv",
        "report.json",
        "state.svg",
        "weights.svg",
    ] {
        assert!(dir.path().join(name).is_file(), "{name}");
    }
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let scenario = scenarios().join("sinusoid14.json");
    let first = run(&["simulate", "--scenario", path(&scenario), "--out", path(a.path())]);
    let second = run(&["simulate", "--scenario", path(&scenario), "--out", path(b.path())]);
    assert_eq!(first.status.code(), Some(0));
    assert_eq!(second.status.code(), Some(0));
    for name in ["trajectory.csv", "weights.csv", "report.json"] {
        assert_eq!(
            fs::read(a.path().join(name)).unwrap(),
            fs::read(b.path().join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn boundary_scenario_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "simulate",
        "--scenario",
        path(&scenarios().join("boundary.json")),
        "--out",
        path(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let s = summary(&out);
    assert_eq!(s["passed"], false);
    assert_eq!(s["failed"], "boundedness_condition");
}

#[test]
fn validate_accepts_the_example() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "validate",
        "--graph",
        path(&scenarios().join("example5.graph.json")),
        "--decomposition",
        path(&scenarios().join("example5.decomposition.json")),
        "--out",
        path(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(summary(&out)["verdict"], "accept");
    assert!(dir.path().join("verdict.json").is_file());
}

#[test]
fn validate_rejects_a_mismatched_certificate() {
    let out = run(&[
        "validate",
        "--graph",
        path(&scenarios().join("net14.graph.json")),
        "--decomposition",
        path(&scenarios().join("example5.decomposition.json")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(summary(&out)["verdict"], "reject");
}

#[test]
fn controllability_reports_full_rank() {
    let out = run(&[
        "controllability",
        "--graph",
        path(&scenarios().join("net14.graph.json")),
        "--samples",
        "50",
        "--seed",
        "3",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let s = summary(&out);
    assert_eq!(s["controllable"], true, "{s}");
}

#[test]
fn csv_format_prints_values_only() {
    let out = run(&["version", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert!(!text.contains('{'));
    assert!(text.contains(env!("CARGO_PKG_VERSION")));
}

#[test]
fn generate_round_trips_through_validate() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "generate",
        "--nodes",
        "12",
        "--roots",
        "1,5",
        "--seed",
        "4",
        "--name",
        "g",
        "--out",
        path(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let check = run(&[
        "validate",
        "--graph",
        path(&dir.path().join("g.graph.json")),
        "--decomposition",
        path(&dir.path().join("g.decomposition.json")),
    ]);
    assert_eq!(check.status.code(), Some(0));
}

#[test]
fn input_errors_exit_two() {
    let missing = run(&["simulate", "--scenario", "/nonexistent/scenario.json"]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("error"));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(
        &bad,
        r#"{"schema": 1, "name": "x", "graph": "nope.graph.json", "x0": 0, "t_end": 1}"#,
    )
    .unwrap();
    let dangling = run(&["simulate", "--scenario", path(&bad)]);
    assert_eq!(dangling.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&dangling.stderr).contains("/graph"));

    let unknown = run(&["simulate", "--no-such-flag"]);
    assert_eq!(unknown.status.code(), Some(2));
}
