//! The bundled scenarios and graphs under `scenarios/`.

mod common;

use std::fs;

use neurocactus::control::{controllability_rank, TolerancePolicy};
use neurocactus::dynamics::NetworkParams;
use neurocactus::graph::{load_decomposition, load_graph, validate_generalized};
use neurocactus::scenario::{load_scenario, run_scenario, write_outputs};

use common::scenarios_dir;

fn check(report: &neurocactus::scenario::ScenarioReport, name: &str) -> bool {
    report
        .checks
        .iter()
        .find(|c| c.check == name)
        .unwrap_or_else(|| panic!("no {name} check"))
        .passed
}

#[test]
fn bundled_graphs_carry_valid_certificates() {
    for stem in ["net14", "example5"] {
        let dir = scenarios_dir();
        let g = load_graph(dir.join(format!("{stem}.graph.json")), None).unwrap();
        let gd = load_decomposition(dir.join(format!("{stem}.decomposition.json"))).unwrap();
        assert!(validate_generalized(&g, &gd).is_accept(), "{stem}");
    }
}

#[test]
fn example5_is_full_rank() {
    let g = load_graph(scenarios_dir().join("example5.graph.json"), None).unwrap();
    let report = controllability_rank(&g.initial_weights(), &g.input_matrix(), TolerancePolicy::Spectral).unwrap();
    assert_eq!(report.rank, 5);
    // with the decay term as well
    let p = NetworkParams::default();
    let report = controllability_rank(
        &p.state_matrix(&g.initial_weights()),
        &g.input_matrix(),
        TolerancePolicy::Spectral,
    )
    .unwrap();
    assert_eq!(report.rank, 5);
}

#[test]
fn open_loop_scenarios_pass_every_check() {
    for name in ["impulse14", "sinusoid14"] {
        let s = load_scenario(scenarios_dir().join(format!("{name}.json"))).unwrap();
        let run = run_scenario(&s).unwrap();
        let failed: Vec<_> = run.report.checks.iter().filter(|c| !c.passed).collect();
        assert!(run.report.passed, "{name}: {failed:?}");
    }
}

#[test]
fn impulse_scenario_settles() {
    let s = load_scenario(scenarios_dir().join("impulse14.json")).unwrap();
    let run = run_scenario(&s).unwrap();
    let x_max = run.report.x_max_formula.unwrap();
    assert!((x_max - 20.0).abs() <= 16.0 * f64::EPSILON * 20.0);
    assert!(run.trajectory.final_state().amax() < 1e-3);
    assert!(run.trajectory.monitor.final_weight_gap < 1e-2);
    assert!(check(&run.report, "rank_persistence"));
}

#[test]
fn sinusoid_scenario_keeps_reference_radius() {
    let s = load_scenario(scenarios_dir().join("sinusoid14.json")).unwrap();
    let run = run_scenario(&s).unwrap();
    assert_eq!(run.report.reference_x_max, Some(10.0));
    assert!(run.report.monitor.max_state_norm <= 10.0);
    assert!((run.report.x_max_formula.unwrap() - 30.0).abs() < 1e-9);
}

#[test]
fn lqr_scenario_reports_target_gap_without_failing() {
    let s = load_scenario(scenarios_dir().join("lqr14.json")).unwrap();
    let run = run_scenario(&s).unwrap();
    assert!(run.report.passed, "{:?}", run.report.checks);
    let design = run.report.lqr.as_ref().unwrap();
    assert!(design.solution.care_residual <= 1e-8);
    assert!(design.solution.closed_loop_abscissa() < 0.0);
    let target = run.report.checks.iter().find(|c| c.check == "target").unwrap();
    assert!(!target.enforced);
}

#[test]
fn boundary_scenario_fails_boundedness() {
    let s = load_scenario(scenarios_dir().join("boundary.json")).unwrap();
    let run = run_scenario(&s).unwrap();
    assert!(!run.report.passed);
    assert!(!check(&run.report, "boundedness_condition"));
    assert_eq!(run.report.x_max_formula, None);
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let s = load_scenario(scenarios_dir().join("impulse14.json")).unwrap();
    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    let a = write_outputs(&run_scenario(&s).unwrap(), &s, first.path(), true).unwrap();
    let b = write_outputs(&run_scenario(&s).unwrap(), &s, second.path(), true).unwrap();
    assert_eq!(a.len(), 5);
    for (pa, pb) in a.iter().zip(&b) {
        assert_eq!(pa.file_name(), pb.file_name());
        assert_eq!(fs::read(pa).unwrap(), fs::read(pb).unwrap(), "{}", pa.display());
    }
    let csv = fs::read_to_string(first.path().join("trajectory.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 4001);
}
