//! Declarative experiments.
//!
//! A scenario file binds a graph, parameters, inputs and an initial state
//! to a list of named checks. Graph paths resolve against the directory of
//! the scenario file.
//!
//! ```json
//! {
//!   "schema": 1,
//!   "name": "impulse14",
//!   "graph": "net14.graph.json",
//!   "params": {"c_n": 4.1, "tau": 0.2},
//!   "inputs": [{"node": 1, "kind": "impulse", "amplitude": 2}],
//!   "x0": 1.0,
//!   "t_end": 40,
//!   "expectations": [{"check": "state_bound"}, {"check": "convergence"}]
//! }
//! ```

mod plot;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::control::{
    boundedness_condition, controllability_rank, lqr_regulate, stability_certificate, structural_controllability_test,
    LqrDesign, TolerancePolicy,
};
use crate::dynamics::{
    equilibrium, simulate, write_trajectory_csv, write_weights_csv, x_max_bound, Activation, InputSignal,
    MonitorReport, NetworkParams, Trajectory, ViolationKind, Waveform,
};
use crate::error::{from_json_str, from_json_value, Error, Result};
use crate::graph::{canonical_json, GraphDocument, NodeId, SignedGraph, WeightBounds};

pub use plot::{state_svg, weights_svg};

pub const SCHEMA_VERSION: u32 = 1;

/// A fully resolved experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub description: Option<String>,
    pub graph: SignedGraph,
    pub params: NetworkParams,
    /// Open-loop waveform per control node, in the graph's control order.
    pub inputs: Vec<Waveform>,
    pub x0: DVector<f64>,
    pub t_end: f64,
    pub lqr: Option<LqrSpec>,
    pub expectations: Vec<Expectation>,
    /// Box radius quoted from elsewhere, reported next to the computed one.
    pub reference_x_max: Option<f64>,
    /// Seed for sampled checks.
    pub seed: u64,
}

/// Feedback regulation replacing the open-loop inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct LqrSpec {
    pub target: DVector<f64>,
    pub recompute_each_slot: bool,
}

/// Named check evaluated after a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case", deny_unknown_fields)]
pub enum Expectation {
    /// `|x(t)|_inf <= max(x_max, |x0|_inf)` at every sample, and the box is
    /// never left once entered.
    StateBound,
    /// `|x(t_end)|_inf < state_tol` and every weight within `weight_tol` of
    /// its resting bound.
    Convergence {
        #[serde(default = "default_state_tol")]
        state_tol: f64,
        #[serde(default = "default_weight_tol")]
        weight_tol: f64,
    },
    /// `(H_p, B)` full rank at the initial weights and every update.
    RankPersistence,
    /// Random admissible weights are full rank often enough.
    StructuralControllability {
        #[serde(default = "default_samples")]
        samples: usize,
        #[serde(default = "default_min_fraction")]
        min_fraction: f64,
    },
    BoundednessCondition,
    /// Diagonal dominance and Hurwitz `H_p` at every update.
    Stability,
    /// Steady-state gap to the LQR target. Reported, never failed.
    Target,
    /// The run's monitors recorded nothing.
    NoViolations,
}

fn default_state_tol() -> f64 {
    1e-3
}
fn default_weight_tol() -> f64 {
    1e-2
}
fn default_samples() -> usize {
    100
}
fn default_min_fraction() -> f64 {
    0.99
}

impl Expectation {
    pub fn name(&self) -> &'static str {
        match self {
            Expectation::StateBound => "state_bound",
            Expectation::Convergence { .. } => "convergence",
            Expectation::RankPersistence => "rank_persistence",
            Expectation::StructuralControllability { .. } => "structural_controllability",
            Expectation::BoundednessCondition => "boundedness_condition",
            Expectation::Stability => "stability",
            Expectation::Target => "target",
            Expectation::NoViolations => "no_violations",
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDocument {
    schema: u32,
    name: String,
    #[serde(default)]
    description: Option<String>,
    graph: Value,
    #[serde(default)]
    params: ParamsDocument,
    #[serde(default)]
    inputs: Vec<InputDocument>,
    x0: InitialState,
    t_end: f64,
    #[serde(default)]
    lqr: Option<LqrDocument>,
    #[serde(default)]
    expectations: Vec<Expectation>,
    #[serde(default)]
    reference_x_max: Option<f64>,
    #[serde(default)]
    seed: u64,
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamsDocument {
    c_n: Option<f64>,
    c_a_plus: Option<f64>,
    c_a_minus: Option<f64>,
    tau: Option<f64>,
    /// Defaults to `tau / 20`.
    dt: Option<f64>,
    bounds: Option<WeightBounds>,
    activation: Option<Activation>,
}

#[derive(Deserialize)]
struct InputDocument {
    node: NodeId,
    #[serde(flatten)]
    waveform: Waveform,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum InitialState {
    Fill(f64),
    Values(Vec<f64>),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LqrDocument {
    target: Value,
    #[serde(default = "default_recompute")]
    recompute_each_slot: bool,
}

fn default_recompute() -> bool {
    true
}

/// Target state: a full vector, or a map from node id to value with the
/// remaining nodes at zero.
#[derive(Deserialize)]
#[serde(untagged)]
enum TargetDocument {
    Values(Vec<f64>),
    Sparse(BTreeMap<String, f64>),
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    scenario_from_json(&text, path.parent())
}

/// Parses a scenario; relative graph paths resolve against `base`.
pub fn scenario_from_json(text: &str, base: Option<&Path>) -> Result<Scenario> {
    if text.trim().is_empty() {
        return Err(Error::schema("", "empty document"));
    }
    let doc: ScenarioDocument = from_json_str(text)?;
    if doc.schema != SCHEMA_VERSION {
        return Err(Error::schema(
            "/schema",
            format!("unsupported schema {}, expected {SCHEMA_VERSION}", doc.schema),
        ));
    }
    let params = resolve_params(doc.params)?;
    let graph = resolve_graph(doc.graph, base, &params.bounds)?;
    let n = graph.n();

    if !(doc.t_end > 0.0 && doc.t_end.is_finite()) {
        return Err(Error::schema("/t_end", "t_end must be positive"));
    }
    let slots = doc.t_end / params.tau;
    if (slots - slots.round()).abs() > 1e-9 * slots.max(1.0) {
        return Err(Error::schema(
            "/t_end",
            format!("t_end = {} is not a multiple of tau = {}", doc.t_end, params.tau),
        ));
    }

    let x0 = match doc.x0 {
        InitialState::Fill(v) => DVector::from_element(n, v),
        InitialState::Values(v) if v.len() == n => DVector::from_vec(v),
        InitialState::Values(v) => {
            return Err(Error::schema("/x0", format!("expected {n} values, got {}", v.len())));
        }
    };
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::schema("/x0", "non-finite entry"));
    }

    let mut inputs = vec![Waveform::Zero; graph.control_nodes().len()];
    let mut seen = vec![false; inputs.len()];
    for (k, input) in doc.inputs.into_iter().enumerate() {
        let pointer = format!("/inputs/{k}/node");
        let slot = graph
            .control_nodes()
            .iter()
            .position(|c| c.node == input.node)
            .ok_or_else(|| Error::DanglingReference {
                pointer: pointer.clone(),
                message: format!("node {} is not a control node", input.node),
            })?;
        if std::mem::replace(&mut seen[slot], true) {
            return Err(Error::schema(pointer, format!("node {} has two inputs", input.node)));
        }
        inputs[slot] = input.waveform;
    }

    let lqr = match doc.lqr {
        None => None,
        Some(l) => {
            if seen.iter().any(|&s| s) {
                return Err(Error::schema("/lqr", "lqr and open-loop inputs are exclusive"));
            }
            Some(LqrSpec {
                target: target_from_value(l.target, n, "/lqr/target")?,
                recompute_each_slot: l.recompute_each_slot,
            })
        }
    };

    for (k, e) in doc.expectations.iter().enumerate() {
        let bad = |msg: &str| Err(Error::schema(format!("/expectations/{k}"), msg));
        match *e {
            Expectation::Target if lqr.is_none() => return bad("target check needs an lqr block"),
            Expectation::Convergence { state_tol, weight_tol } if !(state_tol > 0.0 && weight_tol > 0.0) => {
                return bad("tolerances must be positive");
            }
            Expectation::StructuralControllability { samples, min_fraction }
                if samples == 0 || !(0.0..=1.0).contains(&min_fraction) =>
            {
                return bad("need samples >= 1 and min_fraction in [0, 1]");
            }
            _ => {}
        }
    }

    Ok(Scenario {
        name: doc.name,
        description: doc.description,
        graph,
        params,
        inputs,
        x0,
        t_end: doc.t_end,
        lqr,
        expectations: doc.expectations,
        reference_x_max: doc.reference_x_max,
        seed: doc.seed,
    })
}

/// Reads a target file (a vector or a sparse node map) for an `n`-node graph.
pub fn load_target(path: impl AsRef<Path>, n: usize) -> Result<DVector<f64>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if text.trim().is_empty() {
        return Err(Error::schema("", "empty document"));
    }
    let value: Value = from_json_str(&text)?;
    target_from_value(value, n, "")
}

fn target_from_value(value: Value, n: usize, pointer: &str) -> Result<DVector<f64>> {
    match from_json_value::<TargetDocument>(value, pointer)? {
        TargetDocument::Values(v) if v.len() == n => Ok(DVector::from_vec(v)),
        TargetDocument::Values(v) => Err(Error::schema(pointer, format!("expected {n} values, got {}", v.len()))),
        TargetDocument::Sparse(map) => {
            let mut t = DVector::zeros(n);
            for (key, v) in map {
                let node = key
                    .parse::<NodeId>()
                    .ok()
                    .filter(|&k| (1..=n).contains(&k))
                    .ok_or_else(|| Error::DanglingReference {
                        pointer: format!("{pointer}/{key}"),
                        message: format!("no node {key:?} in a graph of {n}"),
                    })?;
                t[node - 1] = v;
            }
            Ok(t)
        }
    }
}

fn resolve_params(doc: ParamsDocument) -> Result<NetworkParams> {
    let d = NetworkParams::default();
    let tau = doc.tau.unwrap_or(d.tau);
    let p = NetworkParams {
        c_n: doc.c_n.unwrap_or(d.c_n),
        c_a_plus: doc.c_a_plus.unwrap_or(d.c_a_plus),
        c_a_minus: doc.c_a_minus.unwrap_or(d.c_a_minus),
        tau,
        dt: doc.dt.unwrap_or(tau / 20.0),
        bounds: doc.bounds.unwrap_or(d.bounds),
        activation: doc.activation.unwrap_or(d.activation),
    };
    p.validate().map_err(|e| Error::schema("/params", e.to_string()))?;
    Ok(p)
}

fn resolve_graph(value: Value, base: Option<&Path>, bounds: &WeightBounds) -> Result<SignedGraph> {
    match value {
        Value::String(rel) => {
            let path = base.map_or_else(|| PathBuf::from(&rel), |b| b.join(&rel));
            if !path.is_file() {
                return Err(Error::DanglingReference {
                    pointer: "/graph".into(),
                    message: format!("graph file {} not found", path.display()),
                });
            }
            crate::graph::load_graph(&path, Some(bounds))
        }
        Value::Object(_) => from_json_value::<GraphDocument>(value, "/graph")?.into_graph(Some(bounds)),
        _ => Err(Error::schema("/graph", "expected a file path or an inline graph")),
    }
}

/// Outcome of one expectation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub check: String,
    pub passed: bool,
    /// False for report-only checks, which never fail a run.
    pub enforced: bool,
    pub measured: f64,
    pub limit: Option<f64>,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScenarioReport {
    pub name: String,
    pub passed: bool,
    pub checks: Vec<CheckResult>,
    pub monitor: MonitorReport,
    /// Box radius from the declared input amplitudes, when defined.
    pub x_max_formula: Option<f64>,
    pub reference_x_max: Option<f64>,
    pub lqr: Option<LqrDesign>,
    pub final_state: Vec<f64>,
    pub t_end: f64,
    pub samples: usize,
}

#[derive(Clone, Debug)]
pub struct ScenarioRun {
    pub trajectory: Trajectory,
    pub report: ScenarioReport,
}

/// Simulates the scenario, with LQR feedback when it declares a target,
/// and evaluates every expectation.
pub fn run_scenario(s: &Scenario) -> Result<ScenarioRun> {
    let g = &s.graph;
    let p = &s.params;
    let (input, design) = match &s.lqr {
        Some(l) => {
            let (input, design) = lqr_regulate(g, p, &l.target, l.recompute_each_slot)?;
            (input, Some(design))
        }
        None => (InputSignal::OpenLoop(s.inputs.clone()), None),
    };
    let traj = simulate(g, p, &input, &s.x0, s.t_end)?;
    let x_max_formula = input.declared_bu_inf(g).and_then(|bu| x_max_bound(g, p, bu).ok());
    let checks = s
        .expectations
        .iter()
        .map(|e| evaluate(e, s, &traj))
        .collect::<Result<Vec<_>>>()?;
    let report = ScenarioReport {
        name: s.name.clone(),
        passed: checks.iter().all(|c| c.passed || !c.enforced),
        checks,
        monitor: traj.monitor.clone(),
        x_max_formula,
        reference_x_max: s.reference_x_max,
        lqr: design,
        final_state: traj.final_state().iter().copied().collect(),
        t_end: s.t_end,
        samples: traj.times.len(),
    };
    Ok(ScenarioRun {
        trajectory: traj,
        report,
    })
}

fn evaluate(e: &Expectation, s: &Scenario, traj: &Trajectory) -> Result<CheckResult> {
    let g = &s.graph;
    let p = &s.params;
    let m = &traj.monitor;
    let result = |passed: bool, measured: f64, limit: Option<f64>, detail: String| CheckResult {
        check: e.name().to_string(),
        passed,
        enforced: !matches!(e, Expectation::Target),
        measured,
        limit,
        detail,
    };
    Ok(match *e {
        Expectation::StateBound => match m.x_max {
            Some(x_max) => {
                // a start outside the box may only shrink towards it
                let limit = x_max.max(s.x0.amax());
                let box_kept = !m
                    .violations
                    .iter()
                    .any(|v| matches!(v.kind, ViolationKind::StateBound | ViolationKind::Attractivity));
                result(
                    m.max_state_norm <= limit * (1.0 + 1e-9) && box_kept,
                    m.max_state_norm,
                    Some(limit),
                    format!(
                        "sup |x|_inf = {:.6} against max(x_max, |x0|_inf) = {limit:.6}, x_max = {x_max:.6}",
                        m.max_state_norm
                    ),
                )
            }
            None => result(
                false,
                m.max_state_norm,
                None,
                "boundedness condition fails; no x_max".into(),
            ),
        },
        Expectation::Convergence { state_tol, weight_tol } => {
            let (_, a_eq) = equilibrium(g, &p.bounds);
            let a = traj.final_weights();
            let weight_gap = g
                .edges()
                .iter()
                .map(|ed| (a[(ed.i - 1, ed.j - 1)] - a_eq[(ed.i - 1, ed.j - 1)]).abs())
                .fold(0.0, f64::max);
            let x_gap = m.final_state_norm;
            result(
                x_gap < state_tol && weight_gap <= weight_tol,
                x_gap,
                Some(state_tol),
                format!("|x(t_end)|_inf = {x_gap:.3e} (< {state_tol:e}), max weight gap {weight_gap:.3e} (<= {weight_tol:e})"),
            )
        }
        Expectation::RankPersistence => {
            let b = g.input_matrix();
            let mut min_rank = g.n();
            let mut first_loss = None;
            for snap in &traj.snapshots {
                let r = controllability_rank(&p.state_matrix(&snap.weights), &b, TolerancePolicy::Spectral)?;
                if r.rank < min_rank {
                    min_rank = r.rank;
                    first_loss.get_or_insert(snap.t);
                }
            }
            let detail = match first_loss {
                None => format!("full rank {} at all {} weight snapshots", g.n(), traj.snapshots.len()),
                Some(t) => format!("rank drops to {min_rank} first at t = {t}"),
            };
            result(min_rank == g.n(), min_rank as f64, Some(g.n() as f64), detail)
        }
        Expectation::StructuralControllability { samples, min_fraction } => {
            let r = structural_controllability_test(g, p, samples, s.seed)?;
            let frac = r.sample_fraction_full_rank.unwrap_or(0.0);
            result(
                r.controllable && frac >= min_fraction,
                frac,
                Some(min_fraction),
                format!("{frac:.3} of {samples} draws full rank (seed {})", s.seed),
            )
        }
        Expectation::BoundednessCondition => {
            let (holds, slack) = boundedness_condition(g, p);
            result(
                holds,
                slack,
                Some(0.0),
                format!("slack c_n - coupling bound = {slack:.6}"),
            )
        }
        Expectation::Stability => {
            let mut worst = f64::NEG_INFINITY;
            let mut ok = true;
            for snap in &traj.snapshots {
                let c = stability_certificate(&snap.weights, p.c_n);
                ok &= c.diagonally_dominant && c.hurwitz;
                worst = worst.max(c.max_real_eigenvalue);
            }
            result(
                ok,
                worst,
                Some(0.0),
                format!("largest eigenvalue over all slots {worst:.6}"),
            )
        }
        Expectation::Target => {
            let target = &s.lqr.as_ref().expect("validated at load").target;
            let gap = (traj.final_state() - target).amax();
            result(
                true,
                gap,
                None,
                format!("steady-state gap |x(t_end) - target|_inf = {gap:.6}"),
            )
        }
        Expectation::NoViolations => result(
            m.violations.is_empty(),
            m.violations.len() as f64,
            Some(0.0),
            match m.violations.first() {
                None => "no monitor violations".into(),
                Some(v) => format!("{} violations, first {:?} at t = {}", m.violations.len(), v.kind, v.t),
            },
        ),
    })
}

/// Writes `trajectory.csv`, `weights.csv`, `report.json` and, with `plot`,
/// `state.svg` and `weights.svg` into `dir`. Returns the written paths.
pub fn write_outputs(run: &ScenarioRun, s: &Scenario, dir: impl AsRef<Path>, plot: bool) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let mut put = |name: &str, bytes: Vec<u8>| -> Result<()> {
        let path = dir.join(name);
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        written.push(path);
        Ok(())
    };
    let mut buf = Vec::new();
    write_trajectory_csv(&run.trajectory, &mut buf).expect("write to memory");
    put("trajectory.csv", buf)?;
    let mut buf = Vec::new();
    write_weights_csv(&run.trajectory, &s.graph, &mut buf).expect("write to memory");
    put("weights.csv", buf)?;
    put("report.json", canonical_json(&run.report).into_bytes())?;
    if plot {
        put(
            "state.svg",
            state_svg(&run.trajectory, run.report.monitor.x_max).into_bytes(),
        )?;
        put(
            "weights.svg",
            weights_svg(&run.trajectory, &s.graph, &s.params.bounds).into_bytes(),
        )?;
    }
    Ok(written)
}
