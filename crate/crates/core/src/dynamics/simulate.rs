use std::io::{self, Write};

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::{
    equilibrium, hebbian_update, whole_steps, x_max_bound, DynamicsError, InputSignal, NetworkParams, NetworkState,
};
use crate::graph::SignedGraph;

/// Weights in force from `t` until the next snapshot.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightSnapshot {
    pub t: f64,
    pub weights: DMatrix<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    /// Left the invariant box after having been inside it.
    StateBound,
    /// `|x|_inf` grew while still outside the box.
    Attractivity,
    WeightBound,
    ZeroPattern,
    Symmetry,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub t: f64,
    pub value: f64,
    pub limit: f64,
}

/// Where the reported `x_max` came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum XMaxSource {
    /// From the input's declared amplitudes.
    Declared,
    /// From the largest `|B u|_inf` seen along the run (feedback inputs).
    Observed,
    /// The boundedness condition fails; no invariant box exists.
    Unavailable,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonitorReport {
    pub x_max: Option<f64>,
    pub x_max_source: XMaxSource,
    pub bu_inf: f64,
    pub violations: Vec<Violation>,
    pub max_state_norm: f64,
    pub final_state_norm: f64,
    /// `|A(t_end) - A_eq|_inf` (max row sum).
    pub final_weight_gap: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    /// Input vector `u` evaluated at each sample.
    pub inputs: Vec<DVector<f64>>,
    pub snapshots: Vec<WeightSnapshot>,
    pub monitor: MonitorReport,
}

impl Trajectory {
    pub fn final_state(&self) -> &DVector<f64> {
        self.states.last().expect("at least one sample")
    }

    pub fn final_weights(&self) -> &DMatrix<f64> {
        &self.snapshots.last().expect("at least one snapshot").weights
    }

    pub fn max_state_norm(&self) -> f64 {
        self.monitor.max_state_norm
    }
}

/// Frozen-weight dynamics of one slot.
struct Slot<'a> {
    a: &'a DMatrix<f64>,
    c_n: f64,
    dt: f64,
    g: &'a SignedGraph,
    u: DVector<f64>,
    bu: DVector<f64>,
}

impl Slot<'_> {
    fn rhs(&mut self, input: &InputSignal, t: f64, step_start: f64, x: &DVector<f64>, out: &mut DVector<f64>) {
        input.evaluate(t, step_start, self.dt, x, &mut self.u);
        self.g.apply_input(&self.u, &mut self.bu);
        out.gemv(1.0, self.a, x, 0.0);
        out.axpy(-self.c_n, x, 1.0);
        *out += &self.bu;
    }

    /// Classical RK4 over `steps` steps; step `k` starts at `t0 + (first + k) dt`.
    fn advance(
        &mut self,
        input: &InputSignal,
        x: &mut DVector<f64>,
        t0: f64,
        first: usize,
        steps: usize,
        mut on_sample: impl FnMut(f64, &DVector<f64>, &DVector<f64>),
    ) {
        let n = x.len();
        let dt = self.dt;
        let (mut k1, mut k2, mut k3, mut k4) = (
            DVector::zeros(n),
            DVector::zeros(n),
            DVector::zeros(n),
            DVector::zeros(n),
        );
        let mut probe = DVector::zeros(n);
        for k in 0..steps {
            let t = t0 + (first + k) as f64 * dt;
            let mid = t0 + ((first + k) as f64 + 0.5) * dt;
            let end = t0 + (first + k + 1) as f64 * dt;
            self.rhs(input, t, t, x, &mut k1);
            probe.copy_from(x);
            probe.axpy(0.5 * dt, &k1, 1.0);
            self.rhs(input, mid, t, &probe, &mut k2);
            probe.copy_from(x);
            probe.axpy(0.5 * dt, &k2, 1.0);
            self.rhs(input, mid, t, &probe, &mut k3);
            probe.copy_from(x);
            probe.axpy(dt, &k3, 1.0);
            self.rhs(input, end, t, &probe, &mut k4);
            k2 += &k3;
            k1 += &k4;
            k1.axpy(2.0, &k2, 1.0);
            x.axpy(dt / 6.0, &k1, 1.0);

            input.evaluate(end, end, dt, x, &mut self.u);
            on_sample(end, x, &self.u);
        }
    }
}

fn check_shapes(state_len: usize, a: &DMatrix<f64>, g: &SignedGraph) -> Result<(), DynamicsError> {
    if state_len != g.n() {
        return Err(DynamicsError::DimensionMismatch {
            what: "state",
            expected: g.n(),
            got: state_len,
        });
    }
    if a.shape() != (g.n(), g.n()) {
        return Err(DynamicsError::DimensionMismatch {
            what: "weight matrix rows",
            expected: g.n(),
            got: a.nrows(),
        });
    }
    Ok(())
}

/// Advances `state.x` by `horizon` with the weights frozen, using
/// fixed-step RK4 with step `p.dt`. The returned state carries the same
/// weights and time `state.t + horizon`.
pub fn integrate_slot(
    state: &NetworkState,
    u: &InputSignal,
    p: &NetworkParams,
    g: &SignedGraph,
    horizon: f64,
) -> Result<NetworkState, DynamicsError> {
    p.validate()?;
    u.check(g)?;
    check_shapes(state.x.len(), &state.a, g)?;
    if horizon > p.tau * (1.0 + 1e-9) {
        return Err(DynamicsError::HorizonTooLong { horizon, tau: p.tau });
    }
    let steps = whole_steps(horizon, p.dt).ok_or(DynamicsError::StepMismatch { horizon, dt: p.dt })?;
    let mut slot = Slot {
        a: &state.a,
        c_n: p.c_n,
        dt: p.dt,
        g,
        u: DVector::zeros(u.channels()),
        bu: DVector::zeros(g.n()),
    };
    let mut x = state.x.clone();
    slot.advance(u, &mut x, state.t, 0, steps, |_, _, _| {});
    Ok(NetworkState::new(state.t + steps as f64 * p.dt, x, state.a.clone()))
}

/// Runs the coupled model from `x0` and the graph's initial weights.
pub fn simulate(
    g: &SignedGraph,
    p: &NetworkParams,
    u: &InputSignal,
    x0: &DVector<f64>,
    t_end: f64,
) -> Result<Trajectory, DynamicsError> {
    simulate_with_weights(g, p, u, x0, &g.initial_weights(), t_end)
}

/// Runs the coupled model from `(x0, a0)` over `[0, t_end]`.
///
/// Each slot integrates with frozen weights; at every boundary `p tau` the
/// weights are updated from the state at that instant and held for the
/// next slot. A trailing partial slot, if `t_end` is not a multiple of
/// `tau`, is integrated without a final update. Feedback laws that ask
/// for it get their gains refreshed after each update.
pub fn simulate_with_weights(
    g: &SignedGraph,
    p: &NetworkParams,
    u: &InputSignal,
    x0: &DVector<f64>,
    a0: &DMatrix<f64>,
    t_end: f64,
) -> Result<Trajectory, DynamicsError> {
    p.validate()?;
    u.check(g)?;
    check_shapes(x0.len(), a0, g)?;
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(DynamicsError::BadParams(format!("t_end must be positive, got {t_end}")));
    }
    let total_steps = whole_steps(t_end, p.dt).ok_or(DynamicsError::StepMismatch {
        horizon: t_end,
        dt: p.dt,
    })?;
    let per_slot = p.steps_per_slot();

    let mut input = u.clone();
    let mut x = x0.clone();
    let mut a = a0.clone();
    let mut times = Vec::with_capacity(total_steps + 1);
    let mut states = Vec::with_capacity(total_steps + 1);
    let mut inputs = Vec::with_capacity(total_steps + 1);
    let mut u0 = DVector::zeros(input.channels());
    input.evaluate(0.0, 0.0, p.dt, &x, &mut u0);
    times.push(0.0);
    states.push(x.clone());
    inputs.push(u0);
    let mut snapshots = vec![WeightSnapshot {
        t: 0.0,
        weights: a.clone(),
    }];

    let mut done = 0;
    while done < total_steps {
        let steps = per_slot.min(total_steps - done);
        {
            let mut slot = Slot {
                a: &a,
                c_n: p.c_n,
                dt: p.dt,
                g,
                u: DVector::zeros(input.channels()),
                bu: DVector::zeros(g.n()),
            };
            slot.advance(&input, &mut x, 0.0, done, steps, |t, x, u| {
                times.push(t);
                states.push(x.clone());
                inputs.push(u.clone());
            });
        }
        done += steps;
        if steps == per_slot {
            let t = done as f64 * p.dt;
            a = hebbian_update(&NetworkState::new(t, x.clone(), a), g, p);
            snapshots.push(WeightSnapshot { t, weights: a.clone() });
            if let InputSignal::Feedback(law) = &mut input {
                if law.recompute_each_slot {
                    law.refresh(g, p.c_n, &a)?;
                }
            }
        }
    }

    let monitor = monitor(g, p, u, &times, &states, &inputs, &snapshots);
    Ok(Trajectory {
        times,
        states,
        inputs,
        snapshots,
        monitor,
    })
}

fn inf_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Max row sum of absolute values.
pub(crate) fn matrix_inf_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn monitor(
    g: &SignedGraph,
    p: &NetworkParams,
    u: &InputSignal,
    times: &[f64],
    states: &[DVector<f64>],
    inputs: &[DVector<f64>],
    snapshots: &[WeightSnapshot],
) -> MonitorReport {
    let (bu_inf, source) = match u.declared_bu_inf(g) {
        Some(v) => (v, XMaxSource::Declared),
        None => {
            let mut bu = DVector::zeros(g.n());
            let mut sup: f64 = 0.0;
            for uk in inputs {
                g.apply_input(uk, &mut bu);
                sup = sup.max(inf_norm(&bu));
            }
            (sup, XMaxSource::Observed)
        }
    };
    let x_max = x_max_bound(g, p, bu_inf).ok();
    let source = if x_max.is_some() {
        source
    } else {
        XMaxSource::Unavailable
    };

    let mut violations = Vec::new();
    let norms: Vec<f64> = states.iter().map(inf_norm).collect();
    if let Some(limit) = x_max {
        let allowed = limit * (1.0 + 1e-9) + 1e-12;
        let mut inside = false;
        let mut prev: Option<f64> = None;
        for (&t, &norm) in times.iter().zip(&norms) {
            if inside {
                if norm > allowed {
                    violations.push(Violation {
                        kind: ViolationKind::StateBound,
                        t,
                        value: norm,
                        limit,
                    });
                }
            } else if norm <= allowed {
                inside = true;
            } else if prev.is_some_and(|q| norm > q + 1e-9) {
                violations.push(Violation {
                    kind: ViolationKind::Attractivity,
                    t,
                    value: norm,
                    limit: prev.unwrap_or(norm),
                });
            }
            prev = Some(norm);
        }
    }

    for snap in snapshots {
        let a = &snap.weights;
        let asym = matrix_inf_norm(&(a - a.transpose()));
        if asym > 1e-12 {
            violations.push(Violation {
                kind: ViolationKind::Symmetry,
                t: snap.t,
                value: asym,
                limit: 1e-12,
            });
        }
        let mut pattern = DMatrix::from_element(g.n(), g.n(), true);
        for e in g.edges() {
            let w = a[(e.i - 1, e.j - 1)];
            pattern[(e.i - 1, e.j - 1)] = false;
            pattern[(e.j - 1, e.i - 1)] = false;
            if !p.bounds.contains(e.sign, w) {
                let (lo, hi) = p.bounds.interval(e.sign);
                violations.push(Violation {
                    kind: ViolationKind::WeightBound,
                    t: snap.t,
                    value: w,
                    limit: if w < lo { lo } else { hi },
                });
            }
        }
        let stray = a
            .iter()
            .zip(pattern.iter())
            .filter(|(_, &off)| off)
            .map(|(v, _)| v.abs())
            .fold(0.0, f64::max);
        if stray != 0.0 {
            violations.push(Violation {
                kind: ViolationKind::ZeroPattern,
                t: snap.t,
                value: stray,
                limit: 0.0,
            });
        }
    }

    let (_, a_eq) = equilibrium(g, &p.bounds);
    let last = &snapshots.last().expect("initial snapshot").weights;
    MonitorReport {
        x_max,
        x_max_source: source,
        bu_inf,
        violations,
        max_state_norm: norms.iter().copied().fold(0.0, f64::max),
        final_state_norm: *norms.last().expect("initial sample"),
        final_weight_gap: matrix_inf_norm(&(last - a_eq)),
    }
}

fn sig17(v: f64) -> String {
    format!("{v:.16e}")
}

/// `t,x_1,...,x_N`, one row per sample, 17 significant digits.
pub fn write_trajectory_csv(traj: &Trajectory, mut out: impl Write) -> io::Result<()> {
    let n = traj.states.first().map_or(0, |x| x.len());
    let header: Vec<String> = std::iter::once("t".to_string())
        .chain((1..=n).map(|k| format!("x_{k}")))
        .collect();
    writeln!(out, "{}", header.join(","))?;
    for (t, x) in traj.times.iter().zip(&traj.states) {
        let row: Vec<String> = std::iter::once(sig17(*t)).chain(x.iter().map(|v| sig17(*v))).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// `t,w_i_j,...` in canonical edge order, one row per weight snapshot.
pub fn write_weights_csv(traj: &Trajectory, g: &SignedGraph, mut out: impl Write) -> io::Result<()> {
    let header: Vec<String> = std::iter::once("t".to_string())
        .chain(g.edges().iter().map(|e| format!("w_{}_{}", e.i, e.j)))
        .collect();
    writeln!(out, "{}", header.join(","))?;
    for snap in &traj.snapshots {
        let row: Vec<String> = std::iter::once(sig17(snap.t))
            .chain(g.edge_values(&snap.weights).into_iter().map(sig17))
            .collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}
