//! Hybrid network dynamics.
//!
//! Within a slot of length `tau` the weights are frozen and the state obeys
//! the linear ODE `x' = -c_n x + A x + B u`. At every slot boundary the
//! weights take one clipped Hebbian step,
//! `a_ij <- clip(c_a * a_ij + phi(x_i x_j), lo, hi)`, with the clip
//! interval and retention factor chosen by the edge sign.

mod input;
mod simulate;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::control::ControlError;
use crate::graph::{Sign, SignedGraph, WeightBounds};

pub use input::{InputSignal, Waveform};
pub use simulate::{
    integrate_slot, simulate, simulate_with_weights, write_trajectory_csv, write_weights_csv, MonitorReport,
    Trajectory, Violation, ViolationKind, WeightSnapshot, XMaxSource,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("clip interval [{lo}, {hi}] is empty")]
    BadInterval { lo: f64, hi: f64 },
    #[error("{what}: expected length {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("horizon {horizon} is not a whole number of steps of {dt}")]
    StepMismatch { horizon: f64, dt: f64 },
    #[error("horizon {horizon} exceeds the weight update period {tau}")]
    HorizonTooLong { horizon: f64, tau: f64 },
    #[error("invalid parameters: {0}")]
    BadParams(String),
    #[error("boundedness condition fails: c_n = {c_n} <= d_max * max|a| = {rate}")]
    ConditionViolated { c_n: f64, rate: f64 },
    #[error("gain refresh failed: {0}")]
    Control(#[from] ControlError),
}

/// Odd, increasing activation with range `(-1, 1)` and `phi(0) = 0`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Tanh,
    /// `2 / (1 + exp(-gain * y)) - 1`.
    BipolarLogistic { gain: f64 },
}

impl Activation {
    pub fn apply(&self, y: f64) -> f64 {
        match *self {
            Activation::Tanh => y.tanh(),
            // equal to tanh(gain * y / 2), which avoids overflow in exp
            Activation::BipolarLogistic { gain } => (0.5 * gain * y).tanh(),
        }
    }
}

/// Default activation, the hyperbolic tangent.
pub fn phi(y: f64) -> f64 {
    Activation::Tanh.apply(y)
}

/// `hi` above the interval, `lo` below it, `y` otherwise.
pub fn clip(y: f64, lo: f64, hi: f64) -> Result<f64, DynamicsError> {
    if lo > hi || lo.is_nan() || hi.is_nan() {
        return Err(DynamicsError::BadInterval { lo, hi });
    }
    Ok(if y > hi {
        hi
    } else if y < lo {
        lo
    } else {
        y
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    /// Decay rate, per unit time.
    pub c_n: f64,
    /// Retention factor for excitatory weights, in (0, 1).
    pub c_a_plus: f64,
    /// Retention factor for inhibitory weights, in (0, 1).
    pub c_a_minus: f64,
    /// Weight update period.
    pub tau: f64,
    /// Integration step; must divide `tau`.
    pub dt: f64,
    pub bounds: WeightBounds,
    #[serde(default)]
    pub activation: Activation,
}

impl Default for NetworkParams {
    /// `c_n = 4.1`, `tau = 0.2`, `dt = tau / 20`, default bounds, tanh.
    /// The retention factors `0.9` are a free choice, not a measured value.
    fn default() -> Self {
        NetworkParams {
            c_n: 4.1,
            c_a_plus: 0.9,
            c_a_minus: 0.9,
            tau: 0.2,
            dt: 0.01,
            bounds: WeightBounds::default(),
            activation: Activation::Tanh,
        }
    }
}

impl NetworkParams {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        let bad = |msg: String| Err(DynamicsError::BadParams(msg));
        if !(self.c_n > 0.0 && self.c_n.is_finite()) {
            return bad(format!("c_n must be positive, got {}", self.c_n));
        }
        for (name, c) in [("c_a_plus", self.c_a_plus), ("c_a_minus", self.c_a_minus)] {
            if !(c > 0.0 && c < 1.0) {
                return bad(format!("{name} must lie in (0, 1), got {c}"));
            }
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return bad(format!("tau must be positive, got {}", self.tau));
        }
        if !(self.dt > 0.0 && self.dt <= self.tau) {
            return bad(format!("dt must lie in (0, tau], got {}", self.dt));
        }
        if whole_steps(self.tau, self.dt).is_none() {
            return bad(format!("dt = {} does not divide tau = {}", self.dt, self.tau));
        }
        if let Activation::BipolarLogistic { gain } = self.activation {
            if !(gain > 0.0 && gain.is_finite()) {
                return bad(format!("activation gain must be positive, got {gain}"));
            }
        }
        self.bounds
            .validate()
            .map_err(|e| DynamicsError::BadParams(e.to_string()))
    }

    pub fn steps_per_slot(&self) -> usize {
        whole_steps(self.tau, self.dt).expect("validated params")
    }

    pub fn retention(&self, sign: Sign) -> f64 {
        match sign {
            Sign::Plus => self.c_a_plus,
            Sign::Minus => self.c_a_minus,
        }
    }

    /// State matrix `H = -c_n I + A`.
    pub fn state_matrix(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        let mut h = a.clone();
        for k in 0..h.nrows() {
            h[(k, k)] -= self.c_n;
        }
        h
    }
}

/// `span / step` when it is an integer to within one part in 1e9.
pub(crate) fn whole_steps(span: f64, step: f64) -> Option<usize> {
    let ratio = span / step;
    let k = ratio.round();
    if k >= 0.0 && (ratio - k).abs() <= 1e-9 * ratio.max(1.0) {
        Some(k as usize)
    } else {
        None
    }
}

/// Neural state and weights at time `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkState {
    pub t: f64,
    pub x: DVector<f64>,
    pub a: DMatrix<f64>,
}

impl NetworkState {
    pub fn new(t: f64, x: DVector<f64>, a: DMatrix<f64>) -> Self {
        NetworkState { t, x, a }
    }

    /// State `x0` with the graph's initial weights at `t = 0`.
    pub fn initial(g: &SignedGraph, x0: DVector<f64>) -> Self {
        NetworkState::new(0.0, x0, g.initial_weights())
    }
}

/// One clipped Hebbian step on every edge of `g`. Non-edges stay exactly zero.
pub fn hebbian_update(state: &NetworkState, g: &SignedGraph, p: &NetworkParams) -> DMatrix<f64> {
    let n = g.n();
    let mut next = DMatrix::zeros(n, n);
    for e in g.edges() {
        let (i, j) = (e.i - 1, e.j - 1);
        let (lo, hi) = p.bounds.interval(e.sign);
        let drive = p.activation.apply(state.x[i] * state.x[j]);
        let w = clip(p.retention(e.sign) * state.a[(i, j)] + drive, lo, hi).expect("validated bounds");
        next[(i, j)] = w;
        next[(j, i)] = w;
    }
    next
}

/// `-c_n x + A x + B u`.
pub fn state_derivative(
    x: &DVector<f64>,
    a: &DMatrix<f64>,
    u: &DVector<f64>,
    p: &NetworkParams,
    g: &SignedGraph,
) -> Result<DVector<f64>, DynamicsError> {
    let n = g.n();
    if x.len() != n {
        return Err(DynamicsError::DimensionMismatch {
            what: "state",
            expected: n,
            got: x.len(),
        });
    }
    if a.shape() != (n, n) {
        return Err(DynamicsError::DimensionMismatch {
            what: "weight matrix rows",
            expected: n,
            got: a.nrows(),
        });
    }
    if u.len() != g.control_nodes().len() {
        return Err(DynamicsError::DimensionMismatch {
            what: "input",
            expected: g.control_nodes().len(),
            got: u.len(),
        });
    }
    let mut bu = DVector::zeros(n);
    g.apply_input(u, &mut bu);
    Ok(a * x - x * p.c_n + bu)
}

/// `max(d_max * a+_hi, d_max * |a-_lo|)`, the worst-case row sum of `|A|`.
pub fn coupling_bound(g: &SignedGraph, bounds: &WeightBounds) -> f64 {
    let d = g.max_out_degree() as f64;
    (d * bounds.a_plus_hi).max(d * bounds.a_minus_lo.abs())
}

/// Radius of the forward-invariant box `{|x_i| <= x_max}`:
/// `x_max = |Bu|_inf / (c_n - max(d_max * a+_hi, d_max * |a-_lo|))`.
pub fn x_max_bound(g: &SignedGraph, p: &NetworkParams, bu_inf: f64) -> Result<f64, DynamicsError> {
    let rate = coupling_bound(g, &p.bounds);
    if p.c_n <= rate {
        return Err(DynamicsError::ConditionViolated { c_n: p.c_n, rate });
    }
    Ok(bu_inf / (p.c_n - rate))
}

/// The zero-input equilibrium: `x = 0`, every edge at the bound nearest zero.
pub fn equilibrium(g: &SignedGraph, bounds: &WeightBounds) -> (DVector<f64>, DMatrix<f64>) {
    let a = g.weight_matrix(g.edges().iter().map(|e| bounds.resting(e.sign)));
    (DVector::zeros(g.n()), a)
}
