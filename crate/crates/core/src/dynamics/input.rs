use std::f64::consts::FRAC_PI_2;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::DynamicsError;
use crate::control::FeedbackLaw;
use crate::graph::SignedGraph;

/// Open-loop input on one control channel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Waveform {
    Zero,
    Constant {
        value: f64,
    },
    /// `amplitude` held over `[0, hold)`, zero afterwards. A missing hold
    /// means one integration step. The hold is applied on the integration
    /// grid: a step contributes the full amplitude when it starts inside
    /// the hold window.
    Impulse {
        amplitude: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        hold: Option<f64>,
    },
    /// `amplitude * sin(angular_frequency * t + phase)`.
    Sinusoid {
        amplitude: f64,
        angular_frequency: f64,
        #[serde(default)]
        phase: f64,
    },
}

impl Waveform {
    pub fn sin(amplitude: f64, angular_frequency: f64) -> Self {
        Waveform::Sinusoid {
            amplitude,
            angular_frequency,
            phase: 0.0,
        }
    }

    pub fn cos(amplitude: f64, angular_frequency: f64) -> Self {
        Waveform::Sinusoid {
            amplitude,
            angular_frequency,
            phase: FRAC_PI_2,
        }
    }

    pub fn impulse(amplitude: f64) -> Self {
        Waveform::Impulse { amplitude, hold: None }
    }

    /// Declared bound `u_max` on `|u(t)|`.
    pub fn amplitude(&self) -> f64 {
        match *self {
            Waveform::Zero => 0.0,
            Waveform::Constant { value } => value.abs(),
            Waveform::Impulse { amplitude, .. } => amplitude.abs(),
            Waveform::Sinusoid { amplitude, .. } => amplitude.abs(),
        }
    }

    /// Value at time `t` inside the integration step starting at `step_start`.
    pub fn value(&self, t: f64, step_start: f64, dt: f64) -> f64 {
        match *self {
            Waveform::Zero => 0.0,
            Waveform::Constant { value } => value,
            Waveform::Impulse { amplitude, hold } => {
                let hold = hold.unwrap_or(dt);
                if step_start < hold - 1e-9 * dt {
                    amplitude
                } else {
                    0.0
                }
            }
            Waveform::Sinusoid {
                amplitude,
                angular_frequency,
                phase,
            } => amplitude * (angular_frequency * t + phase).sin(),
        }
    }

    fn validate(&self) -> Result<(), DynamicsError> {
        let finite = match *self {
            Waveform::Zero => true,
            Waveform::Constant { value } => value.is_finite(),
            Waveform::Impulse { amplitude, hold } => amplitude.is_finite() && hold.is_none_or(|h| h >= 0.0),
            Waveform::Sinusoid {
                amplitude,
                angular_frequency,
                phase,
            } => amplitude.is_finite() && angular_frequency.is_finite() && phase.is_finite(),
        };
        if finite {
            Ok(())
        } else {
            Err(DynamicsError::BadParams(format!("invalid waveform {self:?}")))
        }
    }
}

/// External input `u(t)`, one channel per control node in the graph's order.
#[derive(Clone, Debug, PartialEq)]
pub enum InputSignal {
    OpenLoop(Vec<Waveform>),
    Feedback(FeedbackLaw),
}

impl InputSignal {
    pub fn zero(channels: usize) -> Self {
        InputSignal::OpenLoop(vec![Waveform::Zero; channels])
    }

    pub fn channels(&self) -> usize {
        match self {
            InputSignal::OpenLoop(w) => w.len(),
            InputSignal::Feedback(law) => law.feedforward.len(),
        }
    }

    pub fn is_feedback(&self) -> bool {
        matches!(self, InputSignal::Feedback(_))
    }

    pub(crate) fn check(&self, g: &SignedGraph) -> Result<(), DynamicsError> {
        let k = g.control_nodes().len();
        if self.channels() != k {
            return Err(DynamicsError::DimensionMismatch {
                what: "input channels",
                expected: k,
                got: self.channels(),
            });
        }
        match self {
            InputSignal::OpenLoop(ws) => ws.iter().try_for_each(Waveform::validate),
            InputSignal::Feedback(law) => {
                if law.gain.shape() != (k, g.n()) || law.target.len() != g.n() {
                    return Err(DynamicsError::DimensionMismatch {
                        what: "feedback gain columns",
                        expected: g.n(),
                        got: law.gain.ncols(),
                    });
                }
                Ok(())
            }
        }
    }

    /// Declared `sup_t |B u(t)|_inf`; `None` for feedback, whose size
    /// depends on the trajectory.
    pub fn declared_bu_inf(&self, g: &SignedGraph) -> Option<f64> {
        match self {
            InputSignal::OpenLoop(ws) => Some(
                g.control_nodes()
                    .iter()
                    .zip(ws)
                    .map(|(c, w)| c.gain.abs() * w.amplitude())
                    .fold(0.0, f64::max),
            ),
            InputSignal::Feedback(_) => None,
        }
    }

    pub(crate) fn evaluate(&self, t: f64, step_start: f64, dt: f64, x: &DVector<f64>, out: &mut DVector<f64>) {
        match self {
            InputSignal::OpenLoop(ws) => {
                for (o, w) in out.iter_mut().zip(ws) {
                    *o = w.value(t, step_start, dt);
                }
            }
            InputSignal::Feedback(law) => law.evaluate(x, out),
        }
    }
}
