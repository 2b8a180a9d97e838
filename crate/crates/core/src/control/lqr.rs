use nalgebra::{DMatrix, DVector, SVD};
use serde::Serialize;

use super::care::{solve_care, LqrSolution};
use super::rank::{controllability_rank, TolerancePolicy};
use super::{serialize_vector, ControlError};
use crate::dynamics::{InputSignal, NetworkParams};
use crate::graph::SignedGraph;

/// Target residuals above this are logged as unsustainable.
pub const TARGET_RESIDUAL_WARN: f64 = 1e-9;

/// `u = u_ff - K (x - target)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FeedbackLaw {
    /// `K`, one row per control channel.
    pub gain: DMatrix<f64>,
    pub feedforward: DVector<f64>,
    pub target: DVector<f64>,
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
    /// Redesign `K` and `u_ff` from the current weights at every slot boundary.
    pub recompute_each_slot: bool,
    /// `|(A - c_n I) target + B u_ff|_inf` for the current design.
    pub target_residual: f64,
    /// Number of redesigns since construction.
    pub refreshes: usize,
}

impl FeedbackLaw {
    pub(crate) fn evaluate(&self, x: &DVector<f64>, out: &mut DVector<f64>) {
        out.copy_from(&self.feedforward);
        out.gemv(-1.0, &self.gain, &(x - &self.target), 1.0);
    }

    /// Redesigns the law for the frozen weights `a`.
    pub fn refresh(&mut self, g: &SignedGraph, c_n: f64, a: &DMatrix<f64>) -> Result<(), ControlError> {
        let (solution, ff, residual) = design(g, c_n, a, &self.target, &self.q, &self.r)?;
        let care_residual = solution.care_residual;
        self.gain = solution.k;
        self.feedforward = ff;
        self.target_residual = residual;
        self.refreshes += 1;
        log::debug!(
            "gain redesign {}: target residual {residual:.3e}, CARE residual {:.3e}",
            self.refreshes,
            care_residual
        );
        Ok(())
    }
}

/// Initial design returned alongside the feedback input.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LqrDesign {
    #[serde(flatten)]
    pub solution: LqrSolution,
    #[serde(serialize_with = "serialize_vector")]
    pub feedforward: DVector<f64>,
    pub target_residual: f64,
}

/// LQR regulation to `target` with `Q = I`, `R = I`.
pub fn lqr_regulate(
    g: &SignedGraph,
    p: &NetworkParams,
    target: &DVector<f64>,
    recompute_each_slot: bool,
) -> Result<(InputSignal, LqrDesign), ControlError> {
    let n = g.n();
    let k = g.control_nodes().len();
    lqr_regulate_with(
        g,
        p,
        target,
        recompute_each_slot,
        DMatrix::identity(n, n),
        DMatrix::identity(k, k),
    )
}

pub fn lqr_regulate_with(
    g: &SignedGraph,
    p: &NetworkParams,
    target: &DVector<f64>,
    recompute_each_slot: bool,
    q: DMatrix<f64>,
    r: DMatrix<f64>,
) -> Result<(InputSignal, LqrDesign), ControlError> {
    let n = g.n();
    if target.len() != n {
        return Err(ControlError::DimensionMismatch {
            what: "target",
            expected: (n, 1),
            got: (target.len(), 1),
        });
    }
    let a = g.initial_weights();
    let report = controllability_rank(&p.state_matrix(&a), &g.input_matrix(), TolerancePolicy::Spectral)?;
    if !report.controllable {
        return Err(ControlError::NotControllable { rank: report.rank, n });
    }
    let (solution, feedforward, target_residual) = design(g, p.c_n, &a, target, &q, &r)?;
    if target_residual > TARGET_RESIDUAL_WARN {
        log::warn!("target is not an equilibrium under constant input: residual {target_residual:.3e}");
    }
    let law = FeedbackLaw {
        gain: solution.k.clone(),
        feedforward: feedforward.clone(),
        target: target.clone(),
        q,
        r,
        recompute_each_slot,
        target_residual,
        refreshes: 0,
    };
    Ok((
        InputSignal::Feedback(law),
        LqrDesign {
            solution,
            feedforward,
            target_residual,
        },
    ))
}

fn design(
    g: &SignedGraph,
    c_n: f64,
    a: &DMatrix<f64>,
    target: &DVector<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> Result<(LqrSolution, DVector<f64>, f64), ControlError> {
    let n = g.n();
    let mut h = a.clone();
    for i in 0..n {
        h[(i, i)] -= c_n;
    }
    let b = g.input_matrix();
    let solution = solve_care(&h, &b, q, r)?;
    let (ff, residual) = feedforward(&h, &b, target)?;
    Ok((solution, ff, residual))
}

/// Least-squares `u_ff` with `B u_ff = -H target`, and the residual
/// `|H target + B u_ff|_inf`.
fn feedforward(h: &DMatrix<f64>, b: &DMatrix<f64>, target: &DVector<f64>) -> Result<(DVector<f64>, f64), ControlError> {
    let demand = -(h * target);
    if target.iter().all(|v| *v == 0.0) {
        return Ok((DVector::zeros(b.ncols()), 0.0));
    }
    let svd = SVD::try_new(b.clone(), true, true, f64::EPSILON, 10_000)
        .ok_or_else(|| ControlError::NumericalFailure("SVD did not converge".into()))?;
    let tol = svd.singular_values.max() * b.nrows().max(b.ncols()) as f64 * f64::EPSILON;
    let ff = svd
        .solve(&demand, tol)
        .map_err(|e| ControlError::NumericalFailure(e.to_string()))?;
    let residual = (b * &ff - &demand).amax();
    Ok((ff, residual))
}
