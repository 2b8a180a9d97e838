//! Controllability, stability certificates and LQR synthesis for the
//! frozen-weight system `x' = H x + B u`, `H = -c_n I + A`.

mod care;
mod lqr;
mod rank;
mod stability;

use thiserror::Error;

pub use care::{care_residual, solve_care, solve_lyapunov, LqrSolution};
pub use lqr::{lqr_regulate, lqr_regulate_with, FeedbackLaw, LqrDesign};
pub use rank::{
    controllability_matrix, controllability_rank, numerical_rank, random_admissible_weights, singular_values,
    structural_controllability_test, ControllabilityReport, TolerancePolicy,
};
pub use stability::{boundedness_condition, spectral_abscissa, stability_certificate, StabilityCertificate};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ControlError {
    #[error("{what}: expected {expected:?}, got {got:?}")]
    DimensionMismatch {
        what: &'static str,
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("empty matrix")]
    EmptyMatrix,
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("not stabilizable: {0}")]
    NotStabilizable(String),
    #[error("Riccati residual {residual:e} above target {target:e}")]
    IllConditioned { residual: f64, target: f64 },
    #[error("(H, B) has controllability rank {rank} < {n}")]
    NotControllable { rank: usize, n: usize },
    #[error("invalid cost weights: {0}")]
    BadCost(String),
}

pub(crate) fn serialize_rows<S: serde::Serializer>(m: &nalgebra::DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(m.nrows()))?;
    for row in m.row_iter() {
        seq.serialize_element(&row.iter().copied().collect::<Vec<f64>>())?;
    }
    seq.end()
}

pub(crate) fn serialize_vector<S: serde::Serializer>(v: &nalgebra::DVector<f64>, s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter())
}
