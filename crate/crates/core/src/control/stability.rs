use nalgebra::linalg::Schur;
use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use super::ControlError;
use crate::dynamics::{coupling_bound, NetworkParams};
use crate::graph::SignedGraph;

/// Gershgorin and spectral view of `H = -c_n I + A`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StabilityCertificate {
    /// `c_n > sum_j |a_ij|` on every row.
    pub diagonally_dominant: bool,
    /// `min_i (c_n - a_ii - sum_{j != i} |a_ij|)`.
    pub gershgorin_margin: f64,
    pub max_real_eigenvalue: f64,
    pub hurwitz: bool,
}

impl StabilityCertificate {
    /// Dominance must imply Hurwitz; false flags a broken computation.
    pub fn is_consistent(&self) -> bool {
        !self.diagonally_dominant || self.hurwitz
    }
}

/// Certificate for a frozen weight matrix `a` (symmetric, zero diagonal).
pub fn stability_certificate(a: &DMatrix<f64>, c_n: f64) -> StabilityCertificate {
    let n = a.nrows();
    let gershgorin_margin = (0..n)
        .map(|i| {
            let off: f64 = (0..n).filter(|&j| j != i).map(|j| a[(i, j)].abs()).sum();
            c_n - a[(i, i)] - off
        })
        .fold(f64::INFINITY, f64::min);
    let mut h = a.clone();
    for k in 0..n {
        h[(k, k)] -= c_n;
    }
    let symmetric = (0..n).all(|i| (0..i).all(|j| (h[(i, j)] - h[(j, i)]).abs() <= 1e-12));
    let max_real_eigenvalue = if n == 0 {
        f64::NEG_INFINITY
    } else if symmetric {
        let sym = (&h + h.transpose()) * 0.5;
        SymmetricEigen::new(sym).eigenvalues.max()
    } else {
        spectral_abscissa(&h).unwrap_or(f64::NAN)
    };
    let cert = StabilityCertificate {
        diagonally_dominant: gershgorin_margin > 0.0,
        gershgorin_margin,
        max_real_eigenvalue,
        hurwitz: max_real_eigenvalue < 0.0,
    };
    debug_assert!(cert.is_consistent(), "dominant but not Hurwitz: {cert:?}");
    cert
}

/// Largest real part over the eigenvalues of a general square matrix.
pub fn spectral_abscissa(m: &DMatrix<f64>) -> Result<f64, ControlError> {
    Ok(eigenvalues(m)?
        .into_iter()
        .map(|(re, _)| re)
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Eigenvalues as `(re, im)` pairs, ordered by real part then imaginary part.
pub(crate) fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<(f64, f64)>, ControlError> {
    if !m.is_square() {
        return Err(ControlError::DimensionMismatch {
            what: "eigenvalue input",
            expected: (m.nrows(), m.nrows()),
            got: m.shape(),
        });
    }
    let schur = Schur::try_new(m.clone(), f64::EPSILON, 10_000)
        .ok_or_else(|| ControlError::NumericalFailure("Schur decomposition did not converge".into()))?;
    let mut ev: Vec<(f64, f64)> = schur.complex_eigenvalues().iter().map(|z| (z.re, z.im)).collect();
    ev.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    Ok(ev)
}

/// Whether `max(d_max a+_hi, d_max |a-_lo|) < c_n`, with the slack
/// `c_n - max(...)`; the slack is clamped at zero when the condition fails.
pub fn boundedness_condition(g: &SignedGraph, p: &NetworkParams) -> (bool, f64) {
    let slack = p.c_n - coupling_bound(g, &p.bounds);
    (slack > 0.0, slack.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_graph, ControlNode, Edge, WeightBounds};

    fn a1() -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[0.0, 2.0, 2.0, 0.0])
    }

    #[test]
    fn two_node_certificate() {
        // eigenvalues of [[-c, 2], [2, -c]] are -c +- 2
        let cert = stability_certificate(&a1(), 4.1);
        assert!(cert.diagonally_dominant && cert.hurwitz);
        assert!((cert.max_real_eigenvalue + 2.1).abs() < 1e-12);
        assert!((cert.gershgorin_margin - 2.1).abs() < 1e-12);

        let cert = stability_certificate(&a1(), 1.0);
        assert!(!cert.diagonally_dominant && !cert.hurwitz);
        assert!((cert.max_real_eigenvalue - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_weights() {
        let cert = stability_certificate(&DMatrix::zeros(3, 3), 1.0);
        assert!(cert.hurwitz && cert.diagonally_dominant);
        assert_eq!(cert.gershgorin_margin, 1.0);
        assert!((cert.max_real_eigenvalue + 1.0).abs() < 1e-14);
    }

    #[test]
    fn nonsymmetric_spectrum() {
        // rotation generator shifted left: eigenvalues -1 +- 2i
        let m = DMatrix::from_row_slice(2, 2, &[-1.0, 2.0, -2.0, -1.0]);
        let ev = eigenvalues(&m).unwrap();
        assert!((ev[0].0 + 1.0).abs() < 1e-12 && (ev[0].1.abs() - 2.0).abs() < 1e-12);
        assert!((spectral_abscissa(&m).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn boundedness_cases() {
        let b = WeightBounds::default();
        let star = build_graph(
            5,
            [
                Edge::plus(1, 2, 0.5),
                Edge::plus(1, 3, 0.5),
                Edge::plus(1, 4, 0.5),
                Edge::minus(1, 5, -0.5),
            ],
            [ControlNode::unit(1)],
            &b,
        )
        .unwrap();
        let (ok, slack) = boundedness_condition(&star, &NetworkParams::default());
        assert!(ok);
        assert!((slack - 0.1).abs() < 1e-12);
        let p = NetworkParams {
            c_n: 4.0,
            ..NetworkParams::default()
        };
        assert_eq!(boundedness_condition(&star, &p), (false, 0.0));
        let empty = build_graph(2, [], [ControlNode::unit(1)], &b).unwrap();
        assert_eq!(boundedness_condition(&empty, &NetworkParams::default()), (true, 4.1));
    }
}
