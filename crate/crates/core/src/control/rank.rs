use nalgebra::{DMatrix, SVD};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::ControlError;
use crate::dynamics::NetworkParams;
use crate::graph::{SignedGraph, WeightBounds};

/// How singular values are thresholded into a rank.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum TolerancePolicy {
    /// `sigma_1 * max(rows, cols) * eps`.
    #[default]
    Spectral,
    Absolute(f64),
    /// `factor * sigma_1`.
    Relative(f64),
}

impl TolerancePolicy {
    fn tolerance(&self, sigma_max: f64, rows: usize, cols: usize) -> f64 {
        match *self {
            TolerancePolicy::Spectral => sigma_max * rows.max(cols) as f64 * f64::EPSILON,
            TolerancePolicy::Absolute(t) => t,
            TolerancePolicy::Relative(f) => f * sigma_max,
        }
    }
}

/// Rank verdict with the raw spectrum, so callers can re-threshold.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ControllabilityReport {
    pub rank: usize,
    /// Row count; full rank means `rank == n`.
    pub n: usize,
    /// Descending.
    pub singular_values: Vec<f64>,
    pub tolerance: f64,
    pub controllable: bool,
    /// Fraction of random weight draws that were full rank.
    #[serde(rename = "sample_fraction")]
    pub sample_fraction_full_rank: Option<f64>,
}

/// `[B, HB, H^2 B, ..., H^(N-1) B]`, `N x (N m)`.
pub fn controllability_matrix(h: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>, ControlError> {
    check_pair(h, b)?;
    let n = h.nrows();
    let m = b.ncols();
    let mut c = DMatrix::zeros(n, n * m);
    let mut block = b.clone();
    for k in 0..n {
        c.columns_mut(k * m, m).copy_from(&block);
        if k + 1 < n {
            block = h * &block;
        }
    }
    Ok(c)
}

fn check_pair(h: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<(), ControlError> {
    let n = h.nrows();
    if h.ncols() != n {
        return Err(ControlError::DimensionMismatch {
            what: "state matrix",
            expected: (n, n),
            got: h.shape(),
        });
    }
    if b.nrows() != n {
        return Err(ControlError::DimensionMismatch {
            what: "input matrix",
            expected: (n, b.ncols()),
            got: b.shape(),
        });
    }
    Ok(())
}

/// Singular values in descending order.
pub fn singular_values(m: &DMatrix<f64>) -> Result<Vec<f64>, ControlError> {
    if m.is_empty() {
        return Err(ControlError::EmptyMatrix);
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(ControlError::NumericalFailure("matrix has non-finite entries".into()));
    }
    let svd = SVD::try_new(m.clone(), false, false, f64::EPSILON, 10_000)
        .ok_or_else(|| ControlError::NumericalFailure("SVD did not converge".into()))?;
    let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    Ok(sv)
}

/// Numerical rank of `m` by singular values.
pub fn numerical_rank(m: &DMatrix<f64>, policy: TolerancePolicy) -> Result<ControllabilityReport, ControlError> {
    let sv = singular_values(m)?;
    let tol = policy.tolerance(sv[0], m.nrows(), m.ncols());
    let rank = sv.iter().filter(|&&s| s > tol).count();
    Ok(ControllabilityReport {
        rank,
        n: m.nrows(),
        singular_values: sv,
        tolerance: tol,
        controllable: rank == m.nrows(),
        sample_fraction_full_rank: None,
    })
}

/// Rank of the controllability matrix of `(H, B)`, computed without
/// forming it.
///
/// The powers `H^k B` become nearly parallel long before `k = N - 1`, so
/// the SVD of the raw matrix loses small but genuine directions. Instead
/// an orthonormal basis of the same Krylov space is grown one block at a
/// time (the controllability staircase): each block is `H` applied to the
/// previous block, orthogonalized twice against the basis, and split by
/// SVD into new directions and negligible ones. The rank is the final
/// basis size. `singular_values` lists every block singular value seen,
/// accepted or not, and the tolerance is taken relative to
/// `max(|B|_2, |H - s I|_2)` with `s` the mean diagonal.
pub fn controllability_rank(
    h: &DMatrix<f64>,
    b: &DMatrix<f64>,
    policy: TolerancePolicy,
) -> Result<ControllabilityReport, ControlError> {
    check_pair(h, b)?;
    let n = h.nrows();
    if n == 0 || b.ncols() == 0 {
        return Err(ControlError::EmptyMatrix);
    }
    if h.iter().chain(b.iter()).any(|v| !v.is_finite()) {
        return Err(ControlError::NumericalFailure("matrix has non-finite entries".into()));
    }
    let shift = h.trace() / n as f64;
    let mut hs = h.clone();
    for k in 0..n {
        hs[(k, k)] -= shift;
    }
    let scale = singular_values(b)?[0].max(if hs.iter().all(|v| *v == 0.0) {
        0.0
    } else {
        singular_values(&hs)?[0]
    });
    let tol = policy.tolerance(scale, n, n * b.ncols());

    let mut basis = DMatrix::<f64>::zeros(n, 0);
    let mut seen = Vec::new();
    let mut block = b.clone();
    for _ in 0..n {
        for _ in 0..2 {
            if basis.ncols() > 0 {
                let proj = &basis * (basis.transpose() * &block);
                block -= proj;
            }
        }
        let svd = SVD::try_new(block.clone(), true, false, f64::EPSILON, 10_000)
            .ok_or_else(|| ControlError::NumericalFailure("SVD did not converge".into()))?;
        let u = svd.u.expect("left vectors requested");
        let mut fresh = Vec::new();
        for (i, &sigma) in svd.singular_values.iter().enumerate() {
            seen.push(sigma);
            if sigma > tol && basis.ncols() + fresh.len() < n {
                fresh.push(u.column(i).into_owned());
            }
        }
        if fresh.is_empty() {
            break;
        }
        let next = DMatrix::from_columns(&fresh);
        let width = basis.ncols();
        basis = basis.insert_columns(width, next.ncols(), 0.0);
        basis.columns_mut(width, next.ncols()).copy_from(&next);
        if basis.ncols() == n {
            break;
        }
        block = &hs * next;
    }
    seen.sort_by(|a, b| b.total_cmp(a));
    let rank = basis.ncols();
    Ok(ControllabilityReport {
        rank,
        n,
        singular_values: seen,
        tolerance: tol,
        controllable: rank == n,
        sample_fraction_full_rank: None,
    })
}

/// Weights with the zero pattern of `g`, each edge uniform in its sign's interval.
pub fn random_admissible_weights(g: &SignedGraph, bounds: &WeightBounds, rng: &mut impl Rng) -> DMatrix<f64> {
    g.weight_matrix(g.edges().iter().map(|e| {
        let (lo, hi) = bounds.interval(e.sign);
        rng.random_range(lo..=hi)
    }))
}

/// Monte-Carlo structural controllability test.
///
/// Draws `samples` admissible weight matrices, forms `H = -c_n I + A` and
/// ranks the controllability matrix with the graph's `B`. Controllable
/// when at least one draw is full rank; the full-rank fraction is the
/// genericity diagnostic. Draw `k` uses ChaCha stream `k` of `seed`, so the
/// result does not depend on thread scheduling.
pub fn structural_controllability_test(
    g: &SignedGraph,
    p: &NetworkParams,
    samples: usize,
    seed: u64,
) -> Result<ControllabilityReport, ControlError> {
    let samples = samples.max(1);
    let b = g.input_matrix();
    let reports: Vec<ControllabilityReport> = (0..samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let a = random_admissible_weights(g, &p.bounds, &mut rng);
            controllability_rank(&p.state_matrix(&a), &b, TolerancePolicy::Spectral)
        })
        .collect::<Result<_, _>>()?;
    let full = reports.iter().filter(|r| r.controllable).count();
    let best = reports
        .iter()
        .find(|r| r.controllable)
        .or_else(|| reports.iter().max_by_key(|r| r.rank))
        .expect("at least one sample");
    Ok(ControllabilityReport {
        controllable: full > 0,
        sample_fraction_full_rank: Some(full as f64 / samples as f64),
        ..best.clone()
    })
}
