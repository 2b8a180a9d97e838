use nalgebra::{Cholesky, DMatrix, SymmetricEigen, SVD};
use serde::Serialize;

use super::stability::eigenvalues;
use super::{serialize_rows, ControlError};

/// Residual the solver must reach before returning.
pub const CARE_TARGET: f64 = 1e-8;
const SIGN_MAX_ITER: usize = 100;
const NEWTON_MAX_ITER: usize = 50;

/// Stabilizing solution of `H^T P + P H - P B R^-1 B^T P + Q = 0`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LqrSolution {
    #[serde(rename = "P", serialize_with = "serialize_rows")]
    pub p: DMatrix<f64>,
    /// `R^-1 B^T P`.
    #[serde(rename = "K", serialize_with = "serialize_rows")]
    pub k: DMatrix<f64>,
    pub care_residual: f64,
    #[serde(rename = "Q", serialize_with = "serialize_rows")]
    pub q: DMatrix<f64>,
    #[serde(rename = "R", serialize_with = "serialize_rows")]
    pub r: DMatrix<f64>,
    /// Eigenvalues of `H - B K` as `(re, im)`.
    pub closed_loop_spectrum: Vec<(f64, f64)>,
    pub p_min_eigenvalue: f64,
}

impl LqrSolution {
    pub fn closed_loop_abscissa(&self) -> f64 {
        self.closed_loop_spectrum
            .iter()
            .map(|z| z.0)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Infinity norm of `H^T P + P H - P B R^-1 B^T P + Q`.
pub fn care_residual(
    h: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    p: &DMatrix<f64>,
) -> Result<f64, ControlError> {
    let g = gain_term(b, r)?;
    Ok(inf_norm(&riccati(h, &g, q, p)))
}

/// Solves `A^T X + X A = -C` through the Kronecker form.
pub fn solve_lyapunov(a: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<DMatrix<f64>, ControlError> {
    let n = a.nrows();
    if !a.is_square() || c.shape() != (n, n) {
        return Err(ControlError::DimensionMismatch {
            what: "Lyapunov operands",
            expected: (n, n),
            got: c.shape(),
        });
    }
    let at = a.transpose();
    let eye = DMatrix::<f64>::identity(n, n);
    let m = eye.kronecker(&at) + at.kronecker(&eye);
    let rhs = DMatrix::from_column_slice(n * n, 1, (-c).as_slice());
    let x = m
        .lu()
        .solve(&rhs)
        .ok_or_else(|| ControlError::NumericalFailure("singular Lyapunov operator".into()))?;
    let x = DMatrix::from_column_slice(n, n, x.as_slice());
    Ok((&x + x.transpose()) * 0.5)
}

/// Stabilizing CARE solution.
///
/// The stable invariant subspace of the Hamiltonian is read off its matrix
/// sign function, then Newton-Kleinman iterations polish the result until
/// the residual reaches `1e-8`.
pub fn solve_care(
    h: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> Result<LqrSolution, ControlError> {
    let n = h.nrows();
    if n == 0 || b.ncols() == 0 {
        return Err(ControlError::EmptyMatrix);
    }
    let m = b.ncols();
    for (what, got, expected) in [
        ("state matrix", h.shape(), (n, n)),
        ("input matrix", b.shape(), (n, m)),
        ("state cost", q.shape(), (n, n)),
        ("input cost", r.shape(), (m, m)),
    ] {
        if got != expected {
            return Err(ControlError::DimensionMismatch { what, expected, got });
        }
    }
    if [h, b, q, r].iter().any(|x| x.iter().any(|v| !v.is_finite())) {
        return Err(ControlError::NumericalFailure("non-finite input".into()));
    }
    check_cost(q, r)?;

    let g = gain_term(b, r)?;
    let mut p = sign_function_solution(h, &g, q)?;
    let mut residual = inf_norm(&riccati(h, &g, q, &p));
    let rinv_bt = r
        .clone()
        .cholesky()
        .expect("checked positive definite")
        .solve(&b.transpose());
    for _ in 0..NEWTON_MAX_ITER {
        if residual <= CARE_TARGET {
            break;
        }
        let k = &rinv_bt * &p;
        let ac = h - b * &k;
        let c = q + k.transpose() * r * &k;
        let next = match solve_lyapunov(&ac, &c) {
            Ok(x) => x,
            Err(_) => break,
        };
        let next_residual = inf_norm(&riccati(h, &g, q, &next));
        // stagnation, or a NaN residual
        if next_residual.partial_cmp(&residual) != Some(std::cmp::Ordering::Less) {
            break;
        }
        p = next;
        residual = next_residual;
    }
    if residual > CARE_TARGET {
        return Err(ControlError::IllConditioned {
            residual,
            target: CARE_TARGET,
        });
    }

    let k = &rinv_bt * &p;
    let closed_loop_spectrum = eigenvalues(&(h - b * &k))?;
    if closed_loop_spectrum.iter().any(|z| z.0 >= 0.0) {
        return Err(ControlError::NotStabilizable("closed loop is not Hurwitz".into()));
    }
    let p_min_eigenvalue = SymmetricEigen::new(p.clone()).eigenvalues.min();
    Ok(LqrSolution {
        p,
        k,
        care_residual: residual,
        q: q.clone(),
        r: r.clone(),
        closed_loop_spectrum,
        p_min_eigenvalue,
    })
}

fn check_cost(q: &DMatrix<f64>, r: &DMatrix<f64>) -> Result<(), ControlError> {
    let asym = |m: &DMatrix<f64>| inf_norm(&(m - m.transpose())) > 1e-12 * (1.0 + inf_norm(m));
    if asym(q) || asym(r) {
        return Err(ControlError::BadCost("Q and R must be symmetric".into()));
    }
    let q_min = SymmetricEigen::new(q.clone()).eigenvalues.min();
    if q_min < -1e-12 * (1.0 + inf_norm(q)) {
        return Err(ControlError::BadCost(format!("Q has eigenvalue {q_min:e}")));
    }
    if Cholesky::new(r.clone()).is_none() {
        return Err(ControlError::BadCost("R is not positive definite".into()));
    }
    Ok(())
}

/// `B R^-1 B^T`.
fn gain_term(b: &DMatrix<f64>, r: &DMatrix<f64>) -> Result<DMatrix<f64>, ControlError> {
    let chol = r
        .clone()
        .cholesky()
        .ok_or_else(|| ControlError::BadCost("R is not positive definite".into()))?;
    Ok(b * chol.solve(&b.transpose()))
}

fn riccati(h: &DMatrix<f64>, g: &DMatrix<f64>, q: &DMatrix<f64>, p: &DMatrix<f64>) -> DMatrix<f64> {
    h.transpose() * p + p * h - p * g * p + q
}

fn inf_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn one_norm(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Solution built from `sign(Z)`, `Z = [[H, -G], [-Q, -H^T]]`.
fn sign_function_solution(h: &DMatrix<f64>, g: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>, ControlError> {
    let n = h.nrows();
    let mut z = DMatrix::zeros(2 * n, 2 * n);
    z.view_mut((0, 0), (n, n)).copy_from(h);
    z.view_mut((0, n), (n, n)).copy_from(&(-g));
    z.view_mut((n, 0), (n, n)).copy_from(&(-q));
    z.view_mut((n, n), (n, n)).copy_from(&(-h.transpose()));

    let dim = (2 * n) as f64;
    let mut converged = false;
    let mut scale = true;
    for _ in 0..SIGN_MAX_ITER {
        let lu = z.clone().lu();
        let log_det: f64 = lu.u().diagonal().iter().map(|v| v.abs().ln()).sum();
        if !log_det.is_finite() {
            return Err(ControlError::NotStabilizable(
                "Hamiltonian has an eigenvalue at zero".into(),
            ));
        }
        let c = if scale { (-log_det / dim).exp() } else { 1.0 };
        let inv = lu
            .try_inverse()
            .ok_or_else(|| ControlError::NotStabilizable("Hamiltonian is singular".into()))?;
        let next = (&z * c + inv / c) * 0.5;
        let delta = one_norm(&(&next - &z));
        let size = one_norm(&next);
        z = next;
        if !size.is_finite() {
            break;
        }
        if delta <= 1e-2 * size {
            scale = false;
        }
        if delta <= 1e-13 * size {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(ControlError::NotStabilizable(
            "sign iteration did not converge; Hamiltonian has imaginary-axis eigenvalues".into(),
        ));
    }

    let mut lhs = DMatrix::zeros(2 * n, n);
    lhs.view_mut((0, 0), (n, n)).copy_from(&z.view((0, n), (n, n)));
    let mut lower = z.view((n, n), (n, n)).clone_owned();
    lower += DMatrix::<f64>::identity(n, n);
    lhs.view_mut((n, 0), (n, n)).copy_from(&lower);
    let mut rhs = DMatrix::zeros(2 * n, n);
    let mut upper = z.view((0, 0), (n, n)).clone_owned();
    upper += DMatrix::<f64>::identity(n, n);
    rhs.view_mut((0, 0), (n, n)).copy_from(&(-upper));
    rhs.view_mut((n, 0), (n, n)).copy_from(&(-z.view((n, 0), (n, n))));

    let svd = SVD::try_new(lhs, true, true, f64::EPSILON, 10_000)
        .ok_or_else(|| ControlError::NumericalFailure("SVD did not converge".into()))?;
    let smax = svd.singular_values.max();
    let tol = smax * (2 * n) as f64 * f64::EPSILON * 1e3;
    if svd.rank(tol) < n {
        return Err(ControlError::NotStabilizable(
            "stable invariant subspace has wrong dimension".into(),
        ));
    }
    let p = svd
        .solve(&rhs, tol)
        .map_err(|e| ControlError::NumericalFailure(e.to_string()))?;
    Ok((&p + p.transpose()) * 0.5)
}
