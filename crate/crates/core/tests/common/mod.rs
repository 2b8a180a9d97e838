//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::path::PathBuf;

use nalgebra::{DMatrix, DVector};
use neurocactus::dynamics::{coupling_bound, x_max_bound, InputSignal, NetworkParams, Waveform};
use neurocactus::graph::{generate_generalized_with, GeneratorOptions, SignedGraph, WeightBounds};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Repository `scenarios/` directory.
pub fn scenarios_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

const PADE_DEGREE: usize = 13;

/// Matrix exponential by a diagonal Padé approximant of degree 13 with
/// scaling and squaring. The argument is scaled to 1-norm at most 1/2,
/// well inside the region where the approximant is accurate to working
/// precision.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    assert!(a.is_square());
    let n = a.nrows();
    let norm1 = (0..n).map(|j| a.column(j).abs().sum()).fold(0.0, f64::max);
    let mut squarings = 0u32;
    while norm1 / 2f64.powi(squarings as i32) > 0.5 {
        squarings += 1;
    }
    let scaled = a / 2f64.powi(squarings as i32);

    // c_k = (2q - k)! q! / ((2q)! k! (q - k)!), built by recurrence
    let q = PADE_DEGREE;
    let mut coeffs = vec![1.0f64; q + 1];
    for k in 1..=q {
        coeffs[k] = coeffs[k - 1] * (q + 1 - k) as f64 / (k as f64 * (2 * q + 1 - k) as f64);
    }
    let eye = DMatrix::<f64>::identity(n, n);
    let mut num = &eye * coeffs[0];
    let mut den = &eye * coeffs[0];
    let mut power = eye.clone();
    for (k, c) in coeffs.iter().enumerate().skip(1) {
        power = &power * &scaled;
        num += &power * *c;
        den += &power * if k % 2 == 0 { *c } else { -*c };
    }
    let mut result = den.lu().solve(&num).expect("Padé denominator is nonsingular");
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Exact rank of an integer matrix by fraction-free (Bareiss) elimination
/// with full pivoting over `i128`.
pub fn exact_rank(m: &[Vec<i64>]) -> usize {
    let rows = m.len();
    if rows == 0 {
        return 0;
    }
    let cols = m[0].len();
    let mut a: Vec<Vec<i128>> = m.iter().map(|r| r.iter().map(|&v| v as i128).collect()).collect();
    let mut prev: i128 = 1;
    let mut rank = 0;
    while rank < rows.min(cols) {
        let pivot = (rank..rows)
            .flat_map(|i| (rank..cols).map(move |j| (i, j)))
            .find(|&(i, j)| a[i][j] != 0);
        let Some((pi, pj)) = pivot else { break };
        a.swap(rank, pi);
        for row in a.iter_mut() {
            row.swap(rank, pj);
        }
        let p = a[rank][rank];
        for i in rank + 1..rows {
            for j in rank + 1..cols {
                let v = p * a[i][j] - a[i][rank] * a[rank][j];
                debug_assert_eq!(v % prev, 0, "Bareiss division must be exact");
                a[i][j] = v / prev;
            }
            a[i][rank] = 0;
        }
        prev = p;
        rank += 1;
    }
    rank
}

pub fn to_matrix(m: &[Vec<i64>]) -> DMatrix<f64> {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    DMatrix::from_fn(rows, cols, |i, j| m[i][j] as f64)
}

/// A random admissible run: a generated generalized sym-cactus, parameters
/// satisfying the boundedness condition, bounded open-loop inputs.
pub struct BoxCase {
    pub g: SignedGraph,
    pub p: NetworkParams,
    pub input: InputSignal,
    pub x0: DVector<f64>,
    pub t_end: f64,
    pub x_max: f64,
}

/// `inside` puts `x0` in the invariant box, with some coordinates on its
/// boundary; otherwise `x0` starts strictly outside it.
pub fn box_case(seed: u64, n_range: (usize, usize), inside: bool) -> BoxCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(n_range.0..=n_range.1);
    let k = rng.random_range(1..=3.min(n));
    let mut nodes: Vec<usize> = (1..=n).collect();
    nodes.shuffle(&mut rng);
    let roots = &nodes[..k];
    let bounds = WeightBounds::default();
    let opts = GeneratorOptions {
        sign_ratio: rng.random_range(0.0..=1.0),
        ..GeneratorOptions::default()
    };
    let (g, _) = generate_generalized_with(n, roots, seed, &bounds, &opts).expect("feasible generator input");
    let tau = [0.1, 0.2, 0.25][rng.random_range(0..3)];
    let p = NetworkParams {
        c_n: coupling_bound(&g, &bounds) + rng.random_range(0.05..=2.0),
        c_a_plus: rng.random_range(0.1..0.99),
        c_a_minus: rng.random_range(0.1..0.99),
        tau,
        dt: tau / 20.0,
        bounds,
        ..NetworkParams::default()
    };
    let waves: Vec<Waveform> = (0..k)
        .map(|_| match rng.random_range(0..4) {
            0 => Waveform::Zero,
            1 => Waveform::Constant {
                value: rng.random_range(-3.0..=3.0),
            },
            2 => Waveform::Sinusoid {
                amplitude: rng.random_range(0.0..=3.0),
                angular_frequency: rng.random_range(0.5..=5.0),
                phase: rng.random_range(0.0..std::f64::consts::TAU),
            },
            _ => Waveform::Impulse {
                amplitude: rng.random_range(-3.0..=3.0),
                hold: Some(tau * rng.random_range(1..=5) as f64),
            },
        })
        .collect();
    let input = InputSignal::OpenLoop(waves);
    let bu = input.declared_bu_inf(&g).expect("open loop");
    let x_max = x_max_bound(&g, &p, bu).expect("boundedness condition holds");
    let x0 = if inside {
        DVector::from_fn(n, |_, _| {
            if rng.random_bool(0.25) {
                if rng.random_bool(0.5) {
                    x_max
                } else {
                    -x_max
                }
            } else {
                rng.random_range(-1.0..=1.0) * x_max
            }
        })
    } else {
        let mut x = DVector::from_fn(n, |_, _| rng.random_range(-1.0..=1.0) * (3.0 * x_max + 1.0));
        let i = rng.random_range(0..n);
        x[i] = (2.0 * x_max + 1.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        x
    };
    BoxCase {
        g,
        p,
        input,
        x0,
        t_end: 30.0 * tau,
        x_max,
    }
}
