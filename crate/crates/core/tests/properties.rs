//! Invariants over random graphs, parameters and inputs.

mod common;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use neurocactus::control::{
    care_residual, controllability_rank, random_admissible_weights, solve_care, stability_certificate, TolerancePolicy,
};
use neurocactus::dynamics::{
    coupling_bound, equilibrium, hebbian_update, simulate, InputSignal, NetworkParams, NetworkState, ViolationKind,
};
use neurocactus::graph::{generate_generalized, validate_generalized, WeightBounds};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::box_case;

fn roots_strategy(max_n: usize) -> impl Strategy<Value = (usize, Vec<usize>, u64)> {
    (2usize..=max_n, 1usize..=4, any::<u64>()).prop_map(|(n, k, seed)| {
        let mut nodes: Vec<usize> = (1..=n).collect();
        nodes.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        nodes.truncate(k.min(n));
        (n, nodes, seed)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn generated_graphs_are_valid_certificates((n, roots, seed) in roots_strategy(30), ratio in 0.0f64..=1.0) {
        let bounds = WeightBounds::default();
        let (g, gd) = generate_generalized(n, &roots, seed, &bounds, ratio).unwrap();
        prop_assert!(validate_generalized(&g, &gd).is_accept());
        prop_assert!(g.is_input_accessible());
        prop_assert_eq!(g.n(), n);
        let control: Vec<usize> = g.control_nodes().iter().map(|c| c.node).collect();
        let mut sorted_roots = roots.clone();
        sorted_roots.sort_unstable();
        let mut sorted_control = control.clone();
        sorted_control.sort_unstable();
        prop_assert_eq!(sorted_control, sorted_roots);
        for e in g.edges() {
            prop_assert!(bounds.contains(e.sign, e.w0));
        }
        // same seed, same graph
        let again = generate_generalized(n, &roots, seed, &bounds, ratio).unwrap();
        prop_assert_eq!(again.0, g);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rank_verdict_is_permutation_invariant((n, roots, seed) in roots_strategy(16), perm_seed in any::<u64>()) {
        let bounds = WeightBounds::default();
        let p = NetworkParams::default();
        let (g, _) = generate_generalized(n, &roots, seed, &bounds, 0.8).unwrap();
        let mut perm: Vec<usize> = (1..=g.n()).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(perm_seed));
        let h = g.relabel(&perm);
        let before = controllability_rank(&p.state_matrix(&g.initial_weights()), &g.input_matrix(), TolerancePolicy::Spectral).unwrap();
        let after = controllability_rank(&p.state_matrix(&h.initial_weights()), &h.input_matrix(), TolerancePolicy::Spectral).unwrap();
        prop_assert_eq!(before.rank, after.rank);
        prop_assert_eq!(before.controllable, after.controllable);
    }

    #[test]
    fn hebbian_map_keeps_bounds_pattern_and_symmetry(seed in any::<u64>(), scale in 0.0f64..=50.0) {
        let case = box_case(seed, (2, 20), true);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xA5A5);
        let a = random_admissible_weights(&case.g, &case.p.bounds, &mut rng);
        let x = &case.x0 * (scale / case.x_max.max(1e-3));
        let next = hebbian_update(&NetworkState::new(0.0, x, a), &case.g, &case.p);
        prop_assert_eq!(&next, &next.transpose());
        for i in 0..case.g.n() {
            for j in 0..case.g.n() {
                match case.g.edge(i.min(j) + 1, i.max(j) + 1) {
                    Some(e) if i != j => prop_assert!(case.p.bounds.contains(e.sign, next[(i, j)])),
                    _ => prop_assert_eq!(next[(i, j)], 0.0),
                }
            }
        }
    }

    #[test]
    fn stability_certificate_holds_for_admissible_weights(seed in any::<u64>()) {
        let case = box_case(seed, (2, 20), true);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_admissible_weights(&case.g, &case.p.bounds, &mut rng);
        let cert = stability_certificate(&a, case.p.c_n);
        prop_assert!(cert.diagonally_dominant);
        prop_assert!(cert.hurwitz);
        prop_assert!(cert.is_consistent());
        prop_assert!(cert.max_real_eigenvalue <= -cert.gershgorin_margin + 1e-9);
    }

    #[test]
    fn box_is_forward_invariant(seed in any::<u64>()) {
        let case = box_case(seed, (4, 20), true);
        let traj = simulate(&case.g, &case.p, &case.input, &case.x0, case.t_end).unwrap();
        let allowed = case.x_max * (1.0 + 1e-9) + 1e-12;
        for (t, x) in traj.times.iter().zip(&traj.states) {
            prop_assert!(x.amax() <= allowed, "left the box at t = {}: {} > {}", t, x.amax(), case.x_max);
        }
        prop_assert!(traj.monitor.violations.is_empty(), "{:?}", traj.monitor.violations);
    }

    #[test]
    fn box_attracts_outside_starts(seed in any::<u64>()) {
        let case = box_case(seed, (4, 20), false);
        let traj = simulate(&case.g, &case.p, &case.input, &case.x0, case.t_end).unwrap();
        prop_assert!(!traj.monitor.violations.iter().any(|v| v.kind == ViolationKind::Attractivity || v.kind == ViolationKind::StateBound),
            "{:?}", traj.monitor.violations);
        // the excess over x_max decays at least like exp(-(c_n - rate) t)
        prop_assert!(traj.final_state().amax() <= case.x_max.max(traj.states[0].amax() * 0.5));
    }

    #[test]
    fn zero_input_settles_at_equilibrium(seed in any::<u64>()) {
        let mut case = box_case(seed, (2, 14), true);
        case.input = InputSignal::zero(case.g.control_nodes().len());
        let x0 = DVector::from_fn(case.g.n(), |i, _| ((i as f64) * 0.7).sin());
        // weights shrink by the retention factor per slot until they hit the resting bound
        let c_a = case.p.c_a_plus.max(case.p.c_a_minus);
        let weight_slots = (1e-3f64.ln() / c_a.ln()).ceil() + 20.0;
        // the state decays at least at the Gershgorin margin
        let margin = case.p.c_n - coupling_bound(&case.g, &case.p.bounds);
        let state_slots = (1e4f64.ln() / margin / case.p.tau).ceil();
        let slots = weight_slots.max(state_slots);
        let traj = simulate(&case.g, &case.p, &case.input, &x0, slots * case.p.tau).unwrap();
        let (_, a_eq) = equilibrium(&case.g, &case.p.bounds);
        prop_assert!(traj.final_state().amax() < 1e-3);
        prop_assert!((traj.final_weights() - a_eq).amax() < 1e-2);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn care_solutions_are_stabilizing(seed in any::<u64>(), n in 2usize..=12, q_scale in 0.1f64..=10.0) {
        let bounds = WeightBounds::default();
        let (g, _) = generate_generalized(n, &[1], seed, &bounds, 0.8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_admissible_weights(&g, &bounds, &mut rng);
        let h = NetworkParams::default().state_matrix(&a);
        let b = g.input_matrix();
        let q = DMatrix::identity(n, n) * q_scale;
        let r = DMatrix::identity(1, 1);
        let sol = solve_care(&h, &b, &q, &r).unwrap();
        prop_assert!(sol.care_residual <= 1e-8);
        prop_assert!(care_residual(&h, &b, &q, &r, &sol.p).unwrap() <= 1e-8);
        prop_assert!((&sol.p - sol.p.transpose()).amax() <= 1e-12);
        let min_eig = SymmetricEigen::new(sol.p.clone()).eigenvalues.min();
        prop_assert!(min_eig >= -1e-10);
        prop_assert!(sol.closed_loop_abscissa() < 0.0);
        prop_assert!((&sol.k - b.transpose() * &sol.p).amax() <= 1e-12);
    }
}
