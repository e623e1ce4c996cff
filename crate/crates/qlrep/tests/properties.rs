//! Property tests for the structural invariants of the toolkit.

mod common;

use std::f64::consts::PI;

use common::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qlrep::bell::{triple_from_joint, JointDistribution3};
use qlrep::flybox::analytic_transition;
use qlrep::frequency::{detect_stabilization, OutcomeSequence};
use qlrep::kolmogorov::{
    extract_contextual_data, transition_probabilities, ContextualData, KolmogorovSpace,
    PartitionObservable, TransitionMode,
};
use qlrep::qlra::operators::{build_operators, commutator, GRAM_TOL, REPRESENTATION_TOL};
use qlrep::qlra::{
    build_complex_amplitude, build_hyperbolic_amplitude, interference_coefficients,
    verify_interference_formula, PhaseBranch, BORN_TOL,
};

fn four_atom_space(weights: Vec<f64>) -> KolmogorovSpace {
    KolmogorovSpace::new(
        vec!["w1".into(), "w2".into(), "w3".into(), "w4".into()],
        weights,
    )
    .unwrap()
}

fn split_a() -> PartitionObservable {
    PartitionObservable::new("a", vec!["+1", "-1"], vec![vec!["w1", "w2"], vec!["w3", "w4"]])
        .unwrap()
}

fn split_b() -> PartitionObservable {
    PartitionObservable::new("b", vec!["+1", "-1"], vec![vec!["w1", "w4"], vec!["w2", "w3"]])
        .unwrap()
}

proptest! {
    #[test]
    fn born_rule_is_exact_on_trigonometric_data(data in arb_trigonometric()) {
        let amp = build_complex_amplitude(&data, PhaseBranch::Principal, 1e-9).unwrap();
        prop_assert!(amp.born_residual <= BORN_TOL);
        let total: f64 = amp.squared_moduli().iter().sum();
        prop_assert!((total - 1.0).abs() <= 1e-12);
        prop_assert!((amp.phases[1] - amp.phases[0] - PI).abs() <= 1e-15);
        prop_assert!(amp.phase_residual <= 1e-12);
    }

    #[test]
    fn coefficients_are_antisymmetric_under_symmetric_conditioning(
        data in arb_trigonometric()
    ) {
        let report = interference_coefficients(&data).unwrap();
        prop_assert!((report.lambda_b[0] + report.lambda_b[1]).abs() <= 1e-12);
    }

    #[test]
    fn hyperbolic_born_rule_is_exact(data in arb_hyperbolic()) {
        let amp = build_hyperbolic_amplitude(&data, 1e-9).unwrap();
        prop_assert!(amp.born_residual <= BORN_TOL);
        let total: f64 = amp.squared_moduli().iter().sum();
        prop_assert!((total - 1.0).abs() <= 1e-12);
        prop_assert!(amp.theta > 0.0);
        prop_assert!((amp.signs[0] + amp.signs[1]).abs() < 1e-15);
    }

    #[test]
    fn operators_certify_the_representation(data in arb_trigonometric()) {
        let amp = build_complex_amplitude(&data, PhaseBranch::Principal, 1e-9).unwrap();
        let pair = build_operators(&data, &amp, [1.0, -1.0], [1.0, -1.0]).unwrap();
        prop_assert!(pair.diagnostics.gram_deviation <= GRAM_TOL);
        prop_assert!(pair.diagnostics.decomposition_residual <= REPRESENTATION_TOL);
        prop_assert!(pair.diagnostics.average_residual <= REPRESENTATION_TOL);
        let noncommutativity =
            commutator(&pair.a_matrix, &pair.b_matrix).frobenius_norm();
        prop_assert!(noncommutativity > 1e-2);
    }

    #[test]
    fn interference_formula_reconstructs_trigonometric_marginals(
        data in arb_trigonometric()
    ) {
        prop_assert!(verify_interference_formula(&data).unwrap() <= BORN_TOL);
    }

    #[test]
    fn interference_formula_reconstructs_hyperbolic_marginals(
        data in arb_hyperbolic()
    ) {
        prop_assert!(verify_interference_formula(&data).unwrap() <= BORN_TOL);
    }

    #[test]
    fn random_space_transitions_are_stochastic(weights in arb_weights4()) {
        let space = four_atom_space(weights);
        let t = transition_probabilities(&space, &split_a(), &split_b()).unwrap();
        for row in t {
            prop_assert!(row.iter().all(|&p| (0.0..=1.0).contains(&p)));
            prop_assert!((row[0] + row[1] - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn context_conditioned_extraction_obeys_chain_rule(weights in arb_weights4()) {
        let space = four_atom_space(weights);
        let data = extract_contextual_data(
            &space,
            &["w1", "w2", "w3"],
            &split_a(),
            &split_b(),
            TransitionMode::ContextConditioned,
        )
        .unwrap();
        for j in 0..2 {
            let total: f64 = (0..2)
                .map(|i| data.p_a()[i] * data.t_b_given_a()[i][j])
                .sum();
            prop_assert!((total - data.p_b()[j]).abs() <= 1e-12);
        }
    }

    #[test]
    fn r1_tracks_cell_balance(w1 in 0.1f64..0.4, delta in 0.01f64..0.04) {
        let w2 = 0.5 - w1;
        let balanced = four_atom_space(vec![w1, w2, w1, w2]);
        let data = extract_contextual_data(
            &balanced,
            &["w1", "w2", "w3", "w4"],
            &split_a(),
            &split_b(),
            TransitionMode::Unconditioned,
        )
        .unwrap();
        prop_assert!(data.check_conditions(1e-12).r1);

        let lopsided = four_atom_space(vec![w1 + delta, w2, w1 - delta, w2]);
        let data = extract_contextual_data(
            &lopsided,
            &["w1", "w2", "w3", "w4"],
            &split_a(),
            &split_b(),
            TransitionMode::Unconditioned,
        )
        .unwrap();
        prop_assert!(!data.check_conditions(1e-6).r1);
    }

    #[test]
    fn stabilization_is_monotone_in_tolerance(
        p in 0.2f64..0.8,
        seed in any::<u64>(),
        tol in 1e-3f64..5e-2,
        factor in 1.0f64..10.0,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let outcomes: Vec<u8> = (0..2000)
            .map(|_| u8::from(rng.gen::<f64>() >= p))
            .collect();
        let seq = OutcomeSequence::from_indices(
            "coin",
            vec!["+1".into(), "-1".into()],
            outcomes,
        )
        .unwrap();
        let tight = detect_stabilization(&seq, 200, tol).unwrap();
        let loose = detect_stabilization(&seq, 200, tol * factor).unwrap();
        prop_assert_eq!(tight.max_drift, loose.max_drift);
        prop_assert!(!tight.stabilized || loose.stabilized);
    }

    #[test]
    fn analytic_transitions_are_symmetric_doubly_stochastic(
        phi0 in -3.0f64..3.0,
        delta in -10.0f64..10.0,
    ) {
        let t = analytic_transition(phi0, phi0 + delta);
        for row in t {
            prop_assert!(row.iter().all(|&p| (0.0..=1.0).contains(&p)));
            prop_assert!((row[0] + row[1] - 1.0).abs() <= 1e-12);
        }
        prop_assert_eq!(t[0][1], t[1][0]);
        prop_assert_eq!(t[0][0], t[1][1]);
    }

    #[test]
    fn symmetrized_joints_satisfy_the_inequality(
        weights in std::array::from_fn::<_, 8, _>(|_| 1e-3f64..1.0)
    ) {
        let joint = JointDistribution3::from_unnormalized(weights)
            .unwrap()
            .symmetrized();
        for v in 0..3 {
            prop_assert!((joint.marginal(v) - 0.5).abs() <= 1e-15);
        }
        let triple = triple_from_joint(&joint).unwrap();
        let slack = triple.p_a_plus_given_b_plus + triple.p_c_plus_given_b_minus
            - triple.p_a_plus_given_c_plus;
        prop_assert!(slack >= -1e-12);
        let ab = joint.pair_joint(0, 1);
        let cb = joint.pair_joint(2, 1);
        let ac = joint.pair_joint(0, 2);
        prop_assert!((triple.p_a_plus_given_b_plus - 2.0 * ab[0][0]).abs() <= 1e-12);
        prop_assert!((triple.p_c_plus_given_b_minus - 2.0 * cb[0][1]).abs() <= 1e-12);
        prop_assert!((triple.p_a_plus_given_c_plus - 2.0 * ac[0][0]).abs() <= 1e-12);
    }

    #[test]
    fn symmetrization_is_an_exact_projection(
        pa1 in 0.05f64..0.95,
        pb1 in 0.05f64..0.95,
        t1 in 0.05f64..0.95,
        t2 in 0.05f64..0.95,
        u1 in 0.05f64..0.95,
        u2 in 0.05f64..0.95,
    ) {
        let data = ContextualData::new(
            ["+1".into(), "-1".into()],
            ["+1".into(), "-1".into()],
            [pa1, 1.0 - pa1],
            [pb1, 1.0 - pb1],
            [[t1, 1.0 - t1], [t2, 1.0 - t2]],
            [[u1, 1.0 - u1], [u2, 1.0 - u2]],
        )
        .unwrap();
        let projected = data.symmetrized();
        let report = projected.check_conditions(1e-12);
        prop_assert!(report.r1);
        prop_assert!(report.doubly_stochastic);
        prop_assert_eq!(projected.symmetrized(), projected.clone());
        prop_assert_eq!(projected.p_a(), data.p_a());
        prop_assert_eq!(projected.p_b(), data.p_b());
    }
}
