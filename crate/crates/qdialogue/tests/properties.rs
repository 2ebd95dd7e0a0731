//! Property tests for the state engine invariants.

use num_complex::Complex64;
use proptest::prelude::*;
use qdialogue::qstate::{
    exact_distribution_pure, measure_projective, measure_qubit, Axis, Matrix2, MeasurementSpec,
    StateVector,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn arb_unitary() -> impl Strategy<Value = Matrix2> {
    // general SU(2) element from three angles
    (0.0..std::f64::consts::TAU, 0.0..std::f64::consts::TAU, 0.0..std::f64::consts::TAU).prop_map(
        |(theta, phi, lam)| {
            let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
            [
                [
                    Complex64::new(c, 0.0),
                    -Complex64::from_polar(s, lam),
                ],
                [
                    Complex64::from_polar(s, phi),
                    Complex64::from_polar(c, phi + lam),
                ],
            ]
        },
    )
}

fn arb_state(n_qubits: usize) -> impl Strategy<Value = StateVector> {
    let dim = 1 << n_qubits;
    proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), dim).prop_filter_map(
        "norm too small",
        move |raw| {
            let norm: f64 = raw.iter().map(|(re, im)| re * re + im * im).sum::<f64>().sqrt();
            if norm < 1e-3 {
                return None;
            }
            let amps = raw
                .iter()
                .map(|(re, im)| Complex64::new(re / norm, im / norm))
                .collect();
            StateVector::new(n_qubits, amps).ok()
        },
    )
}

proptest! {
    #[test]
    fn unitaries_preserve_the_norm(state in arb_state(3), u in arb_unitary(), qubit in 0usize..3) {
        let out = state.apply_1q(qubit, &u).unwrap();
        prop_assert!((out.norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn exact_distributions_sum_to_one(state in arb_state(2), ax0 in prop::bool::ANY, ax1 in prop::bool::ANY) {
        let axis = |b: bool| if b { Axis::X } else { Axis::Z };
        let spec = [(0, axis(ax0)), (1, axis(ax1))];
        let table = exact_distribution_pure(&state, &MeasurementSpec::PerQubit(&spec)).unwrap();
        let total: f64 = table.iter().map(|(_, p)| p).sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
        prop_assert!(table.iter().all(|(_, p)| *p >= 0.0));
    }

    #[test]
    fn measurement_is_idempotent(state in arb_state(2), qubit in 0usize..2, ax in prop::bool::ANY, seed in 0u64..1000) {
        let axis = if ax { Axis::X } else { Axis::Z };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let first = measure_qubit(&state, qubit, axis, &mut rng).unwrap();
        for _ in 0..4 {
            let again = measure_qubit(&first.post_state, qubit, axis, &mut rng).unwrap();
            prop_assert_eq!(first.bit, again.bit);
        }
    }

    #[test]
    fn projective_collapse_is_reproducible(state in arb_state(3), seed in 0u64..1000) {
        let members = qdialogue::ghz_codec::ghz_family().members();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let first = measure_projective(&state, members, &mut rng).unwrap();
        let again = measure_projective(&first.post_state, members, &mut rng).unwrap();
        prop_assert_eq!(first.index, again.index);
    }
}
