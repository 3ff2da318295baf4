use noisereach::channels::{
    apply_product_channel, channel_from_environment_gram, random_local_channel, EnvironmentGram,
    LocalChannel,
};
use noisereach::json::{state_from_str, state_to_string};
use noisereach::locc::can_convert;
use noisereach::qcore::random::{gaussian_matrix, haar_state, haar_unitary, random_density, rng_from_seed};
use noisereach::qcore::{
    distance, partial_trace, schmidt_decompose, Bipartition, CMatrix, Metric, PureState, State,
    SystemShape,
};
use noisereach::reach::lccc_obstruction_check;
use noisereach::slocc::classify_three_qubit;
use num_complex::Complex64;
use proptest::prelude::*;

fn max_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn tr(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn tensor_product_is_associative(seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let a = haar_state(&SystemShape::new(vec![2]).unwrap(), &mut rng);
        let b = haar_state(&SystemShape::new(vec![3]).unwrap(), &mut rng);
        let c = haar_state(&SystemShape::new(vec![2]).unwrap(), &mut rng);
        let left = a.tensor(&b).unwrap().tensor(&c).unwrap();
        let right = a.tensor(&b.tensor(&c).unwrap()).unwrap();
        prop_assert_eq!(left.shape(), right.shape());
        prop_assert!((left.amplitudes() - right.amplitudes()).norm() < 1e-12);
    }

    #[test]
    fn marginal_of_product_is_factor(seed in any::<u64>(), rank_a in 1usize..=2, rank_b in 1usize..=3) {
        let mut rng = rng_from_seed(seed);
        let a = random_density(&SystemShape::new(vec![2]).unwrap(), rank_a, &mut rng).unwrap();
        let b = random_density(&SystemShape::new(vec![3]).unwrap(), rank_b, &mut rng).unwrap();
        let ab = a.tensor(&b).unwrap();
        prop_assert!(max_diff(partial_trace(&ab, &[0]).unwrap().matrix(), a.matrix()) < 1e-12);
        prop_assert!(max_diff(partial_trace(&ab, &[1]).unwrap().matrix(), b.matrix()) < 1e-12);
    }

    #[test]
    fn schmidt_coefficients_ignore_local_unitaries(seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let shape = SystemShape::new(vec![2, 3]).unwrap();
        let psi = haar_state(&shape, &mut rng);
        let moved = psi
            .apply_local(0, &haar_unitary(2, &mut rng)).unwrap()
            .apply_local(1, &haar_unitary(3, &mut rng)).unwrap();
        let cut = Bipartition::two_party();
        let a = schmidt_decompose(&psi, &cut).unwrap().coefficients;
        let b = schmidt_decompose(&moved, &cut).unwrap().coefficients;
        prop_assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn trace_distance_is_a_metric(seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let shape = SystemShape::qubits(2);
        let r: Vec<_> = (1..=3).map(|k| random_density(&shape, k, &mut rng).unwrap()).collect();
        let d = |i: usize, j: usize| distance(Metric::Trace, &r[i], &r[j]).unwrap();
        prop_assert!(d(0, 0).abs() < 1e-12);
        prop_assert!((d(0, 1) - d(1, 0)).abs() < 1e-12);
        prop_assert!(d(0, 2) <= d(0, 1) + d(1, 2) + 1e-12);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&d(0, 1)));
    }

    #[test]
    fn gram_round_trip_preserves_action(seed in any::<u64>(), e in 1usize..=9) {
        let ch = random_local_channel(3, e, seed).unwrap();
        let back = channel_from_environment_gram(&EnvironmentGram::from_channel(&ch)).unwrap();
        let mut rng = rng_from_seed(seed ^ 1);
        let x = gaussian_matrix(3, 3, &mut rng);
        prop_assert!(max_diff(&ch.apply(&x), &back.apply(&x)) < 1e-9);
    }

    #[test]
    fn composition_matches_sequential_application(seed in any::<u64>()) {
        let a = random_local_channel(2, 3, seed).unwrap();
        let b = random_local_channel(2, 2, seed.wrapping_add(1)).unwrap();
        let ab = a.compose(&b).unwrap();
        prop_assert!(ab.kraus().len() <= 4);
        prop_assert!(ab.completeness_residual() < 1e-9);
        let mut rng = rng_from_seed(seed);
        let x = gaussian_matrix(2, 2, &mut rng);
        prop_assert!(max_diff(&ab.apply(&x), &a.apply(&b.apply(&x))) < 1e-9);
    }

    #[test]
    fn adjoint_is_dual_under_trace(seed in any::<u64>(), e in 1usize..=4) {
        let ch = random_local_channel(2, e, seed).unwrap();
        let mut rng = rng_from_seed(seed ^ 7);
        let x = gaussian_matrix(2, 2, &mut rng);
        let y = gaussian_matrix(2, 2, &mut rng);
        let lhs = tr(&(&y * ch.apply(&x)));
        let rhs = tr(&(ch.adjoint().apply(&y) * &x));
        prop_assert!((lhs - rhs).norm() < 1e-10);
        let unit = ch.adjoint().apply(&CMatrix::identity(2, 2));
        prop_assert!(max_diff(&unit, &CMatrix::identity(2, 2)) < 1e-9);
    }

    #[test]
    fn slocc_class_survives_invertible_local_maps(seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let psi = haar_state(&SystemShape::qubits(3), &mut rng);
        let before = classify_three_qubit(&psi).unwrap();
        let mut moved = psi.clone();
        for k in 0..3 {
            moved = moved.apply_local(k, &gaussian_matrix(2, 2, &mut rng)).unwrap();
        }
        prop_assert_eq!(before, classify_three_qubit(&moved).unwrap());
    }

    #[test]
    fn convertibility_is_transitive(seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let shape = SystemShape::new(vec![3, 3]).unwrap();
        let cut = Bipartition::two_party();
        let s: Vec<PureState> = (0..3).map(|_| haar_state(&shape, &mut rng)).collect();
        for (a, b, c) in [(0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)] {
            if can_convert(&s[a], &s[b], &cut).unwrap() && can_convert(&s[b], &s[c], &cut).unwrap() {
                prop_assert!(can_convert(&s[a], &s[c], &cut).unwrap());
            }
        }
    }

    #[test]
    fn lc_outputs_are_never_certified_non_lccc(seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let shape = SystemShape::qubits(3);
        let psi = haar_state(&shape, &mut rng);
        // one two-outcome channel keeps the output at rank two
        let chans = vec![
            random_local_channel(2, 2, seed).unwrap(),
            LocalChannel::unitary(haar_unitary(2, &mut rng)).unwrap(),
            LocalChannel::identity(2),
        ];
        let rho = apply_product_channel(&chans, &psi.to_density()).unwrap();
        prop_assert!(!lccc_obstruction_check(&rho).is_not_lccc());

        let bip = SystemShape::qubits(2);
        let phi = haar_state(&bip, &mut rng);
        let chans = vec![random_local_channel(2, 3, seed).unwrap(), random_local_channel(2, 2, seed ^ 3).unwrap()];
        let rho = apply_product_channel(&chans, &phi.to_density()).unwrap();
        prop_assert_eq!(lccc_obstruction_check(&rho).verdict(), "LCCCBipartite");
    }

    #[test]
    fn state_files_round_trip_exactly(seed in any::<u64>(), rank in 1usize..=4) {
        let mut rng = rng_from_seed(seed);
        let shape = SystemShape::new(vec![2, 2]).unwrap();
        let rho = State::Density(random_density(&shape, rank, &mut rng).unwrap());
        let s = state_to_string(&rho);
        let back = state_from_str(&s).unwrap();
        prop_assert_eq!(state_to_string(&back), s);
        let psi = State::Pure(haar_state(&shape, &mut rng));
        let s = state_to_string(&psi);
        prop_assert_eq!(state_to_string(&state_from_str(&s).unwrap()), s);
    }
}
