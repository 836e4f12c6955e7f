use hdsteer::qcore::linalg::{identity, max_abs_diff, real};
use hdsteer::random::{
    haar_isometry, random_density, random_measurement_set, random_separable,
};
use hdsteer::steering::{
    add_white_noise, assemblage_to_measurements, isotropic, measurements_to_assemblage, steer,
    Assemblage,
};
use hdsteer::witnesses::{certify, witness_value, GhdsWitness};
use hdsteer::{BipartiteState, DensityMatrix, MeasurementSet};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn full_rank_roundtrip(seed in any::<u64>(), d in 2usize..=4) {
        let mut r = rng(seed);
        let m = random_measurement_set(d, 2, r.random_range(2..=d), &mut r);
        let marginal = random_density(d, d, &mut r);
        let sigma = measurements_to_assemblage(&m, &marginal).unwrap();
        let back = assemblage_to_measurements(&sigma);
        prop_assert!(back.is_full_rank());
        prop_assert!(back.measurements.max_deviation(&m) < 1e-10);
        prop_assert!(max_abs_diff(back.marginal.matrix(), marginal.matrix()) < 1e-12);
        let again = measurements_to_assemblage(&back.measurements, &back.marginal).unwrap();
        prop_assert!(again.max_deviation(&sigma) < 1e-12);
    }

    #[test]
    fn rank_deficient_roundtrip_on_support(seed in any::<u64>(), d in 2usize..=4) {
        let mut r = rng(seed);
        let k = r.random_range(1..d);
        let v = haar_isometry(d, k, &mut r);
        let m = random_measurement_set(k, 2, 2, &mut r);
        let small = measurements_to_assemblage(&m, &random_density(k, k, &mut r)).unwrap();
        let sigma = small.lift(&v).unwrap();
        let back = assemblage_to_measurements(&sigma);
        prop_assert_eq!(back.measurements.dim(), k);
        let rebuilt = measurements_to_assemblage(&back.measurements, &back.marginal)
            .unwrap()
            .lift(&back.support)
            .unwrap();
        prop_assert!(rebuilt.max_deviation(&sigma) < 1e-10);
    }

    #[test]
    fn steering_with_phi_plus_transposes(seed in any::<u64>(), d in 2usize..=4) {
        let mut r = rng(seed);
        let m = random_measurement_set(d, 3, 3, &mut r);
        let sigma = steer(&BipartiteState::phi_plus(d), &m).unwrap();
        let expected = m.transpose();
        for x in 0..3 {
            for a in 0..3 {
                let target = expected.effect(a, x) / real(d as f64);
                prop_assert!(max_abs_diff(sigma.member(a, x), &target) < 1e-12);
            }
        }
    }

    #[test]
    fn steered_assemblage_is_valid(seed in any::<u64>()) {
        let mut r = rng(seed);
        let rho = BipartiteState::new(2, 3, random_density(6, 3, &mut r)).unwrap();
        let m = random_measurement_set(2, 2, 3, &mut r);
        let sigma = steer(&rho, &m).unwrap();
        prop_assert!(Assemblage::new(3, sigma.inputs().to_vec()).is_ok());
    }
}

#[test]
fn noise_passes_between_state_and_measurements() {
    let mut r = rng(5);
    for d in 2..=4 {
        let m = random_measurement_set(d, 2, d, &mut r);
        for i in 0..=10 {
            let eta = i as f64 / 10.0;
            let lhs = steer(&BipartiteState::phi_plus(d), &add_white_noise(&m, eta).unwrap()).unwrap();
            let rhs = steer(&isotropic(d, eta).unwrap(), &m).unwrap();
            assert!(lhs.max_deviation(&rhs) < 1e-12, "d={d} eta={eta}");
        }
    }
}

#[test]
fn maximally_mixed_marginal_scales_effects() {
    let mut r = rng(6);
    let m = random_measurement_set(3, 2, 3, &mut r);
    let sigma = measurements_to_assemblage(&m, &DensityMatrix::maximally_mixed(3)).unwrap();
    for x in 0..2 {
        for a in 0..3 {
            assert!(max_abs_diff(sigma.member(a, x), &(m.effect(a, x) / real(3.0))) < 1e-14);
        }
    }
}

#[test]
fn rank_deficient_marginal_rejected_going_forward() {
    let m = MeasurementSet::fourier_mubs(2).unwrap();
    let pure = DensityMatrix::pure(&hdsteer::qcore::linalg::ket(2, 0)).unwrap();
    assert!(measurements_to_assemblage(&m, &pure).is_err());
}

#[test]
fn separable_states_never_certified() {
    let mut r = rng(7);
    let witness = GhdsWitness::new(3).unwrap();
    for _ in 0..100 {
        let terms = r.random_range(1..=6);
        let rho = random_separable(3, 3, terms, &mut r);
        let sigma = steer(&rho, &witness.measurements()).unwrap();
        let result = certify(&sigma).unwrap();
        assert!(result.violated_levels.is_empty(), "value {}", result.witness_value);
        assert_eq!(result.certified_sn, 1);
    }
}

#[test]
fn product_states_give_unsteerable_assemblages() {
    let mut r = rng(8);
    for _ in 0..5 {
        let a = random_density(2, 2, &mut r);
        let b = random_density(2, 2, &mut r);
        let m = random_measurement_set(2, 2, 2, &mut r);
        let sigma = steer(&BipartiteState::product(&a, &b), &m).unwrap();
        for x in 0..2 {
            for k in 0..2 {
                let p = (m.effect(k, x) * a.matrix()).trace().re;
                assert!(max_abs_diff(sigma.member(k, x), &(b.matrix() * real(p))) < 1e-13);
            }
        }
        let w = hdsteer::quantifiers::steering_weight(&sigma).unwrap();
        assert!(w.value < 1e-6);
    }
}

#[test]
fn separable_mixtures_compose_to_free_assemblages() {
    let mut r = rng(9);
    for _ in 0..5 {
        let rho = random_separable(2, 2, 3, &mut r);
        let m = random_measurement_set(2, 2, 2, &mut r);
        let w = hdsteer::quantifiers::steering_weight(&steer(&rho, &m).unwrap()).unwrap();
        assert!(w.value < 1e-6, "weight {}", w.value);
    }
}

#[test]
fn witness_is_linear_in_the_assemblage() {
    let mut r = rng(10);
    let witness = GhdsWitness::new(3).unwrap();
    let s1 = steer(&BipartiteState::new(3, 3, random_density(9, 4, &mut r)).unwrap(), &witness.measurements()).unwrap();
    let s2 = steer(&BipartiteState::new(3, 3, random_density(9, 2, &mut r)).unwrap(), &witness.measurements()).unwrap();
    for &p in &[0.0, 0.3, 0.8, 1.0] {
        let mix = Assemblage::convex_combination(&[(p, &s1), (1.0 - p, &s2)]).unwrap();
        let expected = p * witness_value(&s1, &witness).unwrap()
            + (1.0 - p) * witness_value(&s2, &witness).unwrap();
        assert!((witness_value(&mix, &witness).unwrap() - expected).abs() < 1e-12);
    }
}

#[test]
fn product_identity_state_steers_to_white_noise() {
    let d = 3;
    let rho = BipartiteState::from_matrix(d, d, identity(d * d) / real((d * d) as f64)).unwrap();
    let sigma = steer(&rho, &MeasurementSet::fourier_mubs(d).unwrap()).unwrap();
    for x in 0..2 {
        for a in 0..d {
            assert!(max_abs_diff(sigma.member(a, x), &(identity(d) / real((d * d) as f64))) < 1e-14);
        }
    }
}
