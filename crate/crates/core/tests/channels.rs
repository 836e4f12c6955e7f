use hdsteer::channels::{
    apply, choi_of, dual_apply, kraus_from_decomposition, pib_witness_check, peb_certificate,
    peb_certificate_from_decomposition, state_to_channel, KrausChannel,
};
use hdsteer::qcore::linalg::{
    ket, max_abs_diff, outer, partial_trace_matrix, projector, rank, re_trace_product, real,
    tensor_vec, ComplexMatrix, ComplexVector, Subsystem, C64,
};
use hdsteer::random::{
    random_density, random_kraus, random_measurement_set, random_schmidt_rank_vector,
};
use hdsteer::steering::steer;
use hdsteer::witnesses::{iso_sn_threshold, mub_nsim_threshold};
use hdsteer::{BipartiteState, DensityMatrix, MeasurementSet};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn matrix_unit(d: usize, i: usize, j: usize) -> ComplexMatrix {
    outer(&ket(d, i), &ket(d, j))
}

/// The six eigenstates of the Pauli operators.
fn octahedron() -> Vec<ComplexVector> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let v = |a: C64, b: C64| ComplexVector::from_vec(vec![a, b]);
    vec![
        v(real(1.0), real(0.0)),
        v(real(0.0), real(1.0)),
        v(real(h), real(h)),
        v(real(h), real(-h)),
        v(real(h), C64::new(0.0, h)),
        v(real(h), C64::new(0.0, -h)),
    ]
}

/// Product-vector decomposition of the qubit depolarizing Choi state for
/// `η ≤ 1/3`: a 2-design part `|ψ⟩|ψ̄⟩` and a white-noise part `|i⟩|j⟩`.
fn depolarizing_product_ensemble(eta: f64) -> Vec<(f64, ComplexVector)> {
    let mut ensemble: Vec<(f64, ComplexVector)> = octahedron()
        .into_iter()
        .map(|psi| (3.0 * eta / 6.0, tensor_vec(&psi, &psi.conjugate())))
        .collect();
    for i in 0..2 {
        for j in 0..2 {
            ensemble.push(((1.0 - 3.0 * eta) / 4.0, tensor_vec(&ket(2, i), &ket(2, j))));
        }
    }
    ensemble
}

fn channels_agree(a: &KrausChannel, b: &KrausChannel) -> f64 {
    let d = a.dim_in();
    let mut worst: f64 = 0.0;
    for i in 0..d {
        for j in 0..d {
            let e = matrix_unit(d, i, j);
            worst = worst.max(max_abs_diff(
                &a.apply_operator(&e).unwrap(),
                &b.apply_operator(&e).unwrap(),
            ));
        }
    }
    worst
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(30))]

    #[test]
    fn heisenberg_duality(seed in any::<u64>(), d_in in 2usize..=3, d_out in 2usize..=3) {
        let mut r = rng(seed);
        let k = r.random_range(d_in.div_ceil(d_out)..=3);
        let ch = KrausChannel::new(d_in, d_out, random_kraus(d_in, d_out, k, &mut r)).unwrap();
        let rho = random_density(d_in, d_in, &mut r);
        let m = random_measurement_set(d_out, 2, 3, &mut r);
        let out = apply(&ch, &rho).unwrap();
        let back = dual_apply(&ch, &m).unwrap();
        for x in 0..2 {
            for a in 0..3 {
                let lhs = re_trace_product(m.effect(a, x), out.matrix());
                let rhs = re_trace_product(back.effect(a, x), rho.matrix());
                prop_assert!((lhs - rhs).abs() < 1e-12);
            }
        }
        prop_assert!(MeasurementSet::new(d_in, back.inputs().to_vec()).is_ok());
    }

    #[test]
    fn choi_roundtrip_on_matrix_units(seed in any::<u64>(), d_in in 2usize..=3, d_out in 2usize..=3) {
        let mut r = rng(seed);
        let k = r.random_range(d_in.div_ceil(d_out)..=4);
        let ch = KrausChannel::new(d_in, d_out, random_kraus(d_in, d_out, k, &mut r)).unwrap();
        let sigma = random_density(d_in, d_in, &mut r);
        let choi = choi_of(&ch, &sigma).unwrap();
        let back = state_to_channel(&choi.state, &sigma).unwrap();
        prop_assert!(channels_agree(&ch, &back) < 1e-9);
        prop_assert!(back.kraus().len() <= d_in * d_out);
    }

    #[test]
    fn transpose_closure(seed in any::<u64>()) {
        let mut r = rng(seed);
        let ch = KrausChannel::new(3, 3, random_kraus(3, 3, 2, &mut r)).unwrap();
        let m = random_measurement_set(3, 2, 3, &mut r);
        let direct = dual_apply(&ch, &m).unwrap().transpose();
        let conj = dual_apply(&ch.conjugate(), &m.transpose()).unwrap();
        prop_assert!(direct.max_deviation(&conj) < 1e-12);
        prop_assert!(MeasurementSet::new(3, direct.inputs().to_vec()).is_ok());
        prop_assert_eq!(peb_certificate(&ch).kraus_ranks, peb_certificate(&ch.conjugate()).kraus_ranks);
    }
}

#[test]
fn kraus_rank_equals_schmidt_rank() {
    let mut r = rng(21);
    for schmidt in 1..=3 {
        for _ in 0..5 {
            let psi = random_schmidt_rank_vector(3, schmidt, schmidt, &mut r);
            let rho = projector(&psi);
            let marginal =
                DensityMatrix::new(partial_trace_matrix(&rho, 3, schmidt, Subsystem::B).unwrap())
                    .unwrap();
            let state = BipartiteState::from_matrix(3, schmidt, rho).unwrap();
            let ch = state_to_channel(&state, &marginal).unwrap();
            let cert = peb_certificate(&ch);
            assert_eq!(cert.kraus_ranks, vec![schmidt]);
            assert_eq!(cert.n, schmidt);
        }
    }
}

#[test]
fn isotropic_choi_states_realise_depolarizing_channels() {
    for d in 2..=4 {
        for &eta in &[0.0, 0.3, 0.75, 1.0] {
            let ch = KrausChannel::depolarizing(d, eta).unwrap();
            let choi = choi_of(&ch, &DensityMatrix::maximally_mixed(d)).unwrap();
            let iso = hdsteer::steering::isotropic(d, eta).unwrap();
            assert!(max_abs_diff(choi.state.matrix(), iso.matrix()) < 1e-13);
        }
    }
}

#[test]
fn depolarizing_has_rank_one_kraus_below_separability() {
    let sigma = DensityMatrix::maximally_mixed(2);
    let boundary = iso_sn_threshold(2, 1).unwrap();
    for &eta in &[0.0, 0.1, 0.25, boundary] {
        let ensemble = depolarizing_product_ensemble(eta);
        let ch = kraus_from_decomposition(&ensemble, 2, 2, &sigma).unwrap();
        assert!(channels_agree(&ch, &KrausChannel::depolarizing(2, eta).unwrap()) < 1e-12);
        let cert = peb_certificate_from_decomposition(&ensemble, 2, 2, &sigma).unwrap();
        assert_eq!(cert.n, 1, "eta {eta}");
    }
    // The eigen-decomposition of the same Choi state is not a rank-one witness.
    let choi = choi_of(&KrausChannel::depolarizing(2, boundary).unwrap(), &sigma).unwrap();
    let eig = peb_certificate(&state_to_channel(&choi.state, &sigma).unwrap());
    assert_eq!(eig.n, 2);
}

#[test]
fn pib_refutation_only_above_mub_threshold() {
    let sigma = |d| DensityMatrix::maximally_mixed(d);
    for d in 2..=4 {
        for n in 1..d {
            let threshold = mub_nsim_threshold(d, n).unwrap();
            for i in 0..=20 {
                let eta = i as f64 / 20.0;
                if (eta - threshold).abs() < 1e-9 {
                    continue;
                }
                let ch = KrausChannel::depolarizing(d, eta).unwrap();
                let check = pib_witness_check(&ch, &sigma(d), n).unwrap();
                assert_eq!(check.refuted, eta > threshold, "d={d} n={n} eta={eta}");
            }
        }
    }
    let check = pib_witness_check(&KrausChannel::depolarizing(4, 0.5).unwrap(), &sigma(4), 1).unwrap();
    assert!(!check.refuted);
    let check = pib_witness_check(&KrausChannel::identity(4), &sigma(4), 3).unwrap();
    assert!(check.refuted);
}

#[test]
fn entanglement_breaking_channels_act_like_measure_and_prepare() {
    let mut r = rng(22);
    for _ in 0..10 {
        // Λ(ρ) = Σ_i ⟨e_i|ρ|e_i⟩ τ_i written with rank-one Kraus operators.
        let basis = hdsteer::random::haar_unitary(2, &mut r);
        let mut kraus = Vec::new();
        for i in 0..2 {
            let tau = random_density(2, 2, &mut r);
            let (values, vectors) = hdsteer::qcore::linalg::eigh(tau.matrix());
            for (k, &p) in values.iter().enumerate() {
                if p > 1e-12 {
                    let f = vectors.column(k).into_owned();
                    let e = basis.column(i).into_owned();
                    kraus.push(outer(&f, &e) * real(p.sqrt()));
                }
            }
        }
        let ch = KrausChannel::new(2, 2, kraus).unwrap();
        assert_eq!(peb_certificate(&ch).n, 1);
        let choi = choi_of(&ch, &DensityMatrix::maximally_mixed(2)).unwrap();
        let m = random_measurement_set(2, 2, 2, &mut r);
        let w = hdsteer::quantifiers::steering_weight(&steer(&choi.state, &m).unwrap()).unwrap();
        assert!(w.value < 1e-6);
        for k in ch.kraus() {
            assert!(rank(k) <= 1);
        }
    }
}
