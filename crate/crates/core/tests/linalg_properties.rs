use hdsteer::qcore::linalg::{
    eigenvalues_h, identity, max_abs_diff, partial_trace_matrix, psd_pinv_sqrt, psd_sqrt,
    rank, tensor, transpose_in_basis, zeros, Subsystem,
};
use hdsteer::random::{ginibre, haar_unitary, random_density};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn sorted(v: nalgebra::DVector<f64>) -> Vec<f64> {
    let mut out: Vec<f64> = v.iter().copied().collect();
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn square_root_squares_back(seed in any::<u64>(), d in 2usize..=5) {
        let mut r = rng(seed);
        let g = ginibre(d, d, &mut r);
        let m = &g * g.adjoint();
        let s = psd_sqrt(&m).unwrap();
        prop_assert!(max_abs_diff(&(&s * &s), &m) < 1e-10 * (1.0 + m.norm()));
    }

    #[test]
    fn pseudo_inverse_root_on_support(seed in any::<u64>(), d in 2usize..=5) {
        let mut r = rng(seed);
        let k = r.random_range(1..=d);
        let rho = random_density(d, k, &mut r);
        let m = rho.matrix();
        let (inv, proj) = psd_pinv_sqrt(m);
        let s = psd_sqrt(m).unwrap();
        prop_assert!(max_abs_diff(&(&inv * &s), &proj) < 1e-8);
        prop_assert!(max_abs_diff(&(&inv * m * &inv), &proj) < 1e-8);
        prop_assert_eq!(rank(&proj), k);
    }

    #[test]
    fn transpose_preserves_spectrum(seed in any::<u64>(), d in 2usize..=5) {
        let mut r = rng(seed);
        let m = random_density(d, d, &mut r).into_matrix();
        let u = haar_unitary(d, &mut r);
        let t = transpose_in_basis(&m, &u).unwrap();
        let a = sorted(eigenvalues_h(&m));
        let b = sorted(eigenvalues_h(&t));
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-10);
        }
        let twice = transpose_in_basis(&t, &u).unwrap();
        prop_assert!(max_abs_diff(&twice, &m) < 1e-10);
    }

    #[test]
    fn partial_traces_of_products(seed in any::<u64>(), da in 1usize..=3, db in 1usize..=3) {
        let mut r = rng(seed);
        let a = random_density(da, da, &mut r).into_matrix();
        let b = random_density(db, db, &mut r).into_matrix();
        let ab = tensor(&a, &b);
        let ta = partial_trace_matrix(&ab, da, db, Subsystem::A).unwrap();
        let tb = partial_trace_matrix(&ab, da, db, Subsystem::B).unwrap();
        prop_assert!(max_abs_diff(&ta, &a) < 1e-13);
        prop_assert!(max_abs_diff(&tb, &b) < 1e-13);
    }
}

#[test]
fn transpose_in_computational_basis_is_plain_transpose() {
    let mut r = rng(3);
    let g = ginibre(3, 3, &mut r);
    assert!(max_abs_diff(&transpose_in_basis(&g, &identity(3)).unwrap(), &g.transpose()) < 1e-15);
}

#[test]
fn zero_matrix_has_zero_root() {
    let z = zeros(3, 3);
    assert!(max_abs_diff(&psd_sqrt(&z).unwrap(), &z) < 1e-15);
    let (inv, proj) = psd_pinv_sqrt(&z);
    assert!(max_abs_diff(&inv, &z) < 1e-15);
    assert!(max_abs_diff(&proj, &z) < 1e-15);
}
