//! Seeded random instances: Haar unitaries, mixed states, POVMs, channels.
//!
//! Every function takes the generator explicitly so callers can reproduce a
//! run from its seed.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::qcore::linalg::{
    projector, real, tensor, zeros, ComplexMatrix, ComplexVector, C64,
};
use crate::qcore::objects::{BipartiteState, DensityMatrix, MeasurementSet};
use crate::steering::Assemblage;

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im)
}

/// Matrix of i.i.d. standard complex Gaussians.
pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

/// Haar-distributed unitary (QR of a Ginibre matrix with the phases of the
/// triangular factor divided out).
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexMatrix {
    haar_isometry(d, d, rng)
}

/// `rows × cols` isometry (`cols ≤ rows`) with Haar-distributed range.
pub fn haar_isometry<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    assert!(cols <= rows, "isometry needs cols <= rows");
    let qr = ginibre(rows, cols, rng).qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..cols {
        let diag = r[(j, j)];
        let phase = if diag.norm() > 0.0 { diag / diag.norm() } else { real(1.0) };
        for e in q.column_mut(j).iter_mut() {
            *e *= phase;
        }
    }
    q
}

pub fn random_pure<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexVector {
    let v = ComplexVector::from_fn(d, |_, _| gaussian(rng));
    let n = v.norm();
    v / real(n)
}

/// Induced-measure mixed state `G G† / Tr(G G†)` with `G` of shape `d × rank`.
pub fn random_density<R: Rng + ?Sized>(d: usize, rank: usize, rng: &mut R) -> DensityMatrix {
    let g = ginibre(d, rank.max(1), rng);
    let m = &g * g.adjoint();
    let t = m.trace().re;
    DensityMatrix::from_trusted(m / real(t))
}

/// Random `k`-outcome POVM: `M_a = S^{-1/2} G_a S^{-1/2}` with `S = Σ G_a`.
pub fn random_povm<R: Rng + ?Sized>(d: usize, k: usize, rng: &mut R) -> Vec<ComplexMatrix> {
    let raw: Vec<ComplexMatrix> = (0..k)
        .map(|_| {
            let g = ginibre(d, d, rng);
            &g * g.adjoint()
        })
        .collect();
    let sum = raw.iter().fold(zeros(d, d), |acc, m| acc + m);
    let inv_sqrt = crate::qcore::linalg::spectral_map(&sum, |x| 1.0 / x.sqrt());
    raw.iter()
        .map(|m| crate::qcore::linalg::hermitian_part(&(&inv_sqrt * m * &inv_sqrt)))
        .collect()
}

pub fn random_measurement_set<R: Rng + ?Sized>(
    d: usize,
    inputs: usize,
    outcomes: usize,
    rng: &mut R,
) -> MeasurementSet {
    let sets = (0..inputs).map(|_| random_povm(d, outcomes, rng)).collect();
    MeasurementSet::from_trusted(d, sets)
}

/// Rank-one projective measurements in Haar-random bases.
pub fn random_pvm_set<R: Rng + ?Sized>(d: usize, inputs: usize, rng: &mut R) -> MeasurementSet {
    let sets = (0..inputs)
        .map(|_| {
            let u = haar_unitary(d, rng);
            (0..d)
                .map(|a| projector(&u.column(a).into_owned()))
                .collect()
        })
        .collect();
    MeasurementSet::from_trusted(d, sets)
}

/// Convex mixture of `terms` random product states.
pub fn random_separable<R: Rng + ?Sized>(
    dim_a: usize,
    dim_b: usize,
    terms: usize,
    rng: &mut R,
) -> BipartiteState {
    let weights: Vec<f64> = (0..terms).map(|_| rng.random::<f64>() + 1e-3).collect();
    let total: f64 = weights.iter().sum();
    let mut m = zeros(dim_a * dim_b, dim_a * dim_b);
    for w in weights {
        let a = random_density(dim_a, rng.random_range(1..=dim_a), rng);
        let b = random_density(dim_b, rng.random_range(1..=dim_b), rng);
        m += tensor(a.matrix(), b.matrix()) * real(w / total);
    }
    BipartiteState::new(dim_a, dim_b, DensityMatrix::from_trusted(m))
        .expect("dimensions are consistent by construction")
}

/// Pure state on `A ⊗ B` with Schmidt rank exactly `schmidt_rank`.
pub fn random_schmidt_rank_vector<R: Rng + ?Sized>(
    dim_a: usize,
    dim_b: usize,
    schmidt_rank: usize,
    rng: &mut R,
) -> ComplexVector {
    assert!(schmidt_rank >= 1 && schmidt_rank <= dim_a.min(dim_b));
    let u = haar_unitary(dim_a, rng);
    let v = haar_unitary(dim_b, rng);
    let coeffs: Vec<f64> = (0..schmidt_rank).map(|_| 0.2 + rng.random::<f64>()).collect();
    let norm = coeffs.iter().map(|c| c * c).sum::<f64>().sqrt();
    let mut psi = ComplexVector::zeros(dim_a * dim_b);
    for (k, c) in coeffs.iter().enumerate() {
        let term = u.column(k).into_owned().kronecker(&v.column(k).into_owned());
        psi += term * real(c / norm);
    }
    psi
}

/// Kraus operators of a random CPTP map, taken as blocks of a Haar isometry.
pub fn random_kraus<R: Rng + ?Sized>(
    dim_in: usize,
    dim_out: usize,
    num_kraus: usize,
    rng: &mut R,
) -> Vec<ComplexMatrix> {
    let v = haar_isometry(dim_out * num_kraus, dim_in, rng);
    (0..num_kraus)
        .map(|k| v.rows(k * dim_out, dim_out).into_owned())
        .collect()
}

/// Random response function `p(a|x,λ)` for the given outcome counts.
fn random_response<R: Rng + ?Sized>(outcomes: &[usize], rng: &mut R) -> Vec<Vec<f64>> {
    outcomes
        .iter()
        .map(|&k| {
            if rng.random::<f64>() < 0.5 {
                let pick = rng.random_range(0..k);
                (0..k).map(|a| if a == pick { 1.0 } else { 0.0 }).collect()
            } else {
                let w: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
                let t: f64 = w.iter().sum();
                w.into_iter().map(|v| v / t).collect()
            }
        })
        .collect()
}

/// Assemblage with an explicit local hidden state model of `terms` hidden
/// states, half of them with deterministic responses.
pub fn random_lhs_assemblage<R: Rng + ?Sized>(
    d: usize,
    outcomes: &[usize],
    terms: usize,
    rng: &mut R,
) -> Assemblage {
    let weights: Vec<f64> = (0..terms).map(|_| rng.random::<f64>() + 1e-3).collect();
    let total: f64 = weights.iter().sum();
    let mut inputs: Vec<Vec<ComplexMatrix>> =
        outcomes.iter().map(|&k| vec![zeros(d, d); k]).collect();
    for w in weights {
        let state = random_density(d, rng.random_range(1..=d), rng);
        let response = random_response(outcomes, rng);
        for (x, probs) in response.iter().enumerate() {
            for (a, p) in probs.iter().enumerate() {
                inputs[x][a] += state.matrix() * real(w / total * p);
            }
        }
    }
    Assemblage::from_trusted(d, inputs)
}

/// Jointly measurable set: a random parent POVM with `terms` outcomes
/// post-processed by random response functions.
pub fn random_jm_set<R: Rng + ?Sized>(
    d: usize,
    outcomes: &[usize],
    terms: usize,
    rng: &mut R,
) -> MeasurementSet {
    let parent = random_povm(d, terms, rng);
    let mut inputs: Vec<Vec<ComplexMatrix>> =
        outcomes.iter().map(|&k| vec![zeros(d, d); k]).collect();
    for g in &parent {
        let response = random_response(outcomes, rng);
        for (x, probs) in response.iter().enumerate() {
            for (a, p) in probs.iter().enumerate() {
                inputs[x][a] += g * real(*p);
            }
        }
    }
    MeasurementSet::from_trusted(d, inputs)
}
