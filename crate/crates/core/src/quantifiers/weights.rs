use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::linalg::{
    eigh, hermitian_part, identity, max_abs, max_abs_diff, min_eigenvalue, partial_transpose_b, real,
    spectral_map, zeros, ComplexMatrix,
};
use crate::qcore::objects::{BipartiteState, DensityMatrix, MeasurementSet};
use crate::quantifiers::certificates::{
    EntanglementWitness, IncompatibilityWitness, SteeringInequality,
};
use crate::quantifiers::conic::{solve_conic, ConicProblem, ConicSolution, SolverError, SparseOp};
use crate::quantifiers::{
    check_level, hermitian_basis, DeterministicStrategySet, WeightResult, MAX_JOINT_DIM,
    MAX_LOCAL_DIM,
};
use crate::steering::{steer, Assemblage};

/// Slack allowed by `check_weight_inequality`.
pub const INEQUALITY_SLACK: f64 = 1e-5;

/// Below this the free (or residual) part is considered absent.
const NEGLIGIBLE: f64 = 1e-9;

/// Eigenvalues below this fraction of the largest are outside the support.
const SUPPORT_CUTOFF: f64 = 1e-10;

/// Relative cover lost when extending a certificate off the support.
const LIFT_DEFICIT: f64 = 1e-8;

fn psd_part(m: &ComplexMatrix) -> ComplexMatrix {
    spectral_map(m, |x| x.max(0.0))
}

fn negativity(m: &ComplexMatrix) -> f64 {
    (-min_eigenvalue(m)).max(0.0)
}

fn check_local_dim(d: usize) -> Result<()> {
    if d > MAX_LOCAL_DIM {
        return Err(Error::ScaleExceeded(format!(
            "local dimension {d} exceeds {MAX_LOCAL_DIM}"
        )));
    }
    Ok(())
}

/// Hermitian matrix `Σ_k y_k B_k` for the constraint rows `start..start+d²`.
fn dual_matrix(sol: &ConicSolution, basis: &[SparseOp], start: usize, d: usize) -> ComplexMatrix {
    let mut m = zeros(d, d);
    for (k, op) in basis.iter().enumerate() {
        op.add_scaled_to(&mut m, sol.y[start + k]);
    }
    m
}

fn not_converged(sol: &ConicSolution) -> Error {
    Error::Solver(SolverError::NotConverged {
        iterations: sol.iterations,
        gap: sol.gap,
        primal_residual: sol.primal_residual,
        dual_residual: sol.dual_residual,
    })
}

fn scale_nested(inputs: &[Vec<ComplexMatrix>], s: f64) -> Vec<Vec<ComplexMatrix>> {
    inputs
        .iter()
        .map(|v| v.iter().map(|m| m * real(s)).collect())
        .collect()
}

fn nested_diff(a: &[Vec<ComplexMatrix>], b: &[Vec<ComplexMatrix>]) -> Vec<Vec<ComplexMatrix>> {
    a.iter()
        .zip(b)
        .map(|(u, v)| u.iter().zip(v).map(|(x, y)| hermitian_part(&(x - y))).collect())
        .collect()
}

/// Splits `input = free_unnormalised + rest` into normalised parts and the
/// reconstruction error at the reported (clamped) weight.
fn split_parts(
    input: &[Vec<ComplexMatrix>],
    free_unnormalised: &[Vec<ComplexMatrix>],
    raw_weight: f64,
    value: f64,
) -> (Option<Vec<Vec<ComplexMatrix>>>, Option<Vec<Vec<ComplexMatrix>>>, f64) {
    let free = (1.0 - raw_weight > NEGLIGIBLE)
        .then(|| scale_nested(free_unnormalised, 1.0 / (1.0 - raw_weight)));
    let residual = (raw_weight > NEGLIGIBLE)
        .then(|| scale_nested(&nested_diff(input, free_unnormalised), 1.0 / raw_weight));
    let mut error: f64 = 0.0;
    for (x, members) in input.iter().enumerate() {
        for (a, target) in members.iter().enumerate() {
            let d = target.nrows();
            let mut rebuilt = zeros(d, d);
            if let Some(f) = &free {
                rebuilt += &f[x][a] * real(1.0 - value);
            }
            if let Some(r) = &residual {
                rebuilt += &r[x][a] * real(value);
            }
            error = error.max(max_abs_diff(&rebuilt, target));
        }
    }
    (free, residual, error)
}

/// Steering weight relative to assemblages with a local hidden state model.
pub fn steering_weight(sigma: &Assemblage) -> Result<WeightResult<Assemblage, SteeringInequality>> {
    let d = sigma.dim();
    check_local_dim(d)?;
    let outcomes: Vec<usize> = (0..sigma.num_inputs()).map(|x| sigma.outcomes(x)).collect();
    let strategies = DeterministicStrategySet::new(&outcomes)?;
    let basis = hermitian_basis(d);

    let mut p = ConicProblem::new();
    let tau: Vec<usize> = (0..strategies.len())
        .map(|_| {
            let b = p.add_block(d);
            p.set_objective(b, -identity(d));
            b
        })
        .collect();
    let slack: Vec<Vec<usize>> = outcomes
        .iter()
        .map(|&k| (0..k).map(|_| p.add_block(d)).collect())
        .collect();
    let mut rows = Vec::new();
    for (x, &k) in outcomes.iter().enumerate() {
        for a in 0..k {
            rows.push(p.num_constraints());
            let answering: Vec<usize> = strategies.answering(x, a).collect();
            for op in &basis {
                let mut terms = vec![(slack[x][a], op.clone())];
                terms.extend(answering.iter().map(|&mu| (tau[mu], op.clone())));
                p.add_sparse_constraint(terms, op.re_trace_with(sigma.member(a, x)));
            }
        }
    }
    let sol = solve_conic(&p)?;

    // Dual: F_{a|x} = −Y_{a|x}, rescaled so every strategy sum dominates 1.
    let mut operators: Vec<Vec<ComplexMatrix>> = Vec::new();
    let mut row = 0;
    for &k in &outcomes {
        let mut per = Vec::with_capacity(k);
        for _ in 0..k {
            per.push(psd_part(&-dual_matrix(&sol, &basis, rows[row], d)));
            row += 1;
        }
        operators.push(per);
    }
    let cover = (0..strategies.len())
        .map(|mu| {
            let sum = strategies.strategies()[mu]
                .iter()
                .enumerate()
                .fold(zeros(d, d), |acc, (x, &a)| acc + &operators[x][a]);
            min_eigenvalue(&sum)
        })
        .fold(f64::INFINITY, f64::min);
    if !(cover > 0.5) {
        return Err(not_converged(&sol));
    }
    let operators = scale_nested(&operators, 1.0 / cover);
    let certificate = SteeringInequality {
        operators,
        strategies: strategies.clone(),
    };
    let certified_lower_bound = certificate.weight_bound(sigma)?;

    // Primal: LHS part L_{a|x} = Σ_μ D(a|x,μ) τ_μ.
    let hidden: Vec<ComplexMatrix> = tau.iter().map(|&b| psd_part(&sol.x[b])).collect();
    let lhs: Vec<Vec<ComplexMatrix>> = outcomes
        .iter()
        .enumerate()
        .map(|(x, &k)| {
            (0..k)
                .map(|a| {
                    strategies
                        .answering(x, a)
                        .fold(zeros(d, d), |acc, mu| acc + &hidden[mu])
                })
                .collect()
        })
        .collect();
    let raw_weight = 1.0 - hidden.iter().map(|t| t.trace().re).sum::<f64>();
    let value = raw_weight.clamp(0.0, 1.0);
    let primal_residual = nested_diff(sigma.inputs(), &lhs)
        .iter()
        .flatten()
        .map(negativity)
        .fold(0.0, f64::max);
    let (free, residual, reconstruction_error) =
        split_parts(sigma.inputs(), &lhs, raw_weight, value);
    Ok(WeightResult {
        value,
        free: free.map(|f| Assemblage::from_trusted(d, f)),
        residual: residual.map(|r| Assemblage::from_trusted(d, r)),
        components: hidden,
        certificate,
        certified_lower_bound,
        gap: value - certified_lower_bound,
        primal_residual,
        reconstruction_error,
        exact: true,
        iterations: sol.iterations,
    })
}

/// Incompatibility weight relative to jointly measurable sets.
pub fn incompatibility_weight(
    measurements: &MeasurementSet,
) -> Result<WeightResult<MeasurementSet, IncompatibilityWitness>> {
    let d = measurements.dim();
    check_local_dim(d)?;
    let outcomes: Vec<usize> = (0..measurements.num_inputs())
        .map(|x| measurements.outcomes(x))
        .collect();
    let strategies = DeterministicStrategySet::new(&outcomes)?;
    let basis = hermitian_basis(d);

    let mut p = ConicProblem::new();
    let parent: Vec<usize> = (0..strategies.len()).map(|_| p.add_block(d)).collect();
    let slack: Vec<Vec<usize>> = outcomes
        .iter()
        .map(|&k| (0..k).map(|_| p.add_block(d)).collect())
        .collect();
    let t = p.add_block(1);
    p.set_objective(t, ComplexMatrix::from_element(1, 1, real(-1.0)));
    let mut rows = Vec::new();
    for (x, &k) in outcomes.iter().enumerate() {
        for a in 0..k {
            rows.push(p.num_constraints());
            let answering: Vec<usize> = strategies.answering(x, a).collect();
            for op in &basis {
                let mut terms = vec![(slack[x][a], op.clone())];
                terms.extend(answering.iter().map(|&mu| (parent[mu], op.clone())));
                p.add_sparse_constraint(terms, op.re_trace_with(measurements.effect(a, x)));
            }
        }
    }
    // Σ_μ G_μ = t·1
    let normalisation_row = p.num_constraints();
    for op in &basis {
        let mut terms: Vec<(usize, SparseOp)> = parent.iter().map(|&b| (b, op.clone())).collect();
        let tr = op.re_trace_with(&identity(d));
        if tr != 0.0 {
            terms.push((t, SparseOp::from_entries(1, vec![(0, 0, real(-tr))])));
        }
        p.add_sparse_constraint(terms, 0.0);
    }
    let sol = solve_conic(&p)?;

    let mut operators: Vec<Vec<ComplexMatrix>> = Vec::new();
    let mut row = 0;
    for &k in &outcomes {
        let mut per = Vec::with_capacity(k);
        for _ in 0..k {
            per.push(psd_part(&-dual_matrix(&sol, &basis, rows[row], d)));
            row += 1;
        }
        operators.push(per);
    }
    let mut offset = hermitian_part(&dual_matrix(&sol, &basis, normalisation_row, d));
    let cover = (0..strategies.len())
        .map(|mu| {
            let sum = strategies.strategies()[mu]
                .iter()
                .enumerate()
                .fold(zeros(d, d), |acc, (x, &a)| acc + &operators[x][a]);
            min_eigenvalue(&(sum - &offset))
        })
        .fold(f64::INFINITY, f64::min);
    if cover < 0.0 {
        offset += identity(d) * real(cover);
    }
    let scale = offset.trace().re;
    if !(scale > 0.5) {
        return Err(not_converged(&sol));
    }
    let certificate = IncompatibilityWitness {
        operators: scale_nested(&operators, 1.0 / scale),
        offset: &offset / real(scale),
        strategies: strategies.clone(),
    };
    let certified_lower_bound = certificate.weight_bound(measurements)?;

    let parents: Vec<ComplexMatrix> = parent.iter().map(|&b| psd_part(&sol.x[b])).collect();
    let jm: Vec<Vec<ComplexMatrix>> = outcomes
        .iter()
        .enumerate()
        .map(|(x, &k)| {
            (0..k)
                .map(|a| {
                    strategies
                        .answering(x, a)
                        .fold(zeros(d, d), |acc, mu| acc + &parents[mu])
                })
                .collect()
        })
        .collect();
    let total = parents.iter().fold(zeros(d, d), |acc, g| acc + g);
    let kept = total.trace().re / d as f64;
    let raw_weight = 1.0 - kept;
    let value = raw_weight.clamp(0.0, 1.0);
    let normalisation_error = max_abs(&(&total - identity(d) * real(kept)));
    let primal_residual = nested_diff(measurements.inputs(), &jm)
        .iter()
        .flatten()
        .map(negativity)
        .fold(normalisation_error, f64::max);
    let (free, residual, reconstruction_error) =
        split_parts(measurements.inputs(), &jm, raw_weight, value);
    Ok(WeightResult {
        value,
        free: free.map(|f| MeasurementSet::from_trusted(d, f)),
        residual: residual.map(|r| MeasurementSet::from_trusted(d, r)),
        components: parents,
        certificate,
        certified_lower_bound,
        gap: value - certified_lower_bound,
        primal_residual,
        reconstruction_error,
        exact: true,
        iterations: sol.iterations,
    })
}

/// Entanglement weight relative to PPT states. Exact for joint dimension at
/// most 6, where PPT states are exactly the separable ones; a lower bound on
/// the separable weight otherwise.
pub fn entanglement_weight_ppt(
    rho: &BipartiteState,
) -> Result<WeightResult<BipartiteState, EntanglementWitness>> {
    let (da, db) = (rho.dim_a(), rho.dim_b());
    let n = da * db;
    if n > MAX_JOINT_DIM {
        return Err(Error::ScaleExceeded(format!(
            "joint dimension {n} exceeds {MAX_JOINT_DIM}"
        )));
    }
    // X and S lie in the support of ρ, so both are written as V X' V†.
    let (values, vectors) = eigh(rho.matrix());
    let top = values.iter().copied().fold(0.0, f64::max);
    let support: Vec<usize> = (0..n).filter(|&k| values[k] > SUPPORT_CUTOFF * top).collect();
    let r = support.len();
    let v = ComplexMatrix::from_fn(n, r, |i, k| vectors[(i, support[k])]);
    let reduced = hermitian_part(&(v.adjoint() * rho.matrix() * &v));

    let mut p = ConicProblem::new();
    let x = p.add_block(r);
    p.set_objective(x, -identity(r));
    let s = p.add_block(r);
    let z = p.add_block(n);
    let small = hermitian_basis(r);
    for op in &small {
        p.add_sparse_constraint(vec![(x, op.clone()), (s, op.clone())], op.re_trace_with(&reduced));
    }
    let ppt_row = p.num_constraints();
    let basis = hermitian_basis(n);
    for op in &basis {
        let flipped = -(v.adjoint() * partial_transpose_b(&op.to_dense(), da, db) * &v);
        p.add_sparse_constraint(vec![(z, op.clone()), (x, SparseOp::from_dense(&flipped))], 0.0);
    }
    let sol = solve_conic(&p)?;

    let g = psd_part(&-dual_matrix(&sol, &basis, ppt_row, n));
    let g_flip = partial_transpose_b(&g, da, db);
    let f_support = v.clone() * psd_part(&-dual_matrix(&sol, &small, 0, r)) * v.adjoint();
    let reduced_cover = min_eigenvalue(&(v.adjoint() * (&f_support - &g_flip) * &v));
    if !(reduced_cover > 0.5) {
        return Err(not_converged(&sol));
    }
    // Off the support F is free; raising it there by `lift` leaves a cover
    // deficit of at most ‖coupling‖²/(lift − ‖G^{T_B}‖ − cover).
    let complement = identity(n) - &v * v.adjoint();
    let (f, cover) = if r < n {
        let coupling = (v.adjoint() * &g_flip * &complement).norm();
        let lift = g_flip.norm() + reduced_cover + coupling * coupling / (LIFT_DEFICIT * reduced_cover);
        let f = hermitian_part(&(&f_support + &complement * real(lift)));
        let cover = min_eigenvalue(&(&f - &g_flip));
        (f, cover)
    } else {
        (f_support, reduced_cover)
    };
    if !(cover > 0.5) {
        return Err(not_converged(&sol));
    }
    let certificate = EntanglementWitness {
        dim_a: da,
        dim_b: db,
        operator: &f / real(cover),
        ppt_operator: &g / real(cover),
    };
    let certified_lower_bound = certificate.weight_bound(rho)?;

    let ppt = hermitian_part(&(&v * psd_part(&sol.x[x]) * v.adjoint()));
    let raw_weight = 1.0 - ppt.trace().re;
    let value = raw_weight.clamp(0.0, 1.0);
    let primal_residual = negativity(&hermitian_part(&(rho.matrix() - &ppt)))
        .max(negativity(&partial_transpose_b(&ppt, da, db)));
    let (free, residual, reconstruction_error) = split_parts(
        &[vec![rho.matrix().clone()]],
        &[vec![ppt.clone()]],
        raw_weight,
        value,
    );
    let to_state = |mut parts: Vec<Vec<ComplexMatrix>>| {
        let m = parts.remove(0).remove(0);
        BipartiteState::new(da, db, DensityMatrix::from_trusted(m))
    };
    Ok(WeightResult {
        value,
        free: free.map(to_state).transpose()?,
        residual: residual.map(to_state).transpose()?,
        components: vec![ppt],
        certificate,
        certified_lower_bound,
        gap: value - certified_lower_bound,
        primal_residual,
        reconstruction_error,
        exact: n <= 6,
        iterations: sol.iterations,
    })
}

pub fn steering_weight_at_level(
    sigma: &Assemblage,
    n: usize,
) -> Result<WeightResult<Assemblage, SteeringInequality>> {
    check_level(n)?;
    steering_weight(sigma)
}

pub fn incompatibility_weight_at_level(
    measurements: &MeasurementSet,
    n: usize,
) -> Result<WeightResult<MeasurementSet, IncompatibilityWitness>> {
    check_level(n)?;
    incompatibility_weight(measurements)
}

pub fn entanglement_weight_at_level(
    rho: &BipartiteState,
    n: usize,
) -> Result<WeightResult<BipartiteState, EntanglementWitness>> {
    check_level(n)?;
    entanglement_weight_ppt(rho)
}

/// Both sides of `W_steer(steer(ρ, M)) ≤ W_incomp(M) · W_ent(ρ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightInequality {
    pub lhs: f64,
    pub rhs: f64,
    pub incompatibility_weight: f64,
    pub entanglement_weight: f64,
    /// `rhs − lhs`.
    pub slack: f64,
    pub holds: bool,
}

/// Evaluates the weight inequality on a two-qubit or qubit-qutrit state,
/// where the PPT relaxation is exact.
pub fn check_weight_inequality(
    measurements: &MeasurementSet,
    rho: &BipartiteState,
) -> Result<WeightInequality> {
    let (da, db) = (rho.dim_a(), rho.dim_b());
    if da * db > 6 || da < 2 || db < 2 {
        return Err(Error::Shape(format!(
            "the inequality check needs a 2x2, 2x3 or 3x2 state, got {da}x{db}"
        )));
    }
    let lhs = steering_weight(&steer(rho, measurements)?)?.value;
    let incompatibility_weight = incompatibility_weight(measurements)?.value;
    let entanglement_weight = entanglement_weight_ppt(rho)?.value;
    let rhs = incompatibility_weight * entanglement_weight;
    Ok(WeightInequality {
        lhs,
        rhs,
        incompatibility_weight,
        entanglement_weight,
        slack: rhs - lhs,
        holds: lhs <= rhs + INEQUALITY_SLACK,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::steering::{add_white_noise, isotropic, measurements_to_assemblage};

    fn qubit_mubs(eta: f64) -> MeasurementSet {
        add_white_noise(&MeasurementSet::fourier_mubs(2).unwrap(), eta).unwrap()
    }

    fn assert_contract<T, C>(r: &WeightResult<T, C>) {
        assert!((0.0..=1.0).contains(&r.value));
        assert!(r.gap.abs() < 1e-6, "gap {}", r.gap);
        assert!(r.primal_residual < 1e-7, "primal residual {}", r.primal_residual);
        assert!(r.reconstruction_error < 1e-7, "reconstruction {}", r.reconstruction_error);
    }

    #[test]
    fn product_state_assemblage_is_lhs() {
        let a = DensityMatrix::pure(&crate::qcore::linalg::ket(2, 0)).unwrap();
        let b = DensityMatrix::maximally_mixed(2);
        let rho = BipartiteState::product(&a, &b);
        let r = steering_weight(&steer(&rho, &qubit_mubs(1.0)).unwrap()).unwrap();
        assert_contract(&r);
        assert!(r.value < 1e-6);
        assert!(r.certificate.validity_margin() > -1e-9);
    }

    #[test]
    fn sharp_mubs_on_phi_plus() {
        let sigma = steer(&BipartiteState::phi_plus(2), &qubit_mubs(1.0)).unwrap();
        let r = steering_weight(&sigma).unwrap();
        assert_contract(&r);
        assert!((r.value - 1.0).abs() < 1e-6, "weight {}", r.value);
    }

    #[test]
    fn noisy_mubs_below_threshold_are_free() {
        let eta = std::f64::consts::FRAC_1_SQRT_2 - 1e-3;
        let sigma = steer(&isotropic(2, eta).unwrap(), &qubit_mubs(1.0)).unwrap();
        let r = steering_weight(&sigma).unwrap();
        assert_contract(&r);
        assert!(r.value < 1e-5);
        assert!(r.certified_lower_bound < 1e-5);
        let j = incompatibility_weight(&qubit_mubs(eta)).unwrap();
        assert_contract(&j);
        assert!(j.value < 1e-5);
        let j = incompatibility_weight(&qubit_mubs(std::f64::consts::FRAC_1_SQRT_2)).unwrap();
        assert!(j.value < 1e-5);
    }

    #[test]
    fn single_povm_is_compatible() {
        let m = MeasurementSet::new(2, vec![qubit_mubs(1.0).inputs()[0].clone()]).unwrap();
        let r = incompatibility_weight(&m).unwrap();
        assert_contract(&r);
        assert!(r.value < 1e-6);
    }

    #[test]
    fn incompatibility_matches_steering_at_maximal_mixing() {
        let m = qubit_mubs(0.9);
        let sigma =
            measurements_to_assemblage(&m, &DensityMatrix::maximally_mixed(2)).unwrap();
        let a = steering_weight(&sigma).unwrap().value;
        let b = incompatibility_weight(&m).unwrap().value;
        assert!((a - b).abs() < 1e-5, "{a} vs {b}");
    }

    #[test]
    fn entanglement_weights() {
        let r = entanglement_weight_ppt(&BipartiteState::phi_plus(2)).unwrap();
        assert_contract(&r);
        assert!((r.value - 1.0).abs() < 1e-6);
        assert!(r.exact);
        for eta in [0.0, 0.2, 1.0 / 3.0] {
            let r = entanglement_weight_ppt(&isotropic(2, eta).unwrap()).unwrap();
            assert_contract(&r);
            assert!(r.value < 1e-6, "eta {eta}: {}", r.value);
        }
        let r = entanglement_weight_ppt(&isotropic(2, 0.6).unwrap()).unwrap();
        assert!(r.value > 0.1);
        assert!(r.certificate.validity_margin() > -1e-9);
    }

    #[test]
    fn levels_above_one_rejected() {
        let m = qubit_mubs(1.0);
        assert!(matches!(
            incompatibility_weight_at_level(&m, 2),
            Err(Error::UnsupportedLevel(2))
        ));
        assert!(incompatibility_weight_at_level(&m, 1).is_ok());
    }

    #[test]
    fn inequality_on_phi_plus() {
        let r = check_weight_inequality(&qubit_mubs(1.0), &BipartiteState::phi_plus(2)).unwrap();
        assert!(r.holds);
    }
}
