//! Convex-weight quantifiers at level n = 1: steering weight, incompatibility
//! weight and the entanglement weight relative to PPT states, each returned
//! with a primal decomposition and a dual certificate.
//!
//! The weight of an object `O` relative to a free set `F` is the least `λ`
//! with `O = (1 − λ) O_free + λ O_other`, `O_free ∈ F`.

pub mod certificates;
pub mod conic;
mod weights;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::linalg::{real, ComplexMatrix, C64};

pub use certificates::{EntanglementWitness, IncompatibilityWitness, SteeringInequality};
pub use conic::{solve_conic, ConicProblem, ConicSolution, SolverError};
pub use weights::{
    check_weight_inequality, entanglement_weight_at_level, entanglement_weight_ppt,
    incompatibility_weight, incompatibility_weight_at_level, steering_weight,
    steering_weight_at_level, WeightInequality, INEQUALITY_SLACK,
};

/// Largest local dimension accepted by the steering and incompatibility weights.
pub const MAX_LOCAL_DIM: usize = 6;
/// Largest number of deterministic strategies.
pub const MAX_STRATEGIES: usize = 4096;
/// Largest joint dimension accepted by the entanglement weight.
pub const MAX_JOINT_DIM: usize = 36;

/// All deterministic response functions `μ: x ↦ a` for the given outcome
/// counts, enumerated with input 0 varying fastest.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeterministicStrategySet {
    outcomes: Vec<usize>,
    strategies: Vec<Vec<usize>>,
}

impl DeterministicStrategySet {
    pub fn new(outcomes: &[usize]) -> Result<Self> {
        if outcomes.is_empty() || outcomes.contains(&0) {
            return Err(Error::Shape("every input needs at least one outcome".into()));
        }
        let mut count: usize = 1;
        for &k in outcomes {
            count = count
                .checked_mul(k)
                .filter(|&c| c <= MAX_STRATEGIES)
                .ok_or_else(|| {
                    Error::ScaleExceeded(format!(
                        "more than {MAX_STRATEGIES} deterministic strategies"
                    ))
                })?;
        }
        let strategies = (0..count)
            .map(|mut mu| {
                outcomes
                    .iter()
                    .map(|&k| {
                        let a = mu % k;
                        mu /= k;
                        a
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            outcomes: outcomes.to_vec(),
            strategies,
        })
    }

    pub fn len(&self) -> usize {
        self.strategies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strategies.is_empty()
    }

    pub fn outcomes(&self) -> &[usize] {
        &self.outcomes
    }

    pub fn strategies(&self) -> &[Vec<usize>] {
        &self.strategies
    }

    /// `D(a|x,μ) ∈ {0, 1}`.
    pub fn response(&self, mu: usize, a: usize, x: usize) -> f64 {
        if self.strategies[mu][x] == a {
            1.0
        } else {
            0.0
        }
    }

    /// Strategies answering `a` on input `x`.
    pub fn answering(&self, x: usize, a: usize) -> impl Iterator<Item = usize> + '_ {
        self.strategies
            .iter()
            .enumerate()
            .filter(move |(_, s)| s[x] == a)
            .map(|(mu, _)| mu)
    }
}

/// Optimal convex weight with the decomposition that attains it and a dual
/// certificate bounding it from below.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WeightResult<T, C> {
    pub value: f64,
    /// Normalised free part; absent when the weight is 1.
    pub free: Option<T>,
    /// Normalised non-free part; absent when the weight is 0.
    pub residual: Option<T>,
    /// Unnormalised building blocks of the free part (hidden states, parent
    /// POVM elements, or the PPT operator).
    pub components: Vec<ComplexMatrix>,
    pub certificate: C,
    /// Lower bound on the weight implied by the certificate.
    pub certified_lower_bound: f64,
    /// `value − certified_lower_bound`.
    pub gap: f64,
    /// Largest violation of the primal positivity and normalisation constraints.
    pub primal_residual: f64,
    /// Max abs entry of `(1 − value)·free + value·residual − input`.
    pub reconstruction_error: f64,
    /// False when the free set was relaxed and the value is only a lower bound.
    pub exact: bool,
    pub iterations: usize,
}

/// Orthonormal basis of `d × d` Hermitian matrices under `Re Tr(A B)`.
pub fn hermitian_basis(d: usize) -> Vec<conic::SparseOp> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut basis = Vec::with_capacity(d * d);
    for j in 0..d {
        basis.push(conic::SparseOp::from_entries(d, vec![(j, j, real(1.0))]));
    }
    for j in 0..d {
        for k in j + 1..d {
            basis.push(conic::SparseOp::from_entries(
                d,
                vec![(j, k, real(h)), (k, j, real(h))],
            ));
            basis.push(conic::SparseOp::from_entries(
                d,
                vec![(j, k, C64::new(0.0, h)), (k, j, C64::new(0.0, -h))],
            ));
        }
    }
    basis
}

fn check_level(n: usize) -> Result<()> {
    if n == 1 {
        Ok(())
    } else {
        Err(Error::UnsupportedLevel(n))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::linalg::re_trace_product;

    #[test]
    fn strategies_enumerated() {
        let s = DeterministicStrategySet::new(&[2, 3]).unwrap();
        assert_eq!(s.len(), 6);
        assert_eq!(s.strategies()[0], vec![0, 0]);
        assert_eq!(s.strategies()[1], vec![1, 0]);
        assert_eq!(s.strategies()[5], vec![1, 2]);
        for mu in 0..s.len() {
            for x in 0..2 {
                let total: f64 = (0..s.outcomes()[x]).map(|a| s.response(mu, a, x)).sum();
                assert_eq!(total, 1.0);
            }
        }
        assert_eq!(s.answering(1, 2).collect::<Vec<_>>(), vec![4, 5]);
    }

    #[test]
    fn strategy_limit() {
        assert!(DeterministicStrategySet::new(&[4; 6]).is_ok());
        assert!(matches!(
            DeterministicStrategySet::new(&[4; 7]),
            Err(Error::ScaleExceeded(_))
        ));
        assert!(DeterministicStrategySet::new(&[]).is_err());
    }

    #[test]
    fn basis_is_orthonormal() {
        for d in 1..5 {
            let b: Vec<ComplexMatrix> = hermitian_basis(d).iter().map(|o| o.to_dense()).collect();
            assert_eq!(b.len(), d * d);
            for i in 0..b.len() {
                assert!(crate::qcore::linalg::hermitian_deviation(&b[i]) < 1e-15);
                for j in 0..b.len() {
                    let expected = if i == j { 1.0 } else { 0.0 };
                    assert!((re_trace_product(&b[i], &b[j]) - expected).abs() < 1e-14);
                }
            }
        }
    }
}
