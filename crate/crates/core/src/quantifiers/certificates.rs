//! Dual certificates returned by the weight programs. Each one is a linear
//! functional that is at least 1 on the whole free set, so its value `v` on
//! an object certifies a weight of at least `1 − v`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::linalg::{
    identity, min_eigenvalue, partial_transpose_b, re_trace_product, zeros, ComplexMatrix,
};
use crate::qcore::objects::{BipartiteState, MeasurementSet};
use crate::quantifiers::DeterministicStrategySet;
use crate::steering::Assemblage;

fn paired_value(operators: &[Vec<ComplexMatrix>], inputs: &[Vec<ComplexMatrix>]) -> Result<f64> {
    if operators.len() != inputs.len()
        || operators.iter().zip(inputs).any(|(f, s)| f.len() != s.len())
    {
        return Err(Error::Shape(
            "certificate and object have different input/outcome structure".into(),
        ));
    }
    let mut total = 0.0;
    for (fs, ss) in operators.iter().zip(inputs) {
        for (f, s) in fs.iter().zip(ss) {
            if f.shape() != s.shape() {
                return Err(Error::DimensionMismatch(format!(
                    "certificate operator is {}x{}, object is {}x{}",
                    f.nrows(),
                    f.ncols(),
                    s.nrows(),
                    s.ncols()
                )));
            }
            total += re_trace_product(f, s);
        }
    }
    Ok(total)
}

fn strategy_sum(
    operators: &[Vec<ComplexMatrix>],
    strategies: &DeterministicStrategySet,
    mu: usize,
) -> ComplexMatrix {
    let d = operators[0][0].nrows();
    strategies.strategies()[mu]
        .iter()
        .enumerate()
        .fold(zeros(d, d), |acc, (x, &a)| acc + &operators[x][a])
}

/// Steering inequality `Σ Tr(F_{a|x} σ_{a|x}) ≥ 1` on every LHS assemblage,
/// with `F_{a|x} ⪰ 0` and `Σ_x F_{μ(x)|x} ⪰ 1` for every strategy `μ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteeringInequality {
    pub operators: Vec<Vec<ComplexMatrix>>,
    pub strategies: DeterministicStrategySet,
}

impl SteeringInequality {
    pub fn lhs_bound(&self) -> f64 {
        1.0
    }

    pub fn evaluate(&self, sigma: &Assemblage) -> Result<f64> {
        paired_value(&self.operators, sigma.inputs())
    }

    /// Weight lower bound certified on `sigma`.
    pub fn weight_bound(&self, sigma: &Assemblage) -> Result<f64> {
        Ok(1.0 - self.evaluate(sigma)?)
    }

    /// `min(min_{a,x} λ_min(F_{a|x}), min_μ λ_min(Σ_x F_{μ(x)|x}) − 1)`;
    /// nonnegative exactly when the certificate is valid.
    pub fn validity_margin(&self) -> f64 {
        let psd = self
            .operators
            .iter()
            .flatten()
            .map(min_eigenvalue)
            .fold(f64::INFINITY, f64::min);
        let cover = (0..self.strategies.len())
            .map(|mu| min_eigenvalue(&strategy_sum(&self.operators, &self.strategies, mu)) - 1.0)
            .fold(f64::INFINITY, f64::min);
        psd.min(cover)
    }
}

/// Incompatibility witness `Σ Tr(F_{a|x} M_{a|x}) ≥ Tr V = 1` on every jointly
/// measurable set, with `F_{a|x} ⪰ 0` and `Σ_x F_{μ(x)|x} ⪰ V` for every `μ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IncompatibilityWitness {
    pub operators: Vec<Vec<ComplexMatrix>>,
    pub offset: ComplexMatrix,
    pub strategies: DeterministicStrategySet,
}

impl IncompatibilityWitness {
    pub fn jm_bound(&self) -> f64 {
        self.offset.trace().re
    }

    pub fn evaluate(&self, measurements: &MeasurementSet) -> Result<f64> {
        paired_value(&self.operators, measurements.inputs())
    }

    pub fn weight_bound(&self, measurements: &MeasurementSet) -> Result<f64> {
        Ok(1.0 - self.evaluate(measurements)?)
    }

    pub fn validity_margin(&self) -> f64 {
        let psd = self
            .operators
            .iter()
            .flatten()
            .map(min_eigenvalue)
            .fold(f64::INFINITY, f64::min);
        let cover = (0..self.strategies.len())
            .map(|mu| {
                min_eigenvalue(&(strategy_sum(&self.operators, &self.strategies, mu) - &self.offset))
            })
            .fold(f64::INFINITY, f64::min);
        psd.min(cover).min(self.jm_bound() - 1.0)
    }
}

/// Entanglement witness `Tr(F ρ) ≥ 1` on every PPT state, with `F, G ⪰ 0`
/// and `F − G^{T_B} ⪰ 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntanglementWitness {
    pub dim_a: usize,
    pub dim_b: usize,
    pub operator: ComplexMatrix,
    pub ppt_operator: ComplexMatrix,
}

impl EntanglementWitness {
    pub fn separable_bound(&self) -> f64 {
        1.0
    }

    pub fn evaluate(&self, rho: &BipartiteState) -> Result<f64> {
        if rho.dim_a() != self.dim_a || rho.dim_b() != self.dim_b {
            return Err(Error::DimensionMismatch(format!(
                "witness acts on {}x{}, state is {}x{}",
                self.dim_a,
                self.dim_b,
                rho.dim_a(),
                rho.dim_b()
            )));
        }
        Ok(re_trace_product(&self.operator, rho.matrix()))
    }

    pub fn weight_bound(&self, rho: &BipartiteState) -> Result<f64> {
        Ok(1.0 - self.evaluate(rho)?)
    }

    pub fn validity_margin(&self) -> f64 {
        let n = self.dim_a * self.dim_b;
        let shifted = &self.operator
            - partial_transpose_b(&self.ppt_operator, self.dim_a, self.dim_b)
            - identity(n);
        min_eigenvalue(&self.operator)
            .min(min_eigenvalue(&self.ppt_operator))
            .min(min_eigenvalue(&shifted))
    }
}
