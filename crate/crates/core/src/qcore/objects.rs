use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::linalg::{
    self, identity, is_finite, max_abs, max_abs_diff, min_eigenvalue, partial_trace_matrix,
    projector, real, ComplexMatrix, ComplexVector, Subsystem,
};
use crate::qcore::tolerances::Tolerances;

fn validate_psd(m: &ComplexMatrix, tol: &Tolerances) -> Result<()> {
    if !m.is_square() {
        return Err(Error::Shape(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if !is_finite(m) {
        return Err(Error::NonFinite);
    }
    let deviation = linalg::hermitian_deviation(m);
    if deviation > tol.hermitian {
        return Err(Error::NotHermitian { deviation });
    }
    let min_eigenvalue = min_eigenvalue(m);
    if min_eigenvalue < -tol.psd {
        return Err(Error::NotPsd { min_eigenvalue });
    }
    Ok(())
}

/// Unit-trace positive semidefinite operator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        Self::with_tolerances(matrix, &Tolerances::default())
    }

    pub fn with_tolerances(matrix: ComplexMatrix, tol: &Tolerances) -> Result<Self> {
        validate_psd(&matrix, tol)?;
        let trace = matrix.trace().re;
        if (trace - 1.0).abs() > tol.trace {
            return Err(Error::TraceMismatch {
                trace,
                expected: 1.0,
            });
        }
        Ok(Self { matrix })
    }

    /// Builds `|ψ⟩⟨ψ|` after normalising `ψ`.
    pub fn pure(psi: &ComplexVector) -> Result<Self> {
        let norm = psi.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::Shape("cannot normalise a zero vector".into()));
        }
        Ok(Self {
            matrix: projector(&(psi / real(norm))),
        })
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self {
            matrix: identity(d) * real(1.0 / d as f64),
        }
    }

    pub(crate) fn from_trusted(matrix: ComplexMatrix) -> Self {
        Self { matrix }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }
}

/// Density matrix on `A ⊗ B` with A-major index ordering.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BipartiteState {
    dim_a: usize,
    dim_b: usize,
    state: DensityMatrix,
}

impl BipartiteState {
    pub fn new(dim_a: usize, dim_b: usize, state: DensityMatrix) -> Result<Self> {
        if state.dim() != dim_a * dim_b {
            return Err(Error::DimensionMismatch(format!(
                "state of dimension {} cannot be split as {dim_a}x{dim_b}",
                state.dim()
            )));
        }
        Ok(Self {
            dim_a,
            dim_b,
            state,
        })
    }

    pub fn from_matrix(dim_a: usize, dim_b: usize, matrix: ComplexMatrix) -> Result<Self> {
        Self::new(dim_a, dim_b, DensityMatrix::new(matrix)?)
    }

    pub fn product(a: &DensityMatrix, b: &DensityMatrix) -> Self {
        Self {
            dim_a: a.dim(),
            dim_b: b.dim(),
            state: DensityMatrix::from_trusted(linalg::tensor(a.matrix(), b.matrix())),
        }
    }

    /// `|Φ⁺⟩ = Σ_i |ii⟩/√d`.
    pub fn phi_plus_vector(d: usize) -> ComplexVector {
        let mut v = ComplexVector::zeros(d * d);
        for i in 0..d {
            v[i * d + i] = real(1.0 / (d as f64).sqrt());
        }
        v
    }

    pub fn phi_plus(d: usize) -> Self {
        Self {
            dim_a: d,
            dim_b: d,
            state: DensityMatrix::from_trusted(projector(&Self::phi_plus_vector(d))),
        }
    }

    pub fn dim_a(&self) -> usize {
        self.dim_a
    }

    pub fn dim_b(&self) -> usize {
        self.dim_b
    }

    pub fn state(&self) -> &DensityMatrix {
        &self.state
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        self.state.matrix()
    }

    /// `⟨Φ⁺|ρ|Φ⁺⟩`; requires equal local dimensions.
    pub fn entangled_fraction(&self) -> Result<f64> {
        if self.dim_a != self.dim_b {
            return Err(Error::DimensionMismatch(format!(
                "entangled fraction needs equal local dimensions, got {}x{}",
                self.dim_a, self.dim_b
            )));
        }
        let phi = Self::phi_plus_vector(self.dim_a);
        Ok((phi.adjoint() * self.matrix() * &phi)[(0, 0)].re)
    }
}

/// Reduced state of a bipartite state.
pub fn partial_trace(rho: &BipartiteState, keep: Subsystem) -> Result<DensityMatrix> {
    let m = partial_trace_matrix(rho.matrix(), rho.dim_a, rho.dim_b, keep)?;
    Ok(DensityMatrix::from_trusted(m))
}

/// Indexed family of POVMs `{M_{a|x}}` on a `dim`-dimensional space.
/// `inputs[x][a]` is the effect for outcome `a` of measurement `x`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSet {
    dim: usize,
    inputs: Vec<Vec<ComplexMatrix>>,
}

impl MeasurementSet {
    pub fn new(dim: usize, inputs: Vec<Vec<ComplexMatrix>>) -> Result<Self> {
        Self::with_tolerances(dim, inputs, &Tolerances::default())
    }

    pub fn with_tolerances(
        dim: usize,
        inputs: Vec<Vec<ComplexMatrix>>,
        tol: &Tolerances,
    ) -> Result<Self> {
        if inputs.is_empty() {
            return Err(Error::Shape("measurement set has no inputs".into()));
        }
        let id = identity(dim);
        for (x, povm) in inputs.iter().enumerate() {
            if povm.is_empty() {
                return Err(Error::Shape(format!("input {x} has no outcomes")));
            }
            let mut sum = linalg::zeros(dim, dim);
            for effect in povm {
                if effect.shape() != (dim, dim) {
                    return Err(Error::DimensionMismatch(format!(
                        "effect of input {x} is {}x{}, expected {dim}x{dim}",
                        effect.nrows(),
                        effect.ncols()
                    )));
                }
                validate_psd(effect, tol)?;
                sum += effect;
            }
            let deviation = max_abs_diff(&sum, &id);
            if deviation > tol.completeness {
                return Err(Error::Incomplete { input: x, deviation });
            }
        }
        Ok(Self { dim, inputs })
    }

    pub(crate) fn from_trusted(dim: usize, inputs: Vec<Vec<ComplexMatrix>>) -> Self {
        Self { dim, inputs }
    }

    /// One projective measurement per orthonormal basis.
    pub fn from_bases(bases: &[Vec<ComplexVector>]) -> Result<Self> {
        let dim = bases
            .first()
            .and_then(|b| b.first())
            .map(|v| v.len())
            .ok_or_else(|| Error::Shape("no bases supplied".into()))?;
        let inputs = bases
            .iter()
            .map(|basis| basis.iter().map(projector).collect())
            .collect();
        Self::new(dim, inputs)
    }

    /// Computational and Fourier bases as a two-input, `d`-outcome set.
    pub fn fourier_mubs(d: usize) -> Result<Self> {
        let (comp, four) = linalg::fourier_mub_pair(d)?;
        Self::from_bases(&[comp, four])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn inputs(&self) -> &[Vec<ComplexMatrix>] {
        &self.inputs
    }

    pub fn num_inputs(&self) -> usize {
        self.inputs.len()
    }

    pub fn outcomes(&self, x: usize) -> usize {
        self.inputs[x].len()
    }

    pub fn effect(&self, a: usize, x: usize) -> &ComplexMatrix {
        &self.inputs[x][a]
    }

    /// Effect-wise transpose in the computational basis.
    pub fn transpose(&self) -> Self {
        self.map_effects(|m| m.transpose())
    }

    pub fn map_effects(&self, f: impl Fn(&ComplexMatrix) -> ComplexMatrix) -> Self {
        Self {
            dim: self.dim,
            inputs: self
                .inputs
                .iter()
                .map(|povm| povm.iter().map(&f).collect())
                .collect(),
        }
    }

    /// Max abs entry difference across all effects; infinite on shape mismatch.
    pub fn max_deviation(&self, other: &Self) -> f64 {
        if self.dim != other.dim || self.inputs.len() != other.inputs.len() {
            return f64::INFINITY;
        }
        let mut dev: f64 = 0.0;
        for (p, q) in self.inputs.iter().zip(&other.inputs) {
            if p.len() != q.len() {
                return f64::INFINITY;
            }
            for (m, n) in p.iter().zip(q) {
                dev = dev.max(max_abs_diff(m, n));
            }
        }
        dev
    }

    pub fn max_abs(&self) -> f64 {
        self.inputs
            .iter()
            .flatten()
            .fold(0.0, |acc, m| acc.max(max_abs(m)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::linalg::{ket, C64};

    #[test]
    fn density_matrix_validation() {
        assert!(DensityMatrix::new(identity(2) * real(0.5)).is_ok());
        assert!(matches!(
            DensityMatrix::new(identity(2)),
            Err(Error::TraceMismatch { .. })
        ));
        let neg = ComplexMatrix::from_row_slice(2, 2, &[real(1.5), real(0.0), real(0.0), real(-0.5)]);
        assert!(matches!(DensityMatrix::new(neg), Err(Error::NotPsd { .. })));
        let nan = ComplexMatrix::from_element(1, 1, C64::new(f64::NAN, 0.0));
        assert!(matches!(DensityMatrix::new(nan), Err(Error::NonFinite)));
    }

    #[test]
    fn tolerance_override_accepts_slightly_off_trace() {
        let m = identity(2) * real(0.5 + 1e-8);
        assert!(DensityMatrix::new(m.clone()).is_err());
        assert!(DensityMatrix::with_tolerances(m, &Tolerances::loosened(1e-6)).is_ok());
    }

    #[test]
    fn reduced_states() {
        let phi = BipartiteState::phi_plus(3);
        let b = partial_trace(&phi, Subsystem::B).unwrap();
        assert!(max_abs_diff(b.matrix(), &(identity(3) * real(1.0 / 3.0))) < 1e-15);
        assert!((phi.entangled_fraction().unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn measurement_validation() {
        let z = MeasurementSet::from_bases(&[vec![ket(2, 0), ket(2, 1)]]).unwrap();
        assert_eq!(z.num_inputs(), 1);
        let incomplete = MeasurementSet::new(2, vec![vec![projector(&ket(2, 0))]]);
        assert!(matches!(incomplete, Err(Error::Incomplete { .. })));
        let wrong_dim = MeasurementSet::new(3, vec![vec![identity(2)]]);
        assert!(matches!(wrong_dim, Err(Error::DimensionMismatch(_))));
        assert!(MeasurementSet::fourier_mubs(5).is_ok());
    }
}
