//! Steering assemblages and their correspondence with measurement sets.
//!
//! `steer` produces `σ_{a|x} = Tr_A[(M_{a|x} ⊗ 1) ρ_AB]`. An assemblage with
//! marginal `ρ_B` maps to the measurement set `ρ_B^{-1/2} σ_{a|x} ρ_B^{-1/2}`
//! and back via `ρ_B^{1/2} M_{a|x} ρ_B^{1/2}`; rank-deficient marginals are
//! handled by restricting to their support.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::linalg::{
    self, hermitian_part, identity, max_abs_diff, partial_trace_matrix, projector, real,
    support_isometry, tensor, zeros, ComplexMatrix, Subsystem,
};
use crate::qcore::objects::{BipartiteState, DensityMatrix, MeasurementSet};
use crate::qcore::tolerances::{Tolerances, RANK_TOL};

/// Family `{σ_{a|x}}` of subnormalised states; `inputs[x][a] = σ_{a|x}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assemblage {
    dim: usize,
    inputs: Vec<Vec<ComplexMatrix>>,
}

impl Assemblage {
    pub fn new(dim: usize, inputs: Vec<Vec<ComplexMatrix>>) -> Result<Self> {
        Self::with_tolerances(dim, inputs, &Tolerances::default())
    }

    pub fn with_tolerances(
        dim: usize,
        inputs: Vec<Vec<ComplexMatrix>>,
        tol: &Tolerances,
    ) -> Result<Self> {
        if inputs.is_empty() {
            return Err(Error::Shape("assemblage has no inputs".into()));
        }
        let mut reference: Option<ComplexMatrix> = None;
        for (x, members) in inputs.iter().enumerate() {
            if members.is_empty() {
                return Err(Error::Shape(format!("input {x} has no outcomes")));
            }
            let mut marginal = zeros(dim, dim);
            for sigma in members {
                if sigma.shape() != (dim, dim) {
                    return Err(Error::DimensionMismatch(format!(
                        "member of input {x} is {}x{}, expected {dim}x{dim}",
                        sigma.nrows(),
                        sigma.ncols()
                    )));
                }
                if !linalg::is_finite(sigma) {
                    return Err(Error::NonFinite);
                }
                let deviation = linalg::hermitian_deviation(sigma);
                if deviation > tol.hermitian {
                    return Err(Error::NotHermitian { deviation });
                }
                let min_eigenvalue = linalg::min_eigenvalue(sigma);
                if min_eigenvalue < -tol.psd {
                    return Err(Error::NotPsd { min_eigenvalue });
                }
                marginal += sigma;
            }
            let trace = marginal.trace().re;
            if (trace - 1.0).abs() > tol.completeness {
                return Err(Error::TraceMismatch {
                    trace,
                    expected: 1.0,
                });
            }
            match &reference {
                None => reference = Some(marginal),
                Some(r) => {
                    let deviation = max_abs_diff(r, &marginal);
                    if deviation > tol.completeness {
                        return Err(Error::Signaling { input: x, deviation });
                    }
                }
            }
        }
        Ok(Self { dim, inputs })
    }

    pub(crate) fn from_trusted(dim: usize, inputs: Vec<Vec<ComplexMatrix>>) -> Self {
        Self { dim, inputs }
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

    pub fn member(&self, a: usize, x: usize) -> &ComplexMatrix {
        &self.inputs[x][a]
    }

    /// `ρ_B = Σ_a σ_{a|0}`.
    pub fn marginal(&self) -> ComplexMatrix {
        self.inputs[0]
            .iter()
            .fold(zeros(self.dim, self.dim), |acc, s| acc + s)
    }

    /// Embeds an assemblage given on a subspace back into the full space:
    /// `σ ↦ V σ V†` for the isometry `V` (full dim × subspace dim).
    pub fn lift(&self, isometry: &ComplexMatrix) -> Result<Self> {
        if isometry.ncols() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "isometry has {} columns, assemblage dimension is {}",
                isometry.ncols(),
                self.dim
            )));
        }
        let adj = isometry.adjoint();
        Ok(Self {
            dim: isometry.nrows(),
            inputs: self
                .inputs
                .iter()
                .map(|m| m.iter().map(|s| isometry * s * &adj).collect())
                .collect(),
        })
    }

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

    /// `Σ_i w_i σ^{(i)}` for assemblages of identical shape.
    pub fn convex_combination(parts: &[(f64, &Assemblage)]) -> Result<Self> {
        let (_, first) = parts
            .first()
            .ok_or_else(|| Error::Shape("empty combination".into()))?;
        let mut inputs: Vec<Vec<ComplexMatrix>> = first
            .inputs
            .iter()
            .map(|m| vec![zeros(first.dim, first.dim); m.len()])
            .collect();
        for (w, part) in parts {
            if part.dim != first.dim
                || part.inputs.len() != first.inputs.len()
                || part.inputs.iter().zip(&first.inputs).any(|(p, q)| p.len() != q.len())
            {
                return Err(Error::Shape("assemblages have different shapes".into()));
            }
            for (acc, members) in inputs.iter_mut().zip(&part.inputs) {
                for (a, s) in acc.iter_mut().zip(members) {
                    *a += s * real(*w);
                }
            }
        }
        Ok(Self {
            dim: first.dim,
            inputs,
        })
    }
}

/// `σ_{a|x} = Tr_A[(M_{a|x} ⊗ 1) ρ_AB]` with Alice's measurements on A.
pub fn steer(rho: &BipartiteState, measurements: &MeasurementSet) -> Result<Assemblage> {
    if measurements.dim() != rho.dim_a() {
        return Err(Error::DimensionMismatch(format!(
            "measurements act on dimension {}, Alice's system has dimension {}",
            measurements.dim(),
            rho.dim_a()
        )));
    }
    let id_b = identity(rho.dim_b());
    let inputs = measurements
        .inputs()
        .iter()
        .map(|povm| {
            povm.iter()
                .map(|effect| {
                    let op = tensor(effect, &id_b) * rho.matrix();
                    partial_trace_matrix(&op, rho.dim_a(), rho.dim_b(), Subsystem::B)
                        .map(|m| hermitian_part(&m))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Assemblage::from_trusted(rho.dim_b(), inputs))
}

/// Measurement set associated with an assemblage, restricted to the support
/// of its marginal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementPullback {
    /// `M_{a|x}` on the support subspace (dimension = rank of `ρ_B`).
    pub measurements: MeasurementSet,
    /// `ρ_B` restricted to its support; full rank there.
    pub marginal: DensityMatrix,
    /// Columns span the support inside the original space. Equal to the
    /// identity when the marginal has full rank.
    pub support: ComplexMatrix,
}

impl MeasurementPullback {
    pub fn is_full_rank(&self) -> bool {
        self.support.is_square()
    }
}

/// `M_{a|x} = ρ_B^{-1/2} σ_{a|x} ρ_B^{-1/2}` on the support of `ρ_B`.
pub fn assemblage_to_measurements(sigma: &Assemblage) -> MeasurementPullback {
    let marginal = hermitian_part(&sigma.marginal());
    let rank = linalg::eigenvalues_h(&marginal)
        .iter()
        .filter(|&&x| x > RANK_TOL)
        .count();
    let support = if rank == sigma.dim {
        identity(sigma.dim)
    } else {
        support_isometry(&marginal)
    };
    let adj = support.adjoint();
    let restricted = &adj * &marginal * &support;
    let inv_sqrt = linalg::spectral_map(&restricted, |x| 1.0 / x.sqrt());
    let inputs = sigma
        .inputs
        .iter()
        .map(|members| {
            members
                .iter()
                .map(|s| hermitian_part(&(&inv_sqrt * (&adj * s * &support) * &inv_sqrt)))
                .collect()
        })
        .collect();
    let restricted = hermitian_part(&restricted);
    MeasurementPullback {
        measurements: MeasurementSet::from_trusted(rank, inputs),
        marginal: DensityMatrix::from_trusted(restricted),
        support,
    }
}

/// `σ_{a|x} = ρ_B^{1/2} M_{a|x} ρ_B^{1/2}`; `ρ_B` must have full rank.
pub fn measurements_to_assemblage(
    measurements: &MeasurementSet,
    marginal: &DensityMatrix,
) -> Result<Assemblage> {
    let d = measurements.dim();
    if marginal.dim() != d {
        return Err(Error::DimensionMismatch(format!(
            "marginal has dimension {}, measurements {d}",
            marginal.dim()
        )));
    }
    let rank = linalg::eigenvalues_h(marginal.matrix())
        .iter()
        .filter(|&&x| x > RANK_TOL)
        .count();
    if rank < d {
        return Err(Error::RankDeficient { rank, dim: d });
    }
    let sqrt = linalg::spectral_map(marginal.matrix(), |x| x.max(0.0).sqrt());
    let inputs = measurements
        .inputs()
        .iter()
        .map(|povm| {
            povm.iter()
                .map(|m| hermitian_part(&(&sqrt * m * &sqrt)))
                .collect()
        })
        .collect();
    Ok(Assemblage::from_trusted(d, inputs))
}

fn check_visibility(eta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eta) || eta.is_nan() {
        return Err(Error::OutOfRange {
            name: "eta",
            value: eta,
            range: "[0, 1]",
        });
    }
    Ok(())
}

/// `M_{a|x} ↦ η M_{a|x} + (1−η) Tr(M_{a|x})/d · 1`.
///
/// For rank-one projective measurements the identity share is `1/d`; the
/// trace-proportional share keeps every POVM complete in general.
pub fn add_white_noise(measurements: &MeasurementSet, eta: f64) -> Result<MeasurementSet> {
    check_visibility(eta)?;
    let d = measurements.dim();
    let id = identity(d);
    Ok(measurements.map_effects(|m| {
        m * real(eta) + &id * real((1.0 - eta) * m.trace().re / d as f64)
    }))
}

/// `η |Φ⁺⟩⟨Φ⁺| + (1−η) 1/d²`.
pub fn isotropic(d: usize, eta: f64) -> Result<BipartiteState> {
    check_visibility(eta)?;
    if d < 1 {
        return Err(Error::OutOfRange {
            name: "d",
            value: d as f64,
            range: "d >= 1",
        });
    }
    let phi = projector(&BipartiteState::phi_plus_vector(d));
    let n = d * d;
    let m = phi * real(eta) + identity(n) * real((1.0 - eta) / n as f64);
    BipartiteState::new(d, d, DensityMatrix::from_trusted(m))
}

/// Finite sample `{η U|a⟩⟨a|U† + (1−η) 1/d}` of the noisy PVM family, one
/// input per unitary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoisyPvmFamily {
    dim: usize,
    visibility: f64,
    unitaries: Vec<ComplexMatrix>,
}

impl NoisyPvmFamily {
    pub fn new(dim: usize, visibility: f64, unitaries: Vec<ComplexMatrix>) -> Result<Self> {
        check_visibility(visibility)?;
        for u in &unitaries {
            if u.shape() != (dim, dim) {
                return Err(Error::DimensionMismatch(format!(
                    "unitary is {}x{}, expected {dim}x{dim}",
                    u.nrows(),
                    u.ncols()
                )));
            }
            let deviation = linalg::unitarity_deviation(u);
            if deviation > crate::qcore::tolerances::UNITARY_TOL {
                return Err(Error::NotUnitary { deviation });
            }
        }
        Ok(Self {
            dim,
            visibility,
            unitaries,
        })
    }

    /// `count` Haar-random members.
    pub fn sample<R: Rng + ?Sized>(
        dim: usize,
        visibility: f64,
        count: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let unitaries = (0..count)
            .map(|_| crate::random::haar_unitary(dim, rng))
            .collect();
        Self::new(dim, visibility, unitaries)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn visibility(&self) -> f64 {
        self.visibility
    }

    pub fn unitaries(&self) -> &[ComplexMatrix] {
        &self.unitaries
    }

    /// The sharp PVMs `U|a⟩⟨a|U†`, before noise.
    pub fn sharp(&self) -> MeasurementSet {
        let inputs = self
            .unitaries
            .iter()
            .map(|u| {
                (0..self.dim)
                    .map(|a| projector(&u.column(a).into_owned()))
                    .collect()
            })
            .collect();
        MeasurementSet::from_trusted(self.dim, inputs)
    }

    pub fn members(&self) -> MeasurementSet {
        add_white_noise(&self.sharp(), self.visibility).expect("visibility validated on construction")
    }
}
