//! Quantum channels in Kraus form and the generalised channel-state duality.
//!
//! For a full-rank marginal `σ` on the input space, a bipartite state `ρ`
//! on `out ⊗ in` with `Tr_out ρ = σ` defines the channel
//!
//! `Λ_ρ(Y) = Tr_in[(1 ⊗ σ^{-1/2} Yᵀ σ^{-1/2}) ρ]`
//!
//! (transpose in the computational basis). Writing `ρ = Σ_λ p_λ |ψ_λ⟩⟨ψ_λ|`
//! with coefficient matrices `ψ_λ` (`out × in`), its Kraus operators are
//! `K_λ = √p_λ ψ_λ (σᵀ)^{-1/2}`, so `rank K_λ` is the Schmidt rank of
//! `|ψ_λ⟩`. When `σ` is real (for instance `1/d`) the transpose may equally
//! be taken around the sandwiched operator.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::linalg::{
    self, coefficient_matrix, eigh, hermitian_part, identity, ket, max_abs_diff, outer,
    partial_trace_matrix, projector, rank, real, spectral_map, vectorize, zeros, ComplexMatrix,
    ComplexVector, Subsystem,
};
use crate::qcore::objects::{BipartiteState, DensityMatrix, MeasurementSet};
use crate::qcore::tolerances::{COMPLETENESS_TOL, RANK_TOL};
use crate::steering::steer;
use crate::witnesses::{witness_bound, witness_value, GhdsWitness, VIOLATION_MARGIN};

/// Marginal agreement required by [`state_to_channel`].
pub const MARGINAL_TOL: f64 = 1e-8;

/// CPTP map `Y ↦ Σ_λ K_λ Y K_λ†`, each `K_λ` of shape `dim_out × dim_in`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KrausChannel {
    dim_in: usize,
    dim_out: usize,
    kraus: Vec<ComplexMatrix>,
}

impl KrausChannel {
    pub fn new(dim_in: usize, dim_out: usize, kraus: Vec<ComplexMatrix>) -> Result<Self> {
        Self::with_tolerance(dim_in, dim_out, kraus, COMPLETENESS_TOL)
    }

    pub fn with_tolerance(
        dim_in: usize,
        dim_out: usize,
        kraus: Vec<ComplexMatrix>,
        tol: f64,
    ) -> Result<Self> {
        if kraus.is_empty() {
            return Err(Error::Shape("channel has no Kraus operators".into()));
        }
        let mut sum = zeros(dim_in, dim_in);
        for k in &kraus {
            if k.shape() != (dim_out, dim_in) {
                return Err(Error::DimensionMismatch(format!(
                    "Kraus operator is {}x{}, expected {dim_out}x{dim_in}",
                    k.nrows(),
                    k.ncols()
                )));
            }
            if !linalg::is_finite(k) {
                return Err(Error::NonFinite);
            }
            sum += k.adjoint() * k;
        }
        let deviation = max_abs_diff(&sum, &identity(dim_in));
        if deviation > tol {
            return Err(Error::NotTracePreserving { deviation });
        }
        Ok(Self {
            dim_in,
            dim_out,
            kraus,
        })
    }

    pub fn identity(d: usize) -> Self {
        Self {
            dim_in: d,
            dim_out: d,
            kraus: vec![identity(d)],
        }
    }

    /// `ρ ↦ ηρ + (1−η) Tr(ρ) 1/d`, with Kraus operators `√η 1` and
    /// `√((1−η)/d) |i⟩⟨j|`. Zero-weight operators are dropped.
    pub fn depolarizing(d: usize, eta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) || eta.is_nan() {
            return Err(Error::OutOfRange {
                name: "eta",
                value: eta,
                range: "[0, 1]",
            });
        }
        let mut kraus = Vec::with_capacity(d * d + 1);
        if eta > 0.0 {
            kraus.push(identity(d) * real(eta.sqrt()));
        }
        if eta < 1.0 {
            let c = ((1.0 - eta) / d as f64).sqrt();
            for i in 0..d {
                for j in 0..d {
                    kraus.push(outer(&ket(d, i), &ket(d, j)) * real(c));
                }
            }
        }
        Ok(Self {
            dim_in: d,
            dim_out: d,
            kraus,
        })
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    /// Entrywise complex conjugate channel `{K̄_λ}`. Its dual satisfies
    /// `Λ̄*(Nᵀ) = Λ*(N)ᵀ`, and it has the same Kraus ranks.
    pub fn conjugate(&self) -> Self {
        Self {
            dim_in: self.dim_in,
            dim_out: self.dim_out,
            kraus: self.kraus.iter().map(|k| k.map(|z| z.conj())).collect(),
        }
    }

    /// `Σ K Y K†` on an arbitrary `dim_in`-square operator.
    pub fn apply_operator(&self, y: &ComplexMatrix) -> Result<ComplexMatrix> {
        if y.shape() != (self.dim_in, self.dim_in) {
            return Err(Error::DimensionMismatch(format!(
                "operator is {}x{}, channel input dimension {}",
                y.nrows(),
                y.ncols(),
                self.dim_in
            )));
        }
        Ok(self
            .kraus
            .iter()
            .fold(zeros(self.dim_out, self.dim_out), |acc, k| acc + k * y * k.adjoint()))
    }

    /// Heisenberg picture `Σ K† N K` on a `dim_out`-square operator.
    pub fn dual_operator(&self, n: &ComplexMatrix) -> Result<ComplexMatrix> {
        if n.shape() != (self.dim_out, self.dim_out) {
            return Err(Error::DimensionMismatch(format!(
                "operator is {}x{}, channel output dimension {}",
                n.nrows(),
                n.ncols(),
                self.dim_out
            )));
        }
        Ok(self
            .kraus
            .iter()
            .fold(zeros(self.dim_in, self.dim_in), |acc, k| acc + k.adjoint() * n * k))
    }
}

/// Schrödinger picture.
pub fn apply(channel: &KrausChannel, rho: &DensityMatrix) -> Result<DensityMatrix> {
    let out = channel.apply_operator(rho.matrix())?;
    Ok(DensityMatrix::from_trusted(hermitian_part(&out)))
}

/// Heisenberg picture applied effect-wise: `M_{a|x} ↦ Λ*(M_{a|x})`.
pub fn dual_apply(channel: &KrausChannel, measurements: &MeasurementSet) -> Result<MeasurementSet> {
    if measurements.dim() != channel.dim_out {
        return Err(Error::DimensionMismatch(format!(
            "measurements act on dimension {}, channel output dimension {}",
            measurements.dim(),
            channel.dim_out
        )));
    }
    let inputs = measurements
        .inputs()
        .iter()
        .map(|povm| {
            povm.iter()
                .map(|m| channel.dual_operator(m).map(|x| hermitian_part(&x)))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MeasurementSet::from_trusted(channel.dim_in, inputs))
}

/// Bipartite state on `out ⊗ in` representing a channel for a fixed input
/// marginal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChoiState {
    pub dim_in: usize,
    pub dim_out: usize,
    pub state: BipartiteState,
    pub marginal: DensityMatrix,
}

fn full_rank_check(sigma: &DensityMatrix) -> Result<()> {
    let r = linalg::eigenvalues_h(sigma.matrix())
        .iter()
        .filter(|&&x| x > RANK_TOL)
        .count();
    if r < sigma.dim() {
        return Err(Error::RankDeficient {
            rank: r,
            dim: sigma.dim(),
        });
    }
    Ok(())
}

/// `ρ_Λ = Σ_λ |ψ_λ⟩⟨ψ_λ|` with coefficient matrices `ψ_λ = K_λ (σᵀ)^{1/2}`;
/// `Tr_out ρ_Λ = σ`, and [`state_to_channel`] inverts it.
pub fn choi_of(channel: &KrausChannel, sigma: &DensityMatrix) -> Result<ChoiState> {
    if sigma.dim() != channel.dim_in {
        return Err(Error::DimensionMismatch(format!(
            "marginal has dimension {}, channel input dimension {}",
            sigma.dim(),
            channel.dim_in
        )));
    }
    full_rank_check(sigma)?;
    let sqrt_t = spectral_map(&sigma.matrix().transpose(), |x| x.max(0.0).sqrt());
    let n = channel.dim_in * channel.dim_out;
    let mut rho = zeros(n, n);
    for k in &channel.kraus {
        let psi = vectorize(&(k * &sqrt_t));
        rho += projector(&psi);
    }
    let state = BipartiteState::new(
        channel.dim_out,
        channel.dim_in,
        DensityMatrix::from_trusted(hermitian_part(&rho)),
    )?;
    Ok(ChoiState {
        dim_in: channel.dim_in,
        dim_out: channel.dim_out,
        state,
        marginal: sigma.clone(),
    })
}

fn kraus_from_ensemble<'a>(
    ensemble: impl Iterator<Item = (f64, &'a ComplexVector)>,
    dim_out: usize,
    dim_in: usize,
    sigma: &DensityMatrix,
) -> Vec<ComplexMatrix> {
    let inv_sqrt_t = spectral_map(&sigma.matrix().transpose(), |x| 1.0 / x.sqrt());
    ensemble
        .filter(|(p, _)| *p > 0.0)
        .map(|(p, psi)| coefficient_matrix(psi, dim_out, dim_in) * &inv_sqrt_t * real(p.sqrt()))
        .collect()
}

fn check_marginal(rho: &ComplexMatrix, dim_out: usize, dim_in: usize, sigma: &DensityMatrix) -> Result<()> {
    if sigma.dim() != dim_in {
        return Err(Error::DimensionMismatch(format!(
            "marginal has dimension {}, state's second factor {dim_in}",
            sigma.dim()
        )));
    }
    full_rank_check(sigma)?;
    let reduced = partial_trace_matrix(rho, dim_out, dim_in, Subsystem::B)?;
    let deviation = max_abs_diff(&reduced, sigma.matrix());
    if deviation > MARGINAL_TOL {
        return Err(Error::Signaling { input: 0, deviation });
    }
    Ok(())
}

/// Kraus form of `Λ_ρ` from the eigendecomposition of `ρ` (state on
/// `out ⊗ in`, second-factor marginal `σ`).
pub fn state_to_channel(rho: &BipartiteState, sigma: &DensityMatrix) -> Result<KrausChannel> {
    let (dim_out, dim_in) = (rho.dim_a(), rho.dim_b());
    check_marginal(rho.matrix(), dim_out, dim_in, sigma)?;
    let (values, vectors) = eigh(rho.matrix());
    let columns: Vec<(f64, ComplexVector)> = values
        .iter()
        .enumerate()
        .rev()
        .filter(|(_, &p)| p > RANK_TOL)
        .map(|(j, &p)| (p, vectors.column(j).into_owned()))
        .collect();
    let kraus = kraus_from_ensemble(columns.iter().map(|(p, v)| (*p, v)), dim_out, dim_in, sigma);
    KrausChannel::with_tolerance(dim_in, dim_out, kraus, MARGINAL_TOL)
}

/// Kraus form of `Λ_ρ` from an explicitly supplied pure-state decomposition
/// `ρ = Σ p_λ |ψ_λ⟩⟨ψ_λ|` (vectors normalised here).
pub fn kraus_from_decomposition(
    ensemble: &[(f64, ComplexVector)],
    dim_out: usize,
    dim_in: usize,
    sigma: &DensityMatrix,
) -> Result<KrausChannel> {
    let n = dim_out * dim_in;
    let mut normalised = Vec::with_capacity(ensemble.len());
    let mut rho = zeros(n, n);
    for (p, v) in ensemble {
        if v.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "ensemble vector has length {}, expected {n}",
                v.len()
            )));
        }
        if *p < 0.0 {
            return Err(Error::OutOfRange {
                name: "p",
                value: *p,
                range: "p >= 0",
            });
        }
        let u = v / real(v.norm());
        rho += projector(&u) * real(*p);
        normalised.push((*p, u));
    }
    check_marginal(&rho, dim_out, dim_in, sigma)?;
    let kraus = kraus_from_ensemble(normalised.iter().map(|(p, v)| (*p, v)), dim_out, dim_in, sigma);
    KrausChannel::with_tolerance(dim_in, dim_out, kraus, MARGINAL_TOL)
}

/// Sufficient certificate that a channel is `n`-partially entanglement
/// breaking: a Kraus decomposition whose operators all have rank `≤ n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PebCertificate {
    pub n: usize,
    pub kraus_ranks: Vec<usize>,
    pub max_rank: usize,
}

/// Ranks of the channel's own Kraus operators. A low `max_rank` certifies
/// the `n`-PEB property; a high one decides nothing.
pub fn peb_certificate(channel: &KrausChannel) -> PebCertificate {
    let kraus_ranks: Vec<usize> = channel.kraus.iter().map(rank).collect();
    let max_rank = kraus_ranks.iter().copied().max().unwrap_or(0);
    PebCertificate {
        n: max_rank,
        kraus_ranks,
        max_rank,
    }
}

/// Certificate from an explicit pure-state decomposition of a Choi state.
pub fn peb_certificate_from_decomposition(
    ensemble: &[(f64, ComplexVector)],
    dim_out: usize,
    dim_in: usize,
    sigma: &DensityMatrix,
) -> Result<PebCertificate> {
    Ok(peb_certificate(&kraus_from_decomposition(ensemble, dim_out, dim_in, sigma)?))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PibCheck {
    pub n: usize,
    /// `true` certifies the channel is not `n`-PIB; `false` is inconclusive.
    pub refuted: bool,
    pub witness_value: f64,
    pub bound: f64,
}

/// Steers the MUB witness measurements on `choi_of(Λ, σ)` and compares the
/// witness value with the level-`n` bound.
pub fn pib_witness_check(channel: &KrausChannel, sigma: &DensityMatrix, n: usize) -> Result<PibCheck> {
    if channel.dim_in != channel.dim_out {
        return Err(Error::DimensionMismatch(format!(
            "witness check needs a square channel, got {} -> {}",
            channel.dim_in, channel.dim_out
        )));
    }
    let d = channel.dim_in;
    let bound = witness_bound(d, n)?;
    let choi = choi_of(channel, sigma)?;
    let witness = GhdsWitness::new(d)?;
    let assemblage = steer(&choi.state, &witness.measurements())?;
    let value = witness_value(&assemblage, &witness)?;
    Ok(PibCheck {
        n,
        refuted: value > bound + VIOLATION_MARGIN,
        witness_value: value,
        bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;
    use crate::steering::{add_white_noise, isotropic};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_and_depolarizing_action() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let rho = random::random_density(3, 3, &mut rng);
        let out = apply(&KrausChannel::identity(3), &rho).unwrap();
        assert!(max_abs_diff(out.matrix(), rho.matrix()) < 1e-14);
        let dep = KrausChannel::depolarizing(3, 0.0).unwrap();
        let out = apply(&dep, &rho).unwrap();
        assert!(max_abs_diff(out.matrix(), &(identity(3) / real(3.0))) < 1e-14);
        assert_eq!(KrausChannel::depolarizing(3, 1.0).unwrap().kraus().len(), 1);
        assert!(KrausChannel::depolarizing(3, 1.01).is_err());
    }

    #[test]
    fn depolarizing_half_of_phi_plus_is_isotropic() {
        for d in 2..=4 {
            for &eta in &[0.0, 0.25, 0.6, 1.0] {
                let ext = extend_on_first(&KrausChannel::depolarizing(d, eta).unwrap(), d);
                let out = ext.apply_operator(BipartiteState::phi_plus(d).matrix()).unwrap();
                assert!(max_abs_diff(&out, isotropic(d, eta).unwrap().matrix()) < 1e-14);
            }
        }
    }

    fn extend_on_first(channel: &KrausChannel, d_other: usize) -> KrausChannel {
        let kraus = channel
            .kraus()
            .iter()
            .map(|k| linalg::tensor(k, &identity(d_other)))
            .collect();
        KrausChannel::new(channel.dim_in * d_other, channel.dim_out * d_other, kraus).unwrap()
    }

    #[test]
    fn validation_rejects_non_trace_preserving() {
        assert!(matches!(
            KrausChannel::new(2, 2, vec![identity(2) * real(0.9)]),
            Err(Error::NotTracePreserving { .. })
        ));
        assert!(matches!(
            KrausChannel::new(2, 3, vec![identity(2)]),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn dual_of_depolarizing_is_white_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = random::random_measurement_set(3, 2, 3, &mut rng);
        let dep = KrausChannel::depolarizing(3, 0.4).unwrap();
        let lhs = dual_apply(&dep, &m).unwrap();
        let rhs = add_white_noise(&m, 0.4).unwrap();
        assert!(lhs.max_deviation(&rhs) < 1e-14);
        let id = dual_apply(&KrausChannel::identity(3), &m).unwrap();
        assert!(id.max_deviation(&m) < 1e-15);
    }

    #[test]
    fn choi_examples() {
        let c = choi_of(&KrausChannel::identity(3), &DensityMatrix::maximally_mixed(3)).unwrap();
        assert!(max_abs_diff(c.state.matrix(), BipartiteState::phi_plus(3).matrix()) < 1e-14);
        for d in 2..=4 {
            for &eta in &[0.0, 0.3, 0.9] {
                let c = choi_of(
                    &KrausChannel::depolarizing(d, eta).unwrap(),
                    &DensityMatrix::maximally_mixed(d),
                )
                .unwrap();
                assert!(max_abs_diff(c.state.matrix(), isotropic(d, eta).unwrap().matrix()) < 1e-14);
            }
        }
        let pure = DensityMatrix::pure(&ket(2, 0)).unwrap();
        assert!(matches!(
            choi_of(&KrausChannel::identity(2), &pure),
            Err(Error::RankDeficient { .. })
        ));
    }

    #[test]
    fn phi_plus_gives_identity_channel() {
        let ch = state_to_channel(&BipartiteState::phi_plus(3), &DensityMatrix::maximally_mixed(3)).unwrap();
        assert_eq!(ch.kraus().len(), 1);
        let k = &ch.kraus()[0];
        let phase = k[(0, 0)];
        assert!((phase.norm() - 1.0).abs() < 1e-12);
        assert!(max_abs_diff(&(k / phase), &identity(3)) < 1e-12);
    }

    #[test]
    fn isotropic_state_gives_depolarizing_action() {
        let eta = 0.35;
        let ch = state_to_channel(&isotropic(3, eta).unwrap(), &DensityMatrix::maximally_mixed(3)).unwrap();
        let zero = DensityMatrix::pure(&ket(3, 0)).unwrap();
        let out = apply(&ch, &zero).unwrap();
        let expected = zero.matrix() * real(eta) + identity(3) * real((1.0 - eta) / 3.0);
        assert!(max_abs_diff(out.matrix(), &expected) < 1e-12);
    }

    #[test]
    fn marginal_mismatch_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let sigma = random::random_density(2, 2, &mut rng);
        assert!(matches!(
            state_to_channel(&BipartiteState::phi_plus(2), &sigma),
            Err(Error::Signaling { .. })
        ));
    }

    #[test]
    fn peb_examples() {
        let c = peb_certificate(&KrausChannel::depolarizing(2, 0.0).unwrap());
        assert_eq!(c.kraus_ranks, vec![1, 1, 1, 1]);
        assert_eq!((c.n, c.max_rank), (1, 1));
        let c = peb_certificate(&KrausChannel::identity(4));
        assert_eq!((c.n, c.kraus_ranks.clone()), (4, vec![4]));
    }

    #[test]
    fn pib_examples() {
        let check = pib_witness_check(&KrausChannel::identity(4), &DensityMatrix::maximally_mixed(4), 3).unwrap();
        assert!(check.refuted);
        assert!((check.witness_value - 2.0).abs() < 1e-12);
        let dep = KrausChannel::depolarizing(4, 0.5).unwrap();
        let check = pib_witness_check(&dep, &DensityMatrix::maximally_mixed(4), 1).unwrap();
        assert!(!check.refuted);
        assert!((check.witness_value - 1.25).abs() < 1e-12);
        let rect = KrausChannel::new(2, 4, vec![ComplexMatrix::from_fn(4, 2, |i, j| real((i == j) as u8 as f64))]).unwrap();
        assert!(pib_witness_check(&rect, &DensityMatrix::maximally_mixed(2), 1).is_err());
    }
}
