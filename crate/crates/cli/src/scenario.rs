//! Scenario files: what to compute and on which objects.

use hdsteer::channels::KrausChannel;
use hdsteer::io::MatrixLiteral;
use hdsteer::qcore::Tolerances;
use hdsteer::random::{random_density, random_measurement_set};
use hdsteer::steering::{add_white_noise, isotropic, Assemblage, NoisyPvmFamily};
use hdsteer::{BipartiteState, DensityMatrix, MeasurementSet};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Witness,
    Thresholds,
    Map,
    Weight,
    Channel,
    Sweep,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantifier {
    Steering,
    Incompatibility,
    Entanglement,
    Inequality,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateSpec {
    Isotropic { d: usize, eta: f64 },
    PhiPlus { d: usize },
    MaximallyMixed { dim_a: usize, dim_b: usize },
    Random { dim_a: usize, dim_b: usize, rank: usize },
    Literal { dim_a: usize, dim_b: usize, matrix: MatrixLiteral },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasurementSpec {
    /// Fourier MUB pair, optionally mixed with white noise.
    Mubs {
        d: usize,
        #[serde(default)]
        eta: Option<f64>,
    },
    /// Noisy rank-one PVMs in the given (or Haar-sampled) bases.
    NoisyPvm {
        d: usize,
        eta: f64,
        #[serde(default)]
        unitaries: Vec<MatrixLiteral>,
        #[serde(default)]
        samples: Option<usize>,
    },
    Random { d: usize, inputs: usize, outcomes: usize },
    Literal { dim: usize, inputs: Vec<Vec<MatrixLiteral>> },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChannelSpec {
    Identity { d: usize },
    Depolarizing { d: usize, eta: f64 },
    Literal { dim_in: usize, dim_out: usize, kraus: Vec<MatrixLiteral> },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    Points(Vec<f64>),
    Range { start: f64, stop: f64, step: f64 },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub kind: Kind,
    #[serde(default)]
    pub d: Option<usize>,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default)]
    pub grid: Option<Grid>,
    #[serde(default)]
    pub state: Option<StateSpec>,
    #[serde(default)]
    pub measurements: Option<MeasurementSpec>,
    #[serde(default)]
    pub assemblage: Option<SetSpec>,
    /// Marginal used by `map` (measurements to assemblage) and `channel`.
    #[serde(default)]
    pub marginal: Option<MatrixLiteral>,
    #[serde(default)]
    pub channel: Option<ChannelSpec>,
    #[serde(default)]
    pub quantifier: Option<Quantifier>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub output: Option<String>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetSpec {
    pub dim: usize,
    pub inputs: Vec<Vec<MatrixLiteral>>,
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
    }

    pub fn require_d(&self) -> Result<usize, CliError> {
        self.d
            .ok_or_else(|| CliError::Parse("scenario needs the parameter \"d\"".into()))
    }

    pub fn grid_points(&self) -> Result<Vec<f64>, CliError> {
        let points = match &self.grid {
            None => return Err(CliError::Parse("sweep needs a \"grid\"".into())),
            Some(Grid::Points(p)) => p.clone(),
            Some(Grid::Range { start, stop, step }) => {
                let (start, stop, step) = (*start, *stop, *step);
                if !(step > 0.0) || !start.is_finite() || !stop.is_finite() {
                    return Err(CliError::Parse("grid step must be positive".into()));
                }
                if stop < start {
                    Vec::new()
                } else {
                    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
                    (0..count)
                        .map(|i| hdsteer::fmt::round_sig(start + i as f64 * step))
                        .collect()
                }
            }
        };
        if let Some(bad) = points.iter().find(|e| !(0.0..=1.0).contains(*e)) {
            return Err(CliError::Validation(format!("grid point {bad} is outside [0, 1]")));
        }
        Ok(points)
    }
}

/// Builds payload objects with the scenario's validation tolerances and a
/// seeded generator for random payloads.
pub struct Builder {
    pub tol: Tolerances,
    pub rng: ChaCha8Rng,
    pub used_randomness: bool,
}

fn matrix(lit: &MatrixLiteral) -> Result<hdsteer::ComplexMatrix, CliError> {
    lit.to_matrix().map_err(CliError::from_core)
}

fn nested(inputs: &[Vec<MatrixLiteral>]) -> Result<Vec<Vec<hdsteer::ComplexMatrix>>, CliError> {
    inputs
        .iter()
        .map(|v| v.iter().map(matrix).collect())
        .collect()
}

impl Builder {
    pub fn state(&mut self, spec: &StateSpec) -> Result<BipartiteState, CliError> {
        let out = match spec {
            StateSpec::Isotropic { d, eta } => isotropic(*d, *eta),
            StateSpec::PhiPlus { d } => Ok(BipartiteState::phi_plus(*d)),
            StateSpec::MaximallyMixed { dim_a, dim_b } => Ok(BipartiteState::product(
                &DensityMatrix::maximally_mixed(*dim_a),
                &DensityMatrix::maximally_mixed(*dim_b),
            )),
            StateSpec::Random { dim_a, dim_b, rank } => {
                let n = dim_a * dim_b;
                if *rank == 0 || *rank > n {
                    return Err(CliError::Validation(format!("rank {rank} outside 1..={n}")));
                }
                self.used_randomness = true;
                BipartiteState::new(*dim_a, *dim_b, random_density(n, *rank, &mut self.rng))
            }
            StateSpec::Literal { dim_a, dim_b, matrix: m } => {
                DensityMatrix::with_tolerances(matrix(m)?, &self.tol)
                    .and_then(|rho| BipartiteState::new(*dim_a, *dim_b, rho))
            }
        };
        out.map_err(CliError::from_core)
    }

    pub fn measurements(&mut self, spec: &MeasurementSpec) -> Result<MeasurementSet, CliError> {
        let out = match spec {
            MeasurementSpec::Mubs { d, eta } => MeasurementSet::fourier_mubs(*d)
                .and_then(|m| add_white_noise(&m, eta.unwrap_or(1.0))),
            MeasurementSpec::NoisyPvm {
                d,
                eta,
                unitaries,
                samples,
            } => {
                let family = if unitaries.is_empty() {
                    self.used_randomness = true;
                    NoisyPvmFamily::sample(*d, *eta, samples.unwrap_or(2), &mut self.rng)
                } else {
                    let us = unitaries.iter().map(matrix).collect::<Result<Vec<_>, _>>()?;
                    NoisyPvmFamily::new(*d, *eta, us)
                };
                family.map(|f| f.members())
            }
            MeasurementSpec::Random {
                d,
                inputs,
                outcomes,
            } => {
                if *d == 0 || *inputs == 0 || *outcomes == 0 {
                    return Err(CliError::Validation("random measurements need positive sizes".into()));
                }
                self.used_randomness = true;
                Ok(random_measurement_set(*d, *inputs, *outcomes, &mut self.rng))
            }
            MeasurementSpec::Literal { dim, inputs } => {
                MeasurementSet::with_tolerances(*dim, nested(inputs)?, &self.tol)
            }
        };
        out.map_err(CliError::from_core)
    }

    pub fn assemblage(&self, spec: &SetSpec) -> Result<Assemblage, CliError> {
        Assemblage::with_tolerances(spec.dim, nested(&spec.inputs)?, &self.tol)
            .map_err(CliError::from_core)
    }

    pub fn density(&self, lit: &MatrixLiteral) -> Result<DensityMatrix, CliError> {
        DensityMatrix::with_tolerances(matrix(lit)?, &self.tol).map_err(CliError::from_core)
    }

    pub fn channel(&self, spec: &ChannelSpec) -> Result<KrausChannel, CliError> {
        let out = match spec {
            ChannelSpec::Identity { d } => Ok(KrausChannel::identity(*d)),
            ChannelSpec::Depolarizing { d, eta } => KrausChannel::depolarizing(*d, *eta),
            ChannelSpec::Literal {
                dim_in,
                dim_out,
                kraus,
            } => {
                let ks = kraus.iter().map(matrix).collect::<Result<Vec<_>, _>>()?;
                KrausChannel::with_tolerance(*dim_in, *dim_out, ks, self.tol.completeness)
            }
        };
        out.map_err(CliError::from_core)
    }
}
