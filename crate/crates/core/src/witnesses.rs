//! MUB-based Schmidt-number / simulability witness, closed-form visibility
//! thresholds for isotropic states and noisy measurements, and the region
//! table for the isotropic family.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fmt::format_sig;
use crate::qcore::linalg::{fourier_mub_pair, projector, re_trace_product, ComplexMatrix};
use crate::qcore::objects::{BipartiteState, MeasurementSet};
use crate::steering::Assemblage;

/// Values within this margin of a bound count as satisfying it.
pub const VIOLATION_MARGIN: f64 = 1e-12;

/// Two-input witness `W_{a|1} = |a⟩⟨a|`, `W_{b|2} = (|φ_b⟩⟨φ_b|)ᵀ` built
/// from the computational and Fourier bases.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GhdsWitness {
    dim: usize,
    operators: Vec<Vec<ComplexMatrix>>,
}

impl GhdsWitness {
    pub fn new(d: usize) -> Result<Self> {
        let (computational, fourier) = fourier_mub_pair(d)?;
        let operators = vec![
            computational.iter().map(projector).collect(),
            fourier.iter().map(|v| projector(v).transpose()).collect(),
        ];
        Ok(Self { dim: d, operators })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn operators(&self) -> &[Vec<ComplexMatrix>] {
        &self.operators
    }

    /// `N = 1 + 1/√d`.
    pub fn normalization(&self) -> f64 {
        1.0 + 1.0 / (self.dim as f64).sqrt()
    }

    /// The measurements Alice performs so that a maximally entangled state
    /// attains the maximal value 2: the untransposed bases.
    pub fn measurements(&self) -> MeasurementSet {
        let (computational, fourier) =
            fourier_mub_pair(self.dim).expect("dimension validated on construction");
        MeasurementSet::from_bases(&[computational, fourier])
            .expect("Fourier pair is a valid pair of bases")
    }
}

/// `Σ_{a,x} Tr[σ_{a|x} W_{a|x}]`.
pub fn witness_value(sigma: &Assemblage, witness: &GhdsWitness) -> Result<f64> {
    if sigma.dim() != witness.dim
        || sigma.num_inputs() != 2
        || (0..2).any(|x| sigma.outcomes(x) != witness.dim)
    {
        return Err(Error::Shape(format!(
            "witness needs 2 inputs with {d} outcomes on dimension {d}",
            d = witness.dim
        )));
    }
    let mut value = 0.0;
    for (members, ops) in sigma.inputs().iter().zip(&witness.operators) {
        for (s, w) in members.iter().zip(ops) {
            value += re_trace_product(s, w);
        }
    }
    Ok(value)
}

fn check_level(d: usize, n: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::OutOfRange {
            name: "d",
            value: d as f64,
            range: "d >= 2",
        });
    }
    if n < 1 || n > d {
        return Err(Error::OutOfRange {
            name: "n",
            value: n as f64,
            range: "1 <= n <= d",
        });
    }
    Ok(())
}

/// Largest witness value attainable by an `n`-preparable assemblage:
/// `N((√n−1)/(√n+1) + 1)` with `N = 1 + 1/√d`.
pub fn witness_bound(d: usize, n: usize) -> Result<f64> {
    check_level(d, n)?;
    let norm = 1.0 + 1.0 / (d as f64).sqrt();
    let s = (n as f64).sqrt();
    Ok(norm * ((s - 1.0) / (s + 1.0) + 1.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificationResult {
    pub witness_value: f64,
    /// Every `n` whose bound is exceeded.
    pub violated_levels: Vec<usize>,
    /// Certified lower bound on the Schmidt number of the shared state.
    pub certified_sn: usize,
    /// Alice's measurements are certified not to be `n`-simulable for this
    /// `n`; zero when nothing is certified.
    pub not_simulable: usize,
}

/// Evaluates the witness and reports the largest violated level `n`: the
/// shared state has Schmidt number at least `n + 1` and Alice's measurements
/// are not `n`-simulable. A value equal to a bound is not a violation.
pub fn certify(sigma: &Assemblage) -> Result<CertificationResult> {
    let witness = GhdsWitness::new(sigma.dim())?;
    let value = witness_value(sigma, &witness)?;
    certify_value(sigma.dim(), value)
}

/// Certification verdict for a precomputed witness value in dimension `d`.
pub fn certify_value(d: usize, value: f64) -> Result<CertificationResult> {
    let mut violated = Vec::new();
    for n in 1..d {
        if value > witness_bound(d, n)? + VIOLATION_MARGIN {
            violated.push(n);
        }
    }
    let n = violated.iter().copied().max().unwrap_or(0);
    Ok(CertificationResult {
        witness_value: value,
        violated_levels: violated,
        certified_sn: n + 1,
        not_simulable: n,
    })
}

/// Visibility at or below which every noisy PVM in dimension `d` is
/// `n`-simulable: `(d√((n+1)/(d+1)) − 1)/(d − 1)`.
pub fn pvm_nsim_threshold(d: usize, n: usize) -> Result<f64> {
    check_level(d, n)?;
    let (df, nf) = (d as f64, n as f64);
    Ok((df * ((nf + 1.0) / (df + 1.0)).sqrt() - 1.0) / (df - 1.0))
}

/// Visibility above which the isotropic state has Schmidt number at least
/// `n + 1`: `(dn − 1)/(d² − 1)`.
pub fn iso_sn_threshold(d: usize, n: usize) -> Result<f64> {
    check_level(d, n)?;
    let (df, nf) = (d as f64, n as f64);
    Ok((df * nf - 1.0) / (df * df - 1.0))
}

/// Visibility above which a noisy pair of MUBs violates the level-`n`
/// witness bound and is therefore not `n`-simulable:
/// `((d + √d − 1)√n − 1)/((d − 1)(√n + 1))`.
pub fn mub_nsim_threshold(d: usize, n: usize) -> Result<f64> {
    check_level(d, n)?;
    let (df, sn) = (d as f64, (n as f64).sqrt());
    Ok(((df + df.sqrt() - 1.0) * sn - 1.0) / ((df - 1.0) * (sn + 1.0)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub d: usize,
    pub n: usize,
    pub pvm_nsim: f64,
    pub iso_sn: f64,
    pub mub_nsim: f64,
    pub witness_bound: f64,
}

pub fn threshold_report(d: usize, n: usize) -> Result<ThresholdReport> {
    Ok(ThresholdReport {
        d,
        n,
        pvm_nsim: pvm_nsim_threshold(d, n)?,
        iso_sn: iso_sn_threshold(d, n)?,
        mub_nsim: mub_nsim_threshold(d, n)?,
        witness_bound: witness_bound(d, n)?,
    })
}

/// Lower bound on the Schmidt number from the entangled fraction
/// `F = ⟨Φ⁺|ρ|Φ⁺⟩`: the smallest `n` with `F ≤ n/d`, read as "SN ≥ n".
pub fn sn_lower_bound_from_fraction(rho: &BipartiteState) -> Result<usize> {
    let f = rho.entangled_fraction()?;
    let d = rho.dim_a();
    Ok((1..=d)
        .find(|&n| f <= n as f64 / d as f64 + VIOLATION_MARGIN)
        .unwrap_or(d))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionRow {
    pub n: usize,
    pub iso_sn_threshold: f64,
    pub pvm_nsim_threshold: f64,
}

/// Rows `n = 1..d−1` of Schmidt-number and 1-SDI Schmidt-number boundaries
/// for the isotropic family.
pub fn region_table(d: usize) -> Result<Vec<RegionRow>> {
    (1..d)
        .map(|n| {
            Ok(RegionRow {
                n,
                iso_sn_threshold: iso_sn_threshold(d, n)?,
                pvm_nsim_threshold: pvm_nsim_threshold(d, n)?,
            })
        })
        .collect()
}

pub const REGION_CSV_HEADER: &str = "n,iso_sn_threshold,pvm_nsim_threshold";

pub fn region_table_csv(rows: &[RegionRow]) -> String {
    let mut out = String::from(REGION_CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{}\n",
            r.n,
            format_sig(r.iso_sn_threshold),
            format_sig(r.pvm_nsim_threshold)
        ));
    }
    out
}
