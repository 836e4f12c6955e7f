//! Numerical tolerances used when validating quantum objects.

/// Max abs entry of `ρ − ρ†`.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Smallest admissible eigenvalue is `-PSD_TOL`.
pub const PSD_TOL: f64 = 1e-9;
/// Unit-trace check.
pub const TRACE_TOL: f64 = 1e-10;
/// Max abs entry of `Σ_a M_{a|x} − 1`, and of marginal differences.
pub const COMPLETENESS_TOL: f64 = 1e-9;
/// Eigenvalues / singular values at or below this are treated as zero.
pub const RANK_TOL: f64 = 1e-8;
pub const UNITARY_TOL: f64 = 1e-9;

/// Per-call override of the validation tolerances.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Tolerances {
    pub hermitian: f64,
    pub psd: f64,
    pub trace: f64,
    pub completeness: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hermitian: HERMITIAN_TOL,
            psd: PSD_TOL,
            trace: TRACE_TOL,
            completeness: COMPLETENESS_TOL,
        }
    }
}

impl Tolerances {
    /// Every tolerance scaled to at least `tol`.
    pub fn loosened(tol: f64) -> Self {
        let d = Self::default();
        Self {
            hermitian: d.hermitian.max(tol),
            psd: d.psd.max(tol),
            trace: d.trace.max(tol),
            completeness: d.completeness.max(tol),
        }
    }
}
