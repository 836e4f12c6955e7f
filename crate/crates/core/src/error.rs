use thiserror::Error;

use crate::quantifiers::conic::SolverError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("trace is {trace}, expected {expected}")]
    TraceMismatch { trace: f64, expected: f64 },

    #[error("effects of input {input} do not sum to the identity (max deviation {deviation:.3e})")]
    Incomplete { input: usize, deviation: f64 },

    #[error("assemblage marginal of input {input} differs from input 0 by {deviation:.3e}")]
    Signaling { input: usize, deviation: f64 },

    #[error("basis is not unitary (max deviation {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    #[error("Kraus operators are not trace preserving (max deviation {deviation:.3e})")]
    NotTracePreserving { deviation: f64 },

    #[error("{name} = {value} is outside its allowed range {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("marginal state is rank deficient (rank {rank} of {dim})")]
    RankDeficient { rank: usize, dim: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("problem exceeds supported size: {0}")]
    ScaleExceeded(String),

    #[error("convex weights are only available at level n = 1 (requested n = {0}); no tractable description of the level-n free sets is known")]
    UnsupportedLevel(usize),

    #[error(transparent)]
    Solver(#[from] SolverError),
}
