//! Steering assemblages, measurement simulability and channel certificates
//! in finite dimension.
//!
//! The crate builds states, measurement sets, assemblages and channels,
//! translates between them, evaluates a dimension witness for steering
//! assemblages together with closed-form noise thresholds, and computes
//! convex-weight quantifiers with dual certificates.

pub mod channels;
pub mod error;
pub mod fmt;
pub mod io;
pub mod qcore;
pub mod quantifiers;
pub mod random;
pub mod steering;
pub mod witnesses;

pub use error::{Error, Result};
pub use qcore::{BipartiteState, ComplexMatrix, DensityMatrix, MeasurementSet};
pub use steering::Assemblage;
