//! Linear algebra primitives and validated quantum objects.

pub mod linalg;
pub mod objects;
pub mod tolerances;

pub use linalg::{ComplexMatrix, ComplexVector, Subsystem, C64};
pub use objects::{partial_trace, BipartiteState, DensityMatrix, MeasurementSet};
pub use tolerances::Tolerances;
