//! Core solver library: weighted finite-volume ion transport around fixed
//! point charges in two dimensions.

pub mod charges;
pub mod diagnostics;
pub mod dst;
pub mod elliptic;
pub mod error;
pub mod evolution;
pub mod field;
pub mod grid;
pub mod muckenhoupt;
pub mod quadrature;
pub mod sparse;
pub mod transform;
pub mod weights;

pub use charges::{validate_charges, Charge, ChargeSet, ALPHA_ADMISSIBLE_LIMIT};
pub use diagnostics::{DiagnosticsRecord, StabilityFlag, ThetaParams};
pub use elliptic::{BoundaryKind, PoissonSolver};
pub use error::{CoreError, Result};
pub use evolution::{FluxScheme, RunOptions, SchemeConfig, Trajectory};
pub use grid::{FaceField, Grid, Rect};
pub use transform::{PhysicalState, State};
pub use weights::WeightField;
