use thiserror::Error;

/// Errors surfaced by the solver library.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("two charges share the position ({x}, {y})")]
    DuplicateChargePosition { x: f64, y: f64 },

    #[error("charge at ({x}, {y}) is not strictly inside the domain")]
    ChargeOutsideDomain { x: f64, y: f64 },

    #[error("charge at ({x}, {y}) has zero strength")]
    ZeroStrength { x: f64, y: f64 },

    #[error("linear solver stalled: residual {residual:e} after {iterations} iterations (target {target:e})")]
    LinearSolverDivergence {
        iterations: usize,
        residual: f64,
        target: f64,
    },

    #[error("adaptive quadrature hit the subdivision cap ({max_depth} levels) with estimated error {error:e} above tolerance {tolerance:e}")]
    QuadratureNonconvergence {
        max_depth: usize,
        error: f64,
        tolerance: f64,
    },

    #[error("green function evaluated at a singular point ({x}, {y})")]
    EvaluationAtSingularity { x: f64, y: f64 },

    #[error("picard iteration exceeded {max_iterations} iterations (last relative update {update:e})")]
    PicardNonconvergence { max_iterations: usize, update: f64 },

    #[error("equilibrium fixed point exceeded {max_iterations} iterations (last update {update:e})")]
    CcpbNonconvergence { max_iterations: usize, update: f64 },

    #[error("negative initial data for {species}: {count} cells below zero (min {min:e})")]
    NegativeInitialData {
        species: &'static str,
        count: usize,
        min: f64,
    },

    #[error("norm-ratio probe received an all-zero sample")]
    DivisionByZeroSample,

    #[error("poincare probe received a constant field")]
    ConstantFieldInPoincareProbe,

    #[error("theta = {theta} falls outside (0, 1)")]
    ThetaOutOfRange { theta: f64 },

    #[error("negative density in energy computation (min {min:e})")]
    NegativeDensityInEnergy { min: f64 },

    #[error("{0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;
