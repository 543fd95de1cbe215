use thiserror::Error;

/// Errors raised by the solver, the diagnostics and the kinetic reference solver.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("axis {axis} out of range for a {dim}-dimensional grid")]
    AxisOutOfRange { axis: usize, dim: usize },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("source has non-zero mean {mean:e} (L2 norm {norm:e})")]
    MeanNotZero { mean: f64, norm: f64 },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("fluid density 1+n reached {min:e} (must stay positive)")]
    NonPositiveDensity { min: f64 },
    #[error("state violates an invariant: {0}")]
    InvalidState(String),
    #[error("particle density fell to {min:e}, below the vacuum floor")]
    VacuumBreach { min: f64 },
    #[error("fluid density 1+n fell to {min:e}")]
    FluidVacuumBreach { min: f64 },
    #[error("non-finite value in {0}")]
    Blowup(String),
    #[error("degenerate state: {0}")]
    DegenerateState(String),
    #[error("total particle mass is not positive ({0:e})")]
    ZeroMass(f64),
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("series contains non-positive values")]
    NonPositiveValues,
    #[error("not enough samples: need {needed}, got {got}")]
    NotEnoughSamples { needed: usize, got: usize },
    #[error("inadmissible initial data: {0}")]
    InadmissibleInit(String),
}

pub type Result<T> = std::result::Result<T, Error>;
