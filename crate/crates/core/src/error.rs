use thiserror::Error;

/// Errors raised by the scattering, splitting and timing routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("wavenumber must be positive, got {0}")]
    NonPositiveWavenumber(f64),

    #[error("non-finite field value at node {0}")]
    NonFinite(usize),

    #[error("flux needs an interior node, got {index} of {len}")]
    BoundaryNode { index: usize, len: usize },

    #[error("field has zero norm")]
    ZeroNorm,

    #[error("{0} requires a mirror-symmetric potential")]
    Asymmetric(&'static str),

    #[error("packet has k0*l0 = {0:.3}, below 3: incident packet carries negative-momentum weight")]
    IncompleteScattering(f64),

    #[error("probability {leak:.3e} lost off the spatial grid at t = {time} fs; enlarge the grid")]
    GridLeak { leak: f64, time: f64 },

    #[error("stationary ODE oracle did not converge at k = {k} after {steps} steps (residual {residual:.3e})")]
    OracleNotConverged { k: f64, steps: usize, residual: f64 },

    #[error("no odd reflection branch at k = {k}: parity residuals {plus:.3e} (+), {minus:.3e} (-)")]
    BranchSelection { k: f64, plus: f64, minus: f64 },

    #[error("fields live on different grids or times")]
    GridMismatch,

    #[error("undefined average: {0}")]
    Undefined(&'static str),

    #[error("configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
