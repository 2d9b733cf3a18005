//! Crate-wide error type. Variant names follow the failure modes of the
//! individual operations; numerical failures carry enough context to name the
//! offending operation in reports.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("temperature {theta} outside the admissible range (0, {theta_c})")]
    TemperatureOutOfRange { theta: f64, theta_c: f64 },

    #[error("surface tension has no zero on the scanned bracket ({lo}, {hi})")]
    NoZeroFound { lo: f64, hi: f64 },

    #[error("surface tension has multiple zeros on the scanned bracket; second sign change near {second}")]
    MultipleZeros { second: f64 },

    #[error("mass {m0} leaves phase volumes empty or negative (must lie strictly between {min} and {max})")]
    EmptyPhase { m0: f64, min: f64, max: f64 },

    #[error("{m} spheres of radius {radius} cannot fit in the container")]
    DegenerateConfiguration { m: usize, radius: f64 },

    #[error("no temperature in ({lo}, {hi}) matches the prescribed total energy {e0}")]
    NoRootInRange { e0: f64, lo: f64, hi: f64 },

    #[error("pressure system singular: equal phase densities")]
    SingularSystem,

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("quadrature failure: {0}")]
    QuadratureFailure(String),

    #[error("linear solve failed in {0}")]
    SolveFailure(&'static str),

    #[error("eigensolve failed in {0}")]
    EigensolveFailure(&'static str),

    #[error("kinetic undercooling coefficient is zero: dispersion route unavailable")]
    GammaZero,

    #[error("symmetrized operator not positive semidefinite (min eigenvalue {min_eig})")]
    NotPsd { min_eig: f64 },

    #[error("temperature left (0, theta_c) at t = {t}")]
    RangeExit { t: f64 },

    #[error("time step failed at t = {t}: {reason}")]
    StepFailure { t: f64, reason: String },

    #[error("droplet {index} collapsed below the minimum radius {r_min}")]
    DropletCollapse { index: usize, r_min: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}
