use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("mesh is not watertight: directed edge ({0}, {1}) {2}")]
    NonWatertightMesh(usize, usize, &'static str),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("mesh encloses a non-positive volume ({0:e}); triangles must be counter-clockwise seen from outside")]
    InvertedMesh(f64),

    #[error("mesh is not symmetric about x2 = 0: vertex {0} has no mirror image")]
    NotSymmetric(usize),

    #[error("waterplane intersection loop failed to close at {0}")]
    ClipDegenerate(String),

    #[error("polygon is self-intersecting (edges {0} and {1})")]
    SelfIntersecting(usize, usize),

    #[error("pitch angle {0} rad is within the gimbal guard of +/- pi/2")]
    GimbalLock(f64),

    #[error("configuration is not an equilibrium: residual {residual:e} exceeds {tolerance:e}")]
    NotAnEquilibrium { residual: f64, tolerance: f64 },

    #[error("equilibrium waterplane is not parallel to x3 = 0 (theta = {theta}, phi = {phi})")]
    NonLevelEquilibrium { theta: f64, phi: f64 },

    #[error("body is not flagged as symmetric about x2 = 0; use the general force gradient")]
    AsymmetricBody,

    #[error("submerged volume is zero")]
    ZeroVolume,

    #[error("body cannot float: mass {mass} kg needs {needed:e} m^3 but the hull displaces at most {available:e} m^3")]
    WontFloat {
        mass: f64,
        needed: f64,
        available: f64,
    },

    #[error("equilibrium solver diverged after {iterations} iterations (residual {residual:e})")]
    Diverged { iterations: usize, residual: f64 },

    #[error("mass matrix is not positive definite")]
    IndefiniteMass,

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NonSymmetricInput(f64),

    #[error("mode {index} has non-positive eigenvalue {lambda:e}")]
    UnstableMode { index: usize, lambda: f64 },

    #[error("integrator step size underflow at t = {0}")]
    StepSizeUnderflow(f64),

    #[error("integrator exceeded {steps} steps at t = {t}")]
    MaxStepsExceeded { steps: usize, t: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
