//! Hydrostatics and rigid-body dynamics of floating bodies.
//!
//! Starting from a watertight hull mesh in body coordinates and the mass
//! properties of the body, this crate evaluates the hydrostatic potential
//! and generalized buoyancy forces, locates equilibria, classifies them via
//! the Hessian of the potential (metacentric heights), reduces the 6-DOF
//! Lagrangian over the cyclic coordinates `(xi, eta, psi)`, integrates the
//! full and reduced equations of motion and extracts small-oscillation
//! normal modes.
//!
//! Conventions, used everywhere:
//! * the fixed frame has its origin on the free surface and `k3` pointing
//!   **down**; `zeta` is the depth of the mass center `G`;
//! * the body frame has its origin at `G` and `e3` pointing down when level;
//! * coordinates are ordered `(xi, eta, zeta, psi, theta, phi)`;
//! * the "potential" `U = m g zeta + U_B` enters the Lagrangian with a plus
//!   sign (`L = T + U`), so generalized forces are `+dU/dq` and a stable
//!   equilibrium is a maximum of `U` (negative-definite Hessian).

pub mod clip;
pub mod dynamics;
pub mod equilibrium;
pub mod error;
pub mod hydrostatics;
pub mod integrator;
pub mod io;
pub mod kinematics;
pub mod mesh;
pub mod oscillations;
pub mod polygon;
pub mod shapes;
pub mod verify;

pub use clip::{clip_by_waterplane, SubmergedSolid, WaterPlane};
pub use error::{Error, Result};
pub use kinematics::Pose;
pub use mesh::{HullMesh, MeshTolerances};
