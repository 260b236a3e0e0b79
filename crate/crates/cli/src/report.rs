//! Versioned JSON reports.

use hydrostab::equilibrium::EquilibriumResult;
use hydrostab::hydrostatics::EquilibriumHydrostatics;
use hydrostab::kinematics::Pose;
use hydrostab::oscillations::ModalResult;
use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::config::{AnalysisConfig, VerificationTolerances};

/// Bumped whenever a field changes meaning or disappears.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub input: AnalysisConfig,
    pub body: BodyEcho,
    pub equilibrium: EquilibriumResult,
    /// `V*`, `B*`, `z*_B`, `A_WP`, `x_C`, `y_C` and `S` at the equilibrium.
    pub hydrostatics: EquilibriumHydrostatics,
    /// `rho g V*` (N).
    pub displacement: f64,
    pub stability: Stability,
    pub modes: Option<ModalResult>,
    pub verification: VerificationSummary,
}

/// The resolved body as used by the analysis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BodyEcho {
    pub mass: f64,
    /// `G` in mesh coordinates (after turning a `z_up` mesh over).
    pub center_of_gravity: Vector3<f64>,
    /// Inertia about `G`, body axes.
    pub inertia: Matrix3<f64>,
    /// Parallel-axis term added to the supplied or computed tensor.
    pub inertia_shift: Option<Matrix3<f64>>,
    pub mesh_volume: f64,
    pub mesh_diameter: f64,
    pub triangles: usize,
    pub symmetric: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HessianSource {
    /// Waterplane closed form at a level, symmetric equilibrium.
    ClosedForm,
    /// Restoring block of the general force gradient.
    ForceGradient,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stability {
    pub hessian_source: HessianSource,
    /// Hessian of `U` in `(zeta, theta, phi)`.
    pub hessian: Matrix3<f64>,
    pub pseudo_stable: bool,
    /// Metacentric heights; only defined at a level equilibrium.
    pub gm_t: Option<f64>,
    pub gm_l: Option<f64>,
    /// `(V GM_T, V GM_L - A x_C^2)` (m^4).
    pub margins: Option<[f64; 2]>,
    /// A margin is within round-off of zero.
    pub marginal: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerificationSummary {
    pub poses: usize,
    pub loops: usize,
    /// Largest `|oint Q . dq| / max |U_B|`.
    pub loop_work: f64,
    /// Largest relative mismatch of `Q` against differences of `U_B`.
    pub gradient: f64,
    /// Largest relative mismatch of the force gradient against differences of `Q`.
    pub hessian: f64,
    pub hessian_asymmetry: f64,
    /// Largest `|dU_B/dq|` along `xi, eta, psi`, over `rho g V L`.
    pub cyclic_derivative: f64,
    /// Submerged volume and moments unchanged by horizontal shifts and yaw.
    pub e2_invariant: bool,
    pub thresholds: VerificationTolerances,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModesReport {
    pub schema_version: u32,
    pub input: AnalysisConfig,
    pub q_star: Pose,
    pub hessian_source: HessianSource,
    pub reduced_mass: Matrix3<f64>,
    pub modes: ModalResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub schema_version: u32,
    pub input: AnalysisConfig,
    pub seed: u64,
    pub summary: VerificationSummary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClipSummary {
    pub pose: Pose,
    pub volume: f64,
    pub buoyancy_center: Option<Vector3<f64>>,
    pub waterplane_area: f64,
    pub triangles: usize,
}
