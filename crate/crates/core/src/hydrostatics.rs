//! Hydrostatic potential, generalized buoyancy forces and their gradient,
//! metacentric heights and the pseudo-stability test.
//!
//! Sign conventions: `zeta` and `k3` point down, the weight potential is
//! `U_G = m g zeta` and the buoyancy potential is
//! `U_B = -rho g int_D (zeta + R3i x_i) dv = -rho g V depth(B)`.
//! Generalized forces are `Q_k = dU_B/dq^k`. An equilibrium is
//! pseudo-stable when the Hessian of `U = U_G + U_B` in `(zeta, theta, phi)`
//! is negative definite.

use nalgebra::{Matrix3, Matrix6, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use crate::clip::{clip_by_waterplane, CapIntegrals, SubmergedSolid, WaterplaneProperties};
use crate::error::{Error, Result};
use crate::kinematics::{self, partials_r3, Pose, PHI, THETA, ZETA};
use crate::mesh::HullMesh;

/// Residual tolerance for accepting a configuration as an equilibrium,
/// relative to the displacement `m g`.
pub const EQUILIBRIUM_TOLERANCE: f64 = 1e-8;

/// Angles below this (rad) count as a level waterplane for the closed-form Hessian.
pub const LEVEL_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluidEnvironment {
    /// Fluid mass density (kg/m^3).
    pub density: f64,
    /// Gravitational acceleration (m/s^2).
    pub gravity: f64,
}

impl FluidEnvironment {
    pub fn new(density: f64, gravity: f64) -> Result<Self> {
        if !(density > 0.0 && density.is_finite()) || !(gravity > 0.0 && gravity.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "fluid density and gravity must be positive (got {density}, {gravity})"
            )));
        }
        Ok(Self { density, gravity })
    }

    pub fn seawater() -> Self {
        Self {
            density: 1025.0,
            gravity: 9.81,
        }
    }

    pub fn rho_g(&self) -> f64 {
        self.density * self.gravity
    }
}

/// Everything the hydrostatics needs from one clip of the hull.
#[derive(Debug, Clone, PartialEq)]
pub struct HydrostaticState {
    pub pose: Pose,
    pub volume: f64,
    /// `int_D x dv` in body coordinates.
    pub first_moment: Vector3<f64>,
    /// Buoyancy center in body coordinates, `None` when nothing is submerged.
    pub buoyancy_center: Option<Vector3<f64>>,
    /// Waterplane properties relative to the projection of `G`.
    pub waterplane: WaterplaneProperties,
    /// `U_B` (J).
    pub potential: f64,
    /// Generalized forces `Q_k` in coordinate order.
    pub forces: Vector6<f64>,
}

impl HydrostaticState {
    pub fn evaluate(mesh: &HullMesh, pose: &Pose, env: &FluidEnvironment) -> Result<Self> {
        let solid = clip_by_waterplane(mesh, pose)?;
        Ok(Self::from_solid(&solid, pose, env))
    }

    pub fn from_solid(solid: &SubmergedSolid, pose: &Pose, env: &FluidEnvironment) -> Self {
        let vol = solid.volume_and_first_moments();
        Self {
            pose: *pose,
            volume: vol.volume,
            first_moment: vol.first,
            buoyancy_center: vol.buoyancy_center(),
            waterplane: solid.waterplane_properties(&Vector3::zeros()),
            potential: potential_from_moments(env, pose, vol.volume, &vol.first),
            forces: forces_from_moments(env, pose, vol.volume, &vol.first),
        }
    }
}

pub(crate) fn potential_from_moments(env: &FluidEnvironment, pose: &Pose, volume: f64, first: &Vector3<f64>) -> f64 {
    -env.rho_g() * (pose.zeta * volume + kinematics::k3_body(pose).dot(first))
}

pub(crate) fn forces_from_moments(env: &FluidEnvironment, pose: &Pose, volume: f64, first: &Vector3<f64>) -> Vector6<f64> {
    let rg = env.rho_g();
    let (sth, cth) = pose.theta.sin_cos();
    let (sph, cph) = pose.phi.sin_cos();
    let [m1, m2, m3] = [first.x, first.y, first.z];
    let mut q = Vector6::zeros();
    q[ZETA] = -rg * volume;
    q[THETA] = rg * (cth * m1 + sth * (sph * m2 + cph * m3));
    q[PHI] = -rg * cth * (cph * m2 - sph * m3);
    q
}

/// `U_B = -rho g V depth(B)` with the fixed origin on the free surface.
pub fn potential(mesh: &HullMesh, pose: &Pose, env: &FluidEnvironment) -> Result<f64> {
    let vol = clip_by_waterplane(mesh, pose)?.volume_and_first_moments();
    Ok(potential_from_moments(env, pose, vol.volume, &vol.first))
}

/// Waterplane term `1/2 int_A (zeta' + R3i x_i)^2 dS` of the general
/// potential when the fixed origin sits `origin_offset` below the free
/// surface (so `zeta' = zeta - origin_offset`). Zero for a zero offset.
pub fn surface_term(mesh: &HullMesh, pose: &Pose, origin_offset: f64) -> Result<f64> {
    let solid = clip_by_waterplane(mesh, pose)?;
    Ok(0.5 * solid.cap_depth_square_integral(origin_offset))
}

/// The general potential
/// `rho g { -int_D (zeta' + R3i x_i) dv + 1/2 int_A (zeta' + R3i x_i)^2 dS }`
/// for a fixed origin `origin_offset` below the free surface.
pub fn potential_with_origin_offset(
    mesh: &HullMesh,
    pose: &Pose,
    env: &FluidEnvironment,
    origin_offset: f64,
) -> Result<f64> {
    let solid = clip_by_waterplane(mesh, pose)?;
    let vol = solid.volume_and_first_moments();
    let shifted = pose.zeta - origin_offset;
    let volume_term = shifted * vol.volume + kinematics::k3_body(pose).dot(&vol.first);
    let surface = 0.5 * solid.cap_depth_square_integral(origin_offset);
    Ok(env.rho_g() * (-volume_term + surface))
}

/// Generalized buoyancy forces `Q_k`; `Q_xi = Q_eta = Q_psi = 0` exactly.
pub fn generalized_forces(mesh: &HullMesh, pose: &Pose, env: &FluidEnvironment) -> Result<Vector6<f64>> {
    let vol = clip_by_waterplane(mesh, pose)?.volume_and_first_moments();
    Ok(forces_from_moments(env, pose, vol.volume, &vol.first))
}

/// Buoyant force and its torque about `G`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuoyantWrench {
    /// Force in fixed-frame components (N); points up, i.e. along `-k3`.
    pub force: Vector3<f64>,
    /// Torque about `G` in body components (N m).
    pub torque_body: Vector3<f64>,
    /// Torque about `G` in fixed-frame components (N m).
    pub torque_fixed: Vector3<f64>,
}

impl BuoyantWrench {
    /// `F . v_G + M_G . omega`, with `v_G` in fixed and `omega` in body components.
    pub fn power(&self, v_g: &Vector3<f64>, omega_body: &Vector3<f64>) -> f64 {
        self.force.dot(v_g) + self.torque_body.dot(omega_body)
    }
}

/// `F_B = -rho g V k3`, `M_G = -rho g V (B - G) x k3`.
pub fn buoyant_force_torque(mesh: &HullMesh, pose: &Pose, env: &FluidEnvironment) -> Result<BuoyantWrench> {
    let vol = clip_by_waterplane(mesh, pose)?.volume_and_first_moments();
    let rg = env.rho_g();
    let k3 = kinematics::k3_body(pose);
    // V (B - G) is the first moment itself; no division needed when V = 0.
    let torque_body = -rg * vol.first.cross(&k3);
    let rotation = kinematics::rotation_matrix(pose);
    Ok(BuoyantWrench {
        force: Vector3::new(0.0, 0.0, -rg * vol.volume),
        torque_body,
        torque_fixed: rotation * torque_body,
    })
}

/// `dQ_k/dq^r` from the volume term and the waterplane quadratic form.
/// Only the `(zeta, theta, phi)` block is nonzero.
pub fn force_gradient(mesh: &HullMesh, pose: &Pose, env: &FluidEnvironment) -> Result<Matrix6<f64>> {
    let solid = clip_by_waterplane(mesh, pose)?;
    Ok(force_gradient_from_solid(&solid, pose, env))
}

pub(crate) fn force_gradient_from_solid(solid: &SubmergedSolid, pose: &Pose, env: &FluidEnvironment) -> Matrix6<f64> {
    let vol = solid.volume_and_first_moments();
    let cap = solid.cap_integrals();
    gradient_from_integrals(env, pose, &vol.first, &cap)
}

fn gradient_from_integrals(env: &FluidEnvironment, pose: &Pose, first: &Vector3<f64>, cap: &CapIntegrals) -> Matrix6<f64> {
    let partials = partials_r3(pose);
    let offset = |k: usize| if k == ZETA { 1.0 } else { 0.0 };
    let mut grad = Matrix6::zeros();
    for k in 0..6 {
        for r in k..6 {
            let (ak, ar) = (offset(k), offset(r));
            let (bk, br) = (&partials.first[k], &partials.first[r]);
            let waterplane = ak * ar * cap.area + ak * br.dot(&cap.first) + ar * bk.dot(&cap.first) + bk.dot(&(cap.second * br));
            let value = -env.rho_g() * (partials.second[k][r].dot(first) + waterplane);
            grad[(k, r)] = value;
            grad[(r, k)] = value;
        }
    }
    grad
}

/// Restriction of a 6x6 coordinate matrix to `(zeta, theta, phi)`.
pub fn restoring_block(m: &Matrix6<f64>) -> Matrix3<f64> {
    let idx = kinematics::RESTORING;
    Matrix3::from_fn(|i, j| m[(idx[i], idx[j])])
}

/// Hydrostatic quantities at a level equilibrium, in the body frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumHydrostatics {
    pub volume: f64,
    pub buoyancy_center: Vector3<f64>,
    /// `(B* - G) . e3`.
    pub z_b: f64,
    pub waterplane_area: f64,
    pub x_c: f64,
    pub y_c: f64,
    /// Second moment of the static waterplane about `G_bar`, body axes.
    pub second_moment: Matrix3<f64>,
}

impl EquilibriumHydrostatics {
    pub fn evaluate(mesh: &HullMesh, q_star: &Pose) -> Result<Self> {
        let solid = clip_by_waterplane(mesh, q_star)?;
        let vol = solid.volume_and_first_moments();
        let b = vol.buoyancy_center().ok_or(Error::ZeroVolume)?;
        let wp = solid.waterplane_properties(&Vector3::zeros());
        Ok(Self {
            volume: vol.volume,
            buoyancy_center: b,
            z_b: b.z,
            waterplane_area: wp.area,
            x_c: wp.x_c,
            y_c: wp.y_c,
            second_moment: wp.second,
        })
    }

    /// The closed-form Hessian of `U` at a level, port-starboard symmetric equilibrium.
    pub fn closed_form_hessian(&self, env: &FluidEnvironment) -> Matrix3<f64> {
        let a = self.waterplane_area;
        let vz = self.volume * self.z_b;
        let s = &self.second_moment;
        env.rho_g()
            * Matrix3::new(
                -a,
                a * self.x_c,
                0.0,
                a * self.x_c,
                vz - s[(0, 0)],
                0.0,
                0.0,
                0.0,
                vz - s[(1, 1)],
            )
    }

    pub fn metacentric_heights(&self) -> Result<(f64, f64)> {
        metacentric_heights(self.volume, self.z_b, &self.second_moment)
    }
}

/// Residual `(m g + Q_zeta, Q_theta, Q_phi)` of the balance equations.
pub fn equilibrium_residual(forces: &Vector6<f64>, mass: f64, env: &FluidEnvironment) -> Vector3<f64> {
    Vector3::new(mass * env.gravity + forces[ZETA], forces[THETA], forces[PHI])
}

/// Scale-free residual norm: force over `m g`, moments over `m g L`.
pub(crate) fn residual_norm(residual: &Vector3<f64>, mass: f64, env: &FluidEnvironment, length: f64) -> f64 {
    let w = mass * env.gravity;
    (residual[0].abs() / w).max(residual[1].abs() / (w * length)).max(residual[2].abs() / (w * length))
}

/// Closed-form Hessian at a level equilibrium of a symmetric body.
///
/// Fails if `q_star` does not balance `mass`, if the body is not flagged
/// symmetric, or if the waterplane is not parallel to `x3 = 0`.
pub fn hessian_at_equilibrium(
    mesh: &HullMesh,
    q_star: &Pose,
    mass: f64,
    env: &FluidEnvironment,
) -> Result<Matrix3<f64>> {
    let forces = generalized_forces(mesh, q_star, env)?;
    let residual = equilibrium_residual(&forces, mass, env);
    let norm = residual_norm(&residual, mass, env, mesh.diameter());
    if norm > EQUILIBRIUM_TOLERANCE {
        return Err(Error::NotAnEquilibrium {
            residual: norm,
            tolerance: EQUILIBRIUM_TOLERANCE,
        });
    }
    if !mesh.is_symmetric() {
        return Err(Error::AsymmetricBody);
    }
    if q_star.theta.abs() > LEVEL_TOLERANCE || q_star.phi.abs() > LEVEL_TOLERANCE {
        return Err(Error::NonLevelEquilibrium {
            theta: q_star.theta,
            phi: q_star.phi,
        });
    }
    Ok(EquilibriumHydrostatics::evaluate(mesh, q_star)?.closed_form_hessian(env))
}

/// `(GM_T, GM_L) = (S22 / V - z_B, S11 / V - z_B)`.
pub fn metacentric_heights(volume: f64, z_b: f64, second_moment: &Matrix3<f64>) -> Result<(f64, f64)> {
    if volume <= 0.0 {
        return Err(Error::ZeroVolume);
    }
    Ok((
        second_moment[(1, 1)] / volume - z_b,
        second_moment[(0, 0)] / volume - z_b,
    ))
}

/// Inputs of the metacentric stability conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetacentricData {
    pub gm_t: f64,
    pub gm_l: f64,
    pub waterplane_area: f64,
    pub x_c: f64,
    /// `m g = rho g V*` (N).
    pub displacement: f64,
    /// `(B* - G) . e3` (m).
    pub z_b: f64,
}

impl MetacentricData {
    pub fn from_equilibrium(eq: &EquilibriumHydrostatics, env: &FluidEnvironment) -> Result<Self> {
        let (gm_t, gm_l) = eq.metacentric_heights()?;
        Ok(Self {
            gm_t,
            gm_l,
            waterplane_area: eq.waterplane_area,
            x_c: eq.x_c,
            displacement: env.rho_g() * eq.volume,
            z_b: eq.z_b,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    /// Hessian of `U` in `(zeta, theta, phi)`.
    pub hessian: Matrix3<f64>,
    pub gm_t: f64,
    pub gm_l: f64,
    pub z_b_star: f64,
    pub displacement: f64,
    /// `(S22 - V z_B, S11 - V z_B - A x_C^2)` (m^4); both positive iff pseudo-stable.
    pub margins: [f64; 2],
    pub pseudo_stable: bool,
    /// A margin is within round-off of zero; the verdict is not reliable.
    pub marginal: bool,
    /// Negative definiteness of `hessian` by leading principal minors.
    pub hessian_negative_definite: bool,
}

/// Relative size of a margin below which the case is flagged marginal.
pub const MARGINAL_TOLERANCE: f64 = 1e-9;

/// Metacentric pseudo-stability test: `GM_T > 0` and
/// `Delta GM_L > rho g A_WP x_C^2`.
pub fn pseudo_stability_check(data: &MetacentricData, env: &FluidEnvironment) -> StabilityReport {
    let rg = env.rho_g();
    let volume = data.displacement / rg;
    let a = data.waterplane_area;
    let margin_t = volume * data.gm_t;
    let margin_l = volume * data.gm_l - a * data.x_c * data.x_c;
    let hessian = Matrix3::new(
        -rg * a,
        rg * a * data.x_c,
        0.0,
        rg * a * data.x_c,
        -data.displacement * data.gm_l,
        0.0,
        0.0,
        0.0,
        -data.displacement * data.gm_t,
    );
    let scale = volume * (data.gm_t.abs().max(data.gm_l.abs()) + data.z_b.abs()).max(f64::MIN_POSITIVE);
    let marginal = margin_t.abs() <= MARGINAL_TOLERANCE * scale || margin_l.abs() <= MARGINAL_TOLERANCE * scale;
    StabilityReport {
        hessian,
        gm_t: data.gm_t,
        gm_l: data.gm_l,
        z_b_star: data.z_b,
        displacement: data.displacement,
        margins: [margin_t, margin_l],
        pseudo_stable: data.gm_t > 0.0 && data.displacement * data.gm_l > rg * a * data.x_c * data.x_c,
        marginal,
        hessian_negative_definite: is_negative_definite(&hessian),
    }
}

/// Sylvester's criterion applied to `-h`.
pub fn is_negative_definite(h: &Matrix3<f64>) -> bool {
    let m = -h;
    let d1 = m[(0, 0)];
    let d2 = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    let d3 = m.determinant();
    d1 > 0.0 && d2 > 0.0 && d3 > 0.0
}
