//! Bryan-Tait kinematics.
//!
//! The fixed frame has its origin on the free surface with `k3` pointing
//! down; the body frame has its origin at the mass center `G` with `e3`
//! pointing into the same half-space as `k3`. Orientation is yaw `psi`,
//! pitch `theta`, roll `phi` composed as `R = Rz(psi) Ry(theta) Rx(phi)`,
//! with `R_ij = k_i . e_j`.
//!
//! Generalized coordinates are always ordered `(xi, eta, zeta, psi, theta, phi)`.
//! The cyclic block is `{xi, eta, psi}` and the restoring block is
//! `{zeta, theta, phi}`.

use nalgebra::{Matrix3, Rotation3, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index of each generalized coordinate in 6-vectors.
pub const XI: usize = 0;
pub const ETA: usize = 1;
pub const ZETA: usize = 2;
pub const PSI: usize = 3;
pub const THETA: usize = 4;
pub const PHI: usize = 5;

/// Cyclic coordinates `(xi, eta, psi)`.
pub const CYCLIC: [usize; 3] = [XI, ETA, PSI];
/// Non-cyclic (restoring) coordinates `(zeta, theta, phi)`.
pub const RESTORING: [usize; 3] = [ZETA, THETA, PHI];

/// Distance from `+/- pi/2` at which the angular-velocity map is declared singular.
pub const GIMBAL_GUARD: f64 = 1e-6;

/// Position of `G` in the fixed frame (m, `zeta` positive downward) and
/// yaw/pitch/roll angles (rad).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub xi: f64,
    pub eta: f64,
    pub zeta: f64,
    pub psi: f64,
    pub theta: f64,
    pub phi: f64,
}

impl Pose {
    pub fn new(xi: f64, eta: f64, zeta: f64, psi: f64, theta: f64, phi: f64) -> Self {
        Self {
            xi,
            eta,
            zeta,
            psi,
            theta,
            phi,
        }
    }

    /// A pose with only the restoring coordinates set.
    pub fn restoring(zeta: f64, theta: f64, phi: f64) -> Self {
        Self {
            zeta,
            theta,
            phi,
            ..Self::default()
        }
    }

    pub fn from_vector(q: &Vector6<f64>) -> Self {
        Self::new(q[XI], q[ETA], q[ZETA], q[PSI], q[THETA], q[PHI])
    }

    pub fn to_vector(&self) -> Vector6<f64> {
        Vector6::new(self.xi, self.eta, self.zeta, self.psi, self.theta, self.phi)
    }

    pub fn is_finite(&self) -> bool {
        self.to_vector().iter().all(|v| v.is_finite())
    }

    pub fn check_gimbal(&self) -> Result<()> {
        check_gimbal(self.theta)
    }
}

pub(crate) fn check_gimbal(theta: f64) -> Result<()> {
    if !theta.is_finite() || theta.abs() >= std::f64::consts::FRAC_PI_2 - GIMBAL_GUARD {
        return Err(Error::GimbalLock(theta));
    }
    Ok(())
}

/// `R_ij = k_i . e_j`: maps body components to fixed-frame components.
pub fn rotation_matrix(pose: &Pose) -> Rotation3<f64> {
    let (sps, cps) = pose.psi.sin_cos();
    let (sth, cth) = pose.theta.sin_cos();
    let (sph, cph) = pose.phi.sin_cos();
    let m = Matrix3::new(
        cps * cth,
        cps * sth * sph - sps * cph,
        cps * sth * cph + sps * sph,
        sps * cth,
        sps * sth * sph + cps * cph,
        sps * sth * cph - cps * sph,
        -sth,
        cth * sph,
        cth * cph,
    );
    Rotation3::from_matrix_unchecked(m)
}

/// Body components of the downward vertical `k3`, i.e. the third row of `R`.
///
/// Depends on pitch and roll only; yaw never enters the hydrostatics.
pub fn k3_body(pose: &Pose) -> Vector3<f64> {
    k3_from_angles(pose.theta, pose.phi)
}

pub(crate) fn k3_from_angles(theta: f64, phi: f64) -> Vector3<f64> {
    let (sth, cth) = theta.sin_cos();
    let (sph, cph) = phi.sin_cos();
    Vector3::new(-sth, cth * sph, cth * cph)
}

/// Matrix `W` with `omega = W (psi_dot, theta_dot, phi_dot)` in body components.
pub fn omega_map(theta: f64, phi: f64) -> Result<Matrix3<f64>> {
    check_gimbal(theta)?;
    Ok(omega_map_unchecked(theta, phi))
}

pub(crate) fn omega_map_unchecked(theta: f64, phi: f64) -> Matrix3<f64> {
    let (sth, cth) = theta.sin_cos();
    let (sph, cph) = phi.sin_cos();
    Matrix3::new(
        -sth,
        0.0,
        1.0,
        cth * sph,
        cph,
        0.0,
        cth * cph,
        -sph,
        0.0,
    )
}

/// `(dW/dtheta, dW/dphi)`.
pub(crate) fn omega_map_partials(theta: f64, phi: f64) -> (Matrix3<f64>, Matrix3<f64>) {
    let (sth, cth) = theta.sin_cos();
    let (sph, cph) = phi.sin_cos();
    let d_theta = Matrix3::new(
        -cth,
        0.0,
        0.0,
        -sth * sph,
        0.0,
        0.0,
        -sth * cph,
        0.0,
        0.0,
    );
    let d_phi = Matrix3::new(
        0.0,
        0.0,
        0.0,
        cth * cph,
        -sph,
        0.0,
        -cth * sph,
        -cph,
        0.0,
    );
    (d_theta, d_phi)
}

/// First and second partial derivatives of the row `(R31, R32, R33)` with
/// respect to all six coordinates, indexed by the coordinate constants.
/// Only the `theta`/`phi` entries are nonzero.
#[derive(Debug, Clone, PartialEq)]
pub struct R3Partials {
    pub first: [Vector3<f64>; 6],
    pub second: [[Vector3<f64>; 6]; 6],
}

pub fn partials_r3(pose: &Pose) -> R3Partials {
    let (sth, cth) = pose.theta.sin_cos();
    let (sph, cph) = pose.phi.sin_cos();
    let zero = Vector3::zeros();
    let mut first = [zero; 6];
    let mut second = [[zero; 6]; 6];

    first[THETA] = Vector3::new(-cth, -sth * sph, -sth * cph);
    first[PHI] = Vector3::new(0.0, cth * cph, -cth * sph);

    second[THETA][THETA] = Vector3::new(sth, -cth * sph, -cth * cph);
    second[PHI][PHI] = Vector3::new(0.0, -cth * sph, -cth * cph);
    let mixed = Vector3::new(0.0, -sth * cph, sth * sph);
    second[THETA][PHI] = mixed;
    second[PHI][THETA] = mixed;

    R3Partials { first, second }
}
