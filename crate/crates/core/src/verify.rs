//! Numerical checks of the hydrostatic model on arbitrary geometry:
//! closed-loop work, finite-difference gradients, Hessian symmetry and
//! invariance under horizontal translation and yaw.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::clip::clip_by_waterplane;
use crate::error::Result;
use crate::hydrostatics::{force_gradient, forces_from_moments, potential, potential_from_moments, restoring_block, FluidEnvironment};
use crate::kinematics::{Pose, CYCLIC, RESTORING, THETA, ZETA};
use crate::mesh::HullMesh;

// Gauss-Kronrod 7-15 nodes on [-1, 1] (non-negative half) and weights.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn kronrod_panel<F: FnMut(f64) -> Result<f64>>(f: &mut F, a: f64, b: f64) -> Result<(f64, f64)> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let f_center = f(center)?;
    let mut kronrod = WGK[7] * f_center;
    let mut gauss = WG[3] * f_center;
    for j in 0..7 {
        let dx = half * XGK[j];
        let sum = f(center - dx)? + f(center + dx)?;
        kronrod += WGK[j] * sum;
        if j % 2 == 1 {
            gauss += WG[j / 2] * sum;
        }
    }
    Ok((kronrod * half, ((kronrod - gauss) * half).abs()))
}

/// Adaptive Gauss–Kronrod quadrature of `f` over `[a, b]` to absolute
/// tolerance `tol`. Returns the integral and the summed error estimate.
pub fn adaptive_quadrature<F: FnMut(f64) -> Result<f64>>(mut f: F, a: f64, b: f64, tol: f64, max_depth: u32) -> Result<(f64, f64)> {
    let width = b - a;
    let mut stack = vec![(a, b, 0u32)];
    let (mut total, mut error) = (0.0, 0.0);
    while let Some((lo, hi, depth)) = stack.pop() {
        let (value, err) = kronrod_panel(&mut f, lo, hi)?;
        if err <= tol * (hi - lo) / width || depth >= max_depth {
            total += value;
            error += err;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((mid, hi, depth + 1));
            stack.push((lo, mid, depth + 1));
        }
    }
    Ok((total, error))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoopWork {
    /// `oint Q . dq` (J).
    pub work: f64,
    /// Largest `|U_B|` met by the quadrature along the loop (J).
    pub max_potential: f64,
    /// `|work| / max_potential`.
    pub relative: f64,
    pub quadrature_error: f64,
}

/// Work of the buoyancy forces around the closed polygon through
/// `vertices` in `(zeta, theta, phi)`.
pub fn loop_work(mesh: &HullMesh, env: &FluidEnvironment, vertices: &[Vector3<f64>], rel_tol: f64) -> Result<LoopWork> {
    let scale = env.rho_g() * mesh.volume() * mesh.diameter();
    let tol = rel_tol * scale / vertices.len().max(1) as f64;
    let mut work = 0.0;
    let mut quad_error = 0.0;
    let mut max_potential: f64 = 0.0;
    for k in 0..vertices.len() {
        let a = vertices[k];
        let b = vertices[(k + 1) % vertices.len()];
        let delta = b - a;
        let integrand = |s: f64| -> Result<f64> {
            let x = a + s * delta;
            let pose = Pose::restoring(x.x, x.y, x.z);
            let vol = clip_by_waterplane(mesh, &pose)?.volume_and_first_moments();
            let q = forces_from_moments(env, &pose, vol.volume, &vol.first);
            max_potential = max_potential.max(potential_from_moments(env, &pose, vol.volume, &vol.first).abs());
            Ok(RESTORING.iter().zip(delta.iter()).map(|(&i, d)| q[i] * d).sum())
        };
        let (value, err) = adaptive_quadrature(integrand, 0.0, 1.0, tol, 30)?;
        work += value;
        quad_error += err;
    }
    Ok(LoopWork {
        work,
        max_potential,
        relative: if max_potential > 0.0 { work.abs() / max_potential } else { work.abs() },
        quadrature_error: quad_error,
    })
}

/// Natural scale of `Q_k`: `rho g V_total` for heave, times the mesh
/// diameter for the angles.
fn force_scale(mesh: &HullMesh, env: &FluidEnvironment, k: usize) -> f64 {
    let base = env.rho_g() * mesh.volume();
    if k <= ZETA {
        base
    } else {
        base * mesh.diameter()
    }
}

fn coordinate_step(mesh: &HullMesh, k: usize, relative: f64) -> f64 {
    if k <= ZETA {
        relative * mesh.diameter()
    } else {
        relative
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientCheck {
    /// Largest `|dU_B/dq_k (FD) - Q_k|` over all six coordinates, each
    /// divided by the natural scale of `Q_k`.
    pub max_relative_error: f64,
    /// FD derivatives in `(xi, eta, psi)`; zero by invariance.
    pub cyclic_derivatives: Vector3<f64>,
}

/// Central differences of `U_B` against the generalized forces.
pub fn gradient_check(mesh: &HullMesh, env: &FluidEnvironment, pose: &Pose) -> Result<GradientCheck> {
    let q = crate::hydrostatics::generalized_forces(mesh, pose, env)?;
    let mut max_err: f64 = 0.0;
    let mut cyclic = Vector3::zeros();
    for k in 0..6 {
        let h = coordinate_step(mesh, k, 1e-6);
        let mut plus = pose.to_vector();
        let mut minus = plus;
        plus[k] += h;
        minus[k] -= h;
        let fd = (potential(mesh, &Pose::from_vector(&plus), env)? - potential(mesh, &Pose::from_vector(&minus), env)?) / (2.0 * h);
        if let Some(slot) = CYCLIC.iter().position(|&c| c == k) {
            cyclic[slot] = fd;
        }
        max_err = max_err.max((fd - q[k]).abs() / force_scale(mesh, env, k));
    }
    Ok(GradientCheck {
        max_relative_error: max_err,
        cyclic_derivatives: cyclic,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HessianCheck {
    /// `max |G - G^T| / max |G|` over the restoring block.
    pub asymmetry: f64,
    /// Largest FD mismatch, each entry divided by its natural scale.
    pub max_relative_error: f64,
}

/// The analytic force gradient against central differences of `Q`.
pub fn hessian_check(mesh: &HullMesh, env: &FluidEnvironment, pose: &Pose) -> Result<HessianCheck> {
    let g = restoring_block(&force_gradient(mesh, pose, env)?);
    let mut fd = Matrix3::zeros();
    for (col, &r) in RESTORING.iter().enumerate() {
        let h = coordinate_step(mesh, r, 1e-6);
        let mut plus = pose.to_vector();
        let mut minus = plus;
        plus[r] += h;
        minus[r] -= h;
        let qp = crate::hydrostatics::generalized_forces(mesh, &Pose::from_vector(&plus), env)?;
        let qm = crate::hydrostatics::generalized_forces(mesh, &Pose::from_vector(&minus), env)?;
        for (row, &k) in RESTORING.iter().enumerate() {
            fd[(row, col)] = (qp[k] - qm[k]) / (2.0 * h);
        }
    }
    let length = mesh.diameter();
    let mut max_err: f64 = 0.0;
    for row in 0..3 {
        for col in 0..3 {
            let angle_powers = (RESTORING[row] >= THETA) as i32 + (RESTORING[col] >= THETA) as i32;
            let scale = env.rho_g() * length * length * length.powi(angle_powers);
            max_err = max_err.max((fd[(row, col)] - g[(row, col)]).abs() / scale);
        }
    }
    let asym = (g - g.transpose()).amax();
    Ok(HessianCheck {
        asymmetry: if g.amax() > 0.0 { asym / g.amax() } else { asym },
        max_relative_error: max_err,
    })
}

/// Whether volume, waterplane area and body-frame buoyancy center are
/// bit-identical after shifting `(xi, eta, psi)` by `shift`.
pub fn e2_invariant(mesh: &HullMesh, pose: &Pose, shift: &Vector3<f64>) -> Result<bool> {
    let moved = Pose {
        xi: pose.xi + shift.x,
        eta: pose.eta + shift.y,
        psi: pose.psi + shift.z,
        ..*pose
    };
    let a = clip_by_waterplane(mesh, pose)?;
    let b = clip_by_waterplane(mesh, &moved)?;
    let (va, vb) = (a.volume_and_first_moments(), b.volume_and_first_moments());
    Ok(va.volume == vb.volume && va.first == vb.first && a.cap_integrals().area == b.cap_integrals().area)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;

    #[test]
    fn quadrature_of_smooth_and_kinked_functions() {
        let (v, _) = adaptive_quadrature(|x| Ok(x.sin()), 0.0, std::f64::consts::PI, 1e-13, 20).unwrap();
        assert!((v - 2.0).abs() < 1e-13);
        let (v, _) = adaptive_quadrature(|x: f64| Ok((x - 0.3).abs()), 0.0, 1.0, 1e-12, 30).unwrap();
        assert!((v - (0.045 + 0.245)).abs() < 1e-11);
    }

    #[test]
    fn cube_loop_work_vanishes() {
        let cube = shapes::cuboid(1.0, 1.0, 1.0);
        let env = FluidEnvironment::new(1000.0, 9.81).unwrap();
        let vertices = [
            Vector3::new(0.0, 0.0, 0.0),
            Vector3::new(0.3, 0.2, 0.0),
            Vector3::new(0.1, 0.4, 0.5),
            Vector3::new(-0.2, 0.0, 0.3),
        ];
        let r = loop_work(&cube, &env, &vertices, 1e-10).unwrap();
        assert!(r.relative < 1e-8, "{r:?}");
    }

    #[test]
    fn cube_derivative_checks() {
        let cube = shapes::cuboid(1.0, 1.0, 1.0);
        let env = FluidEnvironment::new(1000.0, 9.81).unwrap();
        let pose = Pose::new(0.4, -0.3, 0.1, 0.5, 0.2, 0.35);
        let g = gradient_check(&cube, &env, &pose).unwrap();
        assert!(g.max_relative_error < 1e-6);
        assert_eq!(g.cyclic_derivatives, Vector3::zeros());
        let h = hessian_check(&cube, &env, &pose).unwrap();
        assert!(h.asymmetry < 1e-12 && h.max_relative_error < 1e-6, "{h:?}");
        assert!(e2_invariant(&cube, &pose, &Vector3::new(3.0, -1.0, 2.0)).unwrap());
    }
}
