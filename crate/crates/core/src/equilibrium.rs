//! Equilibrium poses: weight balanced by buoyancy, `B` vertically below or
//! above `G`.

use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::clip::clip_by_waterplane;
use crate::error::{Error, Result};
use crate::hydrostatics::{
    equilibrium_residual, force_gradient_from_solid, forces_from_moments, residual_norm, restoring_block,
    FluidEnvironment, LEVEL_TOLERANCE,
};
use crate::kinematics::Pose;
use crate::mesh::HullMesh;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EquilibriumOptions {
    /// Convergence threshold on the scaled residual (force over `m g`,
    /// moments over `m g` times the mesh diameter).
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Largest heave step as a fraction of the mesh height.
    pub max_heave_step: f64,
    /// Largest angle step (rad).
    pub max_angle_step: f64,
}

impl Default for EquilibriumOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iterations: 200,
            max_heave_step: 0.25,
            max_angle_step: 0.2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumResult {
    /// Equilibrium pose with `xi = eta = psi = 0`.
    pub q_star: Pose,
    /// `(m g + Q_zeta, Q_theta, Q_phi)` at `q_star`.
    pub residual: Vector3<f64>,
    /// Scaled residual compared against the tolerance.
    pub residual_norm: f64,
    pub iterations: usize,
    /// Heave bisections taken where the Jacobian was singular.
    pub bisection_steps: usize,
    /// Signed depth of `G` below the free surface, `zeta*`.
    pub d: f64,
    pub converged: bool,
    /// Waterplane parallel to `x3 = 0` (both angles negligible).
    pub level: bool,
}

/// Drops the cyclic coordinates, keeping `(zeta, theta, phi)`.
pub fn canonicalize(pose: &Pose) -> Pose {
    Pose::restoring(pose.zeta, pose.theta, pose.phi)
}

/// Damped Newton solve of `(m g + Q_zeta, Q_theta, Q_phi) = 0` from
/// `initial = (zeta0, theta0, phi0)`.
///
/// For a body flagged symmetric and started at `phi0 = 0` exactly, roll is
/// held at zero and only `(zeta, theta)` are iterated.
pub fn find_equilibrium(
    mesh: &HullMesh,
    mass: f64,
    env: &FluidEnvironment,
    initial: Vector3<f64>,
    options: &EquilibriumOptions,
) -> Result<EquilibriumResult> {
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(Error::InvalidParameter(format!("mass must be positive (got {mass})")));
    }
    if !initial.iter().all(|x| x.is_finite()) {
        return Err(Error::InvalidParameter("initial guess must be finite".into()));
    }
    let needed = mass / env.density;
    if needed >= mesh.volume() {
        return Err(Error::WontFloat {
            mass,
            needed,
            available: mesh.volume(),
        });
    }
    let solver = Solver {
        mesh,
        mass,
        env,
        options,
        length: mesh.diameter(),
        hold_roll: mesh.is_symmetric() && initial.z == 0.0,
    };
    solver.run(initial)
}

struct Solver<'a> {
    mesh: &'a HullMesh,
    mass: f64,
    env: &'a FluidEnvironment,
    options: &'a EquilibriumOptions,
    length: f64,
    hold_roll: bool,
}

struct Evaluation {
    residual: Vector3<f64>,
    norm: f64,
    jacobian: Matrix3<f64>,
    waterplane_area: f64,
}

impl Solver<'_> {
    fn pose(x: &Vector3<f64>) -> Pose {
        Pose::restoring(x.x, x.y, x.z)
    }

    fn evaluate(&self, x: &Vector3<f64>) -> Result<Evaluation> {
        let pose = Self::pose(x);
        let solid = clip_by_waterplane(self.mesh, &pose)?;
        let vol = solid.volume_and_first_moments();
        let forces = forces_from_moments(self.env, &pose, vol.volume, &vol.first);
        let mut residual = equilibrium_residual(&forces, self.mass, self.env);
        if self.hold_roll {
            residual.z = 0.0;
        }
        Ok(Evaluation {
            norm: residual_norm(&residual, self.mass, self.env, self.length),
            residual,
            jacobian: restoring_block(&force_gradient_from_solid(&solid, &pose, self.env)),
            waterplane_area: solid.cap_integrals().area,
        })
    }

    fn newton_step(&self, eval: &Evaluation) -> Option<Vector3<f64>> {
        let j = &eval.jacobian;
        let r = &eval.residual;
        let step = if self.hold_roll {
            let j2 = Matrix2::new(j[(0, 0)], j[(0, 1)], j[(1, 0)], j[(1, 1)]);
            let s = j2.lu().solve(&-Vector2::new(r.x, r.y))?;
            Vector3::new(s.x, s.y, 0.0)
        } else {
            j.lu().solve(&-r)?
        };
        step.iter().all(|v| v.is_finite()).then_some(step)
    }

    fn clamp(&self, step: Vector3<f64>) -> Vector3<f64> {
        let heave_limit = self.options.max_heave_step * self.mesh.height();
        let mut scale: f64 = 1.0;
        if step.x.abs() > heave_limit {
            scale = scale.min(heave_limit / step.x.abs());
        }
        for angle in [step.y, step.z] {
            if angle.abs() > self.options.max_angle_step {
                scale = scale.min(self.options.max_angle_step / angle.abs());
            }
        }
        step * scale
    }

    /// Bisection on heave with the angles frozen; `r_zeta` decreases with `zeta`.
    fn heave_bisection(&self, x: &Vector3<f64>) -> Result<Vector3<f64>> {
        let normal = crate::kinematics::k3_body(&Self::pose(x));
        let (lo_depth, hi_depth) = self
            .mesh
            .vertices()
            .iter()
            .map(|v| normal.dot(v))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| (lo.min(d), hi.max(d)));
        // Fully emerged at zeta = -hi_depth, fully submerged at zeta = -lo_depth.
        let (mut lo, mut hi) = (-hi_depth, -lo_depth);
        let target = self.mass / self.env.density;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let volume = clip_by_waterplane(self.mesh, &Pose::restoring(mid, x.y, x.z))?
                .volume_and_first_moments()
                .volume;
            if volume < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(Vector3::new(0.5 * (lo + hi), x.y, x.z))
    }

    #[allow(clippy::explicit_counter_loop)]
    fn run(&self, initial: Vector3<f64>) -> Result<EquilibriumResult> {
        let mut x = initial;
        let mut bisections = 0;
        let mut eval = self.evaluate(&x)?;
        for iteration in 0..=self.options.max_iterations {
            if eval.norm <= self.options.tolerance {
                return Ok(self.result(x, &eval, iteration, bisections));
            }
            if iteration == self.options.max_iterations {
                break;
            }
            let newton = if eval.waterplane_area > 0.0 {
                self.newton_step(&eval)
            } else {
                None
            };
            let Some(step) = newton else {
                x = self.heave_bisection(&x)?;
                bisections += 1;
                eval = self.evaluate(&x)?;
                continue;
            };
            let step = self.clamp(step);
            let mut alpha = 1.0;
            let (mut next, mut next_eval);
            loop {
                next = x + alpha * step;
                next_eval = self.evaluate(&next)?;
                if next_eval.norm < eval.norm || alpha < 1e-3 {
                    break;
                }
                alpha *= 0.5;
            }
            if next.y.abs() >= 0.5 * std::f64::consts::PI - 1e-3 {
                break;
            }
            x = next;
            eval = next_eval;
        }
        Err(Error::Diverged {
            iterations: self.options.max_iterations,
            residual: eval.norm,
        })
    }

    fn result(&self, x: Vector3<f64>, eval: &Evaluation, iterations: usize, bisections: usize) -> EquilibriumResult {
        EquilibriumResult {
            q_star: Self::pose(&x),
            residual: eval.residual,
            residual_norm: eval.norm,
            iterations,
            bisection_steps: bisections,
            d: x.x,
            converged: true,
            level: x.y.abs() <= LEVEL_TOLERANCE && x.z.abs() <= LEVEL_TOLERANCE,
        }
    }
}
