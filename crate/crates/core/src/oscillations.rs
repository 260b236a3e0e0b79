//! Small oscillations about an equilibrium on the zero-momentum slice:
//! `m_red eta_ddot + c eta = 0` with `c = -H`.

use nalgebra::{Cholesky, Matrix2, Matrix3, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};

use crate::dynamics::{kinetic_metric, reduced_mass_matrix, BodyProperties};
use crate::error::{Error, Result};
use crate::hydrostatics::{hessian_at_equilibrium, FluidEnvironment};
use crate::kinematics::Pose;
use crate::mesh::HullMesh;

/// Relative asymmetry tolerated in `c` and `m_red`.
pub const SYMMETRY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModalResult {
    /// Roots of `det(c - lambda m_red) = 0`, ascending (1/s^2).
    pub lambdas: Vector3<f64>,
    /// `sqrt(lambda)` (rad/s); `None` for `lambda <= 0`.
    pub angular_frequencies: [Option<f64>; 3],
    /// `sqrt(lambda) / 2 pi` (Hz); `None` for `lambda <= 0`.
    pub frequencies: [Option<f64>; 3],
    /// Unit mode shapes in `(zeta, theta, phi)`, one per column, largest
    /// component positive.
    pub mode_shapes: Matrix3<f64>,
    pub c: Matrix3<f64>,
    pub m_red: Matrix3<f64>,
    /// Roll separated from `(zeta, theta)` by the block structure.
    pub roll_decoupled: bool,
}

impl ModalResult {
    pub fn is_stable(&self) -> bool {
        self.lambdas.iter().all(|&l| l > 0.0)
    }
}

fn check_symmetric(m: &Matrix3<f64>) -> Result<()> {
    let asym = (m - m.transpose()).amax();
    if !m.iter().all(|v| v.is_finite()) || asym > SYMMETRY_TOLERANCE * m.amax() {
        return Err(Error::NonSymmetricInput(asym));
    }
    Ok(())
}

/// `det(c - lambda m)`.
pub fn characteristic_polynomial(c: &Matrix3<f64>, m: &Matrix3<f64>, lambda: f64) -> f64 {
    (c - lambda * m).determinant()
}

/// Solves the symmetric-definite problem `c u = lambda m u` from the Hessian `h = -c`.
pub fn normal_modes(h: &Matrix3<f64>, m_red: &Matrix3<f64>) -> Result<ModalResult> {
    let c = -h;
    check_symmetric(&c)?;
    check_symmetric(m_red)?;
    let c = 0.5 * (c + c.transpose());
    let m = 0.5 * (m_red + m_red.transpose());
    if Cholesky::new(m).is_none() {
        return Err(Error::IndefiniteMass);
    }

    let c_scale = c.amax().max(f64::MIN_POSITIVE);
    let m_scale = m.amax();
    let negligible = |v: f64, scale: f64| v.abs() <= 1e-14 * scale;
    let decoupled = [(0, 2), (1, 2)]
        .iter()
        .all(|&(i, j)| negligible(c[(i, j)], c_scale) && negligible(m[(i, j)], m_scale));

    let mut pairs: Vec<(f64, Vector3<f64>)> = Vec::with_capacity(3);
    if decoupled {
        let c2 = c.fixed_view::<2, 2>(0, 0).into_owned();
        let m2 = m.fixed_view::<2, 2>(0, 0).into_owned();
        let (values, vectors) = generalized_2x2(&c2, &m2)?;
        for k in 0..2 {
            pairs.push((values[k], Vector3::new(vectors[(0, k)], vectors[(1, k)], 0.0)));
        }
        pairs.push((c[(2, 2)] / m[(2, 2)], Vector3::new(0.0, 0.0, 1.0)));
    } else {
        let chol = Cholesky::new(m).ok_or(Error::IndefiniteMass)?;
        let l = chol.l();
        let l_inv = l.try_inverse().ok_or(Error::IndefiniteMass)?;
        let a = l_inv * c * l_inv.transpose();
        let eig = SymmetricEigen::new(0.5 * (a + a.transpose()));
        let shapes = l_inv.transpose() * eig.eigenvectors;
        for k in 0..3 {
            pairs.push((eig.eigenvalues[k], shapes.column(k).into_owned()));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut lambdas = Vector3::zeros();
    let mut shapes = Matrix3::zeros();
    for (k, (lambda, shape)) in pairs.into_iter().enumerate() {
        lambdas[k] = lambda;
        shapes.set_column(k, &normalize_shape(shape));
    }
    let omega = |l: f64| (l > 0.0).then(|| l.sqrt());
    Ok(ModalResult {
        lambdas,
        angular_frequencies: [omega(lambdas[0]), omega(lambdas[1]), omega(lambdas[2])],
        frequencies: [0, 1, 2].map(|k| omega(lambdas[k]).map(|w| w / (2.0 * std::f64::consts::PI))),
        mode_shapes: shapes,
        c,
        m_red: m,
        roll_decoupled: decoupled,
    })
}

fn generalized_2x2(c: &Matrix2<f64>, m: &Matrix2<f64>) -> Result<(nalgebra::Vector2<f64>, Matrix2<f64>)> {
    let chol = Cholesky::new(*m).ok_or(Error::IndefiniteMass)?;
    let l_inv = chol.l().try_inverse().ok_or(Error::IndefiniteMass)?;
    let a = l_inv * c * l_inv.transpose();
    let eig = SymmetricEigen::new(0.5 * (a + a.transpose()));
    Ok((eig.eigenvalues, l_inv.transpose() * eig.eigenvectors))
}

fn normalize_shape(v: Vector3<f64>) -> Vector3<f64> {
    let v = v / v.norm();
    let lead = v.iter().copied().fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
    if lead < 0.0 {
        -v
    } else {
        v
    }
}

/// Linearized modes at an equilibrium: Hessian from the closed form and the
/// reduced mass matrix from the kinetic metric at `q_star`.
pub fn equilibrium_modes(
    mesh: &HullMesh,
    body: &BodyProperties,
    env: &FluidEnvironment,
    q_star: &Pose,
) -> Result<ModalResult> {
    let h = hessian_at_equilibrium(mesh, q_star, body.mass, env)?;
    let metric = kinetic_metric(body, q_star.theta, q_star.phi)?;
    normal_modes(&h, &reduced_mass_matrix(&metric))
}

/// Superposition of harmonic modes matching an initial deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearPrediction {
    pub omegas: Vector3<f64>,
    pub mode_shapes: Matrix3<f64>,
    /// Modal amplitudes of the initial deviation.
    pub cos_coefficients: Vector3<f64>,
    /// Modal amplitudes of the initial rate divided by `omega`.
    pub sin_coefficients: Vector3<f64>,
}

impl LinearPrediction {
    /// Deviation from equilibrium and its rate at time `t`.
    pub fn evaluate(&self, t: f64) -> (Vector3<f64>, Vector3<f64>) {
        let mut a = Vector3::zeros();
        let mut a_dot = Vector3::zeros();
        for k in 0..3 {
            let w = self.omegas[k];
            let (s, c) = (w * t).sin_cos();
            a[k] = self.cos_coefficients[k] * c + self.sin_coefficients[k] * s;
            a_dot[k] = w * (-self.cos_coefficients[k] * s + self.sin_coefficients[k] * c);
        }
        (self.mode_shapes * a, self.mode_shapes * a_dot)
    }
}

/// Closed-form small-oscillation solution from `(eta0, eta_dot0)` in `(zeta, theta, phi)`.
pub fn linearized_prediction(modal: &ModalResult, eta0: &Vector3<f64>, eta_dot0: &Vector3<f64>) -> Result<LinearPrediction> {
    if let Some(index) = modal.lambdas.iter().position(|&l| l <= 0.0) {
        return Err(Error::UnstableMode {
            index,
            lambda: modal.lambdas[index],
        });
    }
    let omegas = modal.lambdas.map(f64::sqrt);
    let inverse = modal.mode_shapes.try_inverse().ok_or(Error::IndefiniteMass)?;
    let a0 = inverse * eta0;
    let b0 = (inverse * eta_dot0).component_div(&omegas);
    Ok(LinearPrediction {
        omegas,
        mode_shapes: modal.mode_shapes,
        cos_coefficients: a0,
        sin_coefficients: b0,
    })
}
