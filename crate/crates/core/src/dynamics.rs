//! Lagrangian dynamics of the floating body: kinetic metric, conserved
//! momenta, the Routhian, and integration of the full six-coordinate
//! system and of the reduced `(zeta, theta, phi)` system at fixed cyclic
//! momenta.
//!
//! The Lagrangian is `L = 1/2 q_dot^T a(theta, phi) q_dot + U(q)` with
//! `U = m g zeta + U_B`. The metric depends on `(theta, phi)` only, and `U`
//! on `(zeta, theta, phi)` only, so `(xi, eta, psi)` are cyclic.

use std::fmt;
use std::io::Write;

use nalgebra::{Cholesky, Matrix3, Matrix6, SVector, SymmetricEigen, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use crate::clip::clip_by_waterplane;
use crate::error::{Error, Result};
use crate::hydrostatics::{forces_from_moments, potential_from_moments, FluidEnvironment};
use crate::integrator::{integrate, IntegrationStats, IntegratorOptions};
use crate::kinematics::{self, check_gimbal, omega_map_partials, omega_map_unchecked, Pose, CYCLIC, PHI, RESTORING, THETA, ZETA};
use crate::mesh::HullMesh;

/// Mass and inertia about `G` in body axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BodyProperties {
    pub mass: f64,
    pub inertia: Matrix3<f64>,
}

impl BodyProperties {
    /// Validates `mass > 0` and that `inertia` is a physical inertia tensor.
    pub fn new(mass: f64, inertia: Matrix3<f64>) -> Result<Self> {
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::InvalidParameter(format!("mass must be positive (got {mass})")));
        }
        let scale = inertia.amax();
        let asym = (inertia - inertia.transpose()).amax();
        if !scale.is_finite() || asym > 1e-12 * scale {
            return Err(Error::NonSymmetricInput(asym));
        }
        let sym = 0.5 * (inertia + inertia.transpose());
        let principal = SymmetricEigen::new(sym).eigenvalues;
        if principal.iter().any(|&l| l <= 0.0) {
            return Err(Error::IndefiniteMass);
        }
        let tol = 1e-9 * principal.max();
        for k in 0..3 {
            let (a, b, c) = (principal[k], principal[(k + 1) % 3], principal[(k + 2) % 3]);
            if a + b < c - tol {
                return Err(Error::InvalidParameter(format!(
                    "principal moments {a}, {b}, {c} violate the triangle inequality"
                )));
            }
        }
        Ok(Self { mass, inertia: sym })
    }

    /// Uniform-density body: returns the properties and the volume centroid
    /// (where `G` must be placed).
    pub fn uniform(mesh: &HullMesh, density: f64) -> Result<(Self, Vector3<f64>)> {
        if !(density > 0.0 && density.is_finite()) {
            return Err(Error::InvalidParameter(format!("density must be positive (got {density})")));
        }
        let props = mesh.mass_properties(density);
        Ok((Self::new(props.mass, props.inertia)?, props.centroid))
    }
}

/// The 6x6 kinetic metric and its partial derivatives in `theta` and `phi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KineticMetric {
    pub a: Matrix6<f64>,
    pub d_theta: Matrix6<f64>,
    pub d_phi: Matrix6<f64>,
}

/// `a = blockdiag(m I, W^T I W)` in coordinate order.
pub fn kinetic_metric(body: &BodyProperties, theta: f64, phi: f64) -> Result<KineticMetric> {
    check_gimbal(theta)?;
    let w = omega_map_unchecked(theta, phi);
    let (w_th, w_ph) = omega_map_partials(theta, phi);
    let i = &body.inertia;
    let rot = w.transpose() * i * w;
    let rot_th = w_th.transpose() * i * w + w.transpose() * i * w_th;
    let rot_ph = w_ph.transpose() * i * w + w.transpose() * i * w_ph;

    let embed = |block: &Matrix3<f64>, translational: f64| {
        let mut m = Matrix6::zeros();
        for k in 0..3 {
            m[(k, k)] = translational;
        }
        m.fixed_view_mut::<3, 3>(3, 3).copy_from(block);
        m
    };
    Ok(KineticMetric {
        a: embed(&rot, body.mass),
        d_theta: embed(&rot_th, 0.0),
        d_phi: embed(&rot_ph, 0.0),
    })
}

impl KineticMetric {
    fn pick(m: &Matrix6<f64>, rows: [usize; 3], cols: [usize; 3]) -> Matrix3<f64> {
        Matrix3::from_fn(|i, j| m[(rows[i], cols[j])])
    }

    /// `a_{alpha beta}` over `(zeta, theta, phi)`.
    pub fn restoring_block(&self) -> Matrix3<f64> {
        Self::pick(&self.a, RESTORING, RESTORING)
    }

    /// `a_{alpha A}`: rows `(zeta, theta, phi)`, columns `(xi, eta, psi)`.
    pub fn coupling_block(&self) -> Matrix3<f64> {
        Self::pick(&self.a, RESTORING, CYCLIC)
    }

    /// `a_{AB}` over `(xi, eta, psi)`.
    pub fn cyclic_block(&self) -> Matrix3<f64> {
        Self::pick(&self.a, CYCLIC, CYCLIC)
    }

    fn partial(&self, gamma: usize) -> &Matrix6<f64> {
        if gamma == THETA {
            &self.d_theta
        } else {
            &self.d_phi
        }
    }

    fn cyclic_inverse(&self) -> Matrix3<f64> {
        Cholesky::new(self.cyclic_block())
            .expect("cyclic block of a valid metric is positive definite")
            .inverse()
    }
}

/// Configuration and coordinate rates.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FullState {
    pub q: Pose,
    pub qdot: Vector6<f64>,
}

/// Reduced state at fixed cyclic momenta. `cyclic` holds the initial
/// `(xi, eta, psi)`, from which the cyclic coordinates are reconstructed.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ReducedState {
    pub q_alpha: Vector3<f64>,
    pub qdot_alpha: Vector3<f64>,
    pub p_a: Vector3<f64>,
    #[serde(default)]
    pub cyclic: Vector3<f64>,
}

impl ReducedState {
    /// The reduced state carrying the same restoring variables and cyclic momenta as `state`.
    pub fn from_full(body: &BodyProperties, state: &FullState) -> Result<Self> {
        Ok(Self {
            q_alpha: Vector3::new(state.q.zeta, state.q.theta, state.q.phi),
            qdot_alpha: Vector3::new(state.qdot[ZETA], state.qdot[THETA], state.qdot[PHI]),
            p_a: conserved_momenta(body, state)?,
            cyclic: Vector3::new(state.q.xi, state.q.eta, state.q.psi),
        })
    }

    /// Full state with the cyclic rates recovered from the momenta.
    pub fn to_full(&self, body: &BodyProperties) -> Result<FullState> {
        let metric = kinetic_metric(body, self.q_alpha.y, self.q_alpha.z)?;
        let u = cyclic_rates(&metric, &self.qdot_alpha, &self.p_a);
        Ok(FullState {
            q: assemble_pose(&self.q_alpha, &self.cyclic),
            qdot: assemble(&self.qdot_alpha, &u),
        })
    }
}

fn assemble(alpha: &Vector3<f64>, cyclic: &Vector3<f64>) -> Vector6<f64> {
    let mut v = Vector6::zeros();
    for k in 0..3 {
        v[RESTORING[k]] = alpha[k];
        v[CYCLIC[k]] = cyclic[k];
    }
    v
}

fn assemble_pose(alpha: &Vector3<f64>, cyclic: &Vector3<f64>) -> Pose {
    Pose::from_vector(&assemble(alpha, cyclic))
}

/// `q_dot^A = a^AB (p_B - a_{B alpha} q_dot^alpha)`.
pub fn cyclic_rates(metric: &KineticMetric, qdot_alpha: &Vector3<f64>, p_a: &Vector3<f64>) -> Vector3<f64> {
    metric.cyclic_inverse() * (p_a - metric.coupling_block().transpose() * qdot_alpha)
}

/// `1/2 q_dot^T a q_dot`.
pub fn kinetic_energy(body: &BodyProperties, state: &FullState) -> Result<f64> {
    let metric = kinetic_metric(body, state.q.theta, state.q.phi)?;
    Ok(0.5 * state.qdot.dot(&(metric.a * state.qdot)))
}

/// `U = m g zeta + U_B`.
pub fn potential_energy(mesh: &HullMesh, body: &BodyProperties, env: &FluidEnvironment, q: &Pose) -> Result<f64> {
    let vol = clip_by_waterplane(mesh, q)?.volume_and_first_moments();
    Ok(body.mass * env.gravity * q.zeta + potential_from_moments(env, q, vol.volume, &vol.first))
}

/// `L = T + U`.
pub fn lagrangian(mesh: &HullMesh, body: &BodyProperties, env: &FluidEnvironment, state: &FullState) -> Result<f64> {
    Ok(kinetic_energy(body, state)? + potential_energy(mesh, body, env, &state.q)?)
}

/// `E = T - U`, conserved along solutions.
pub fn total_energy(mesh: &HullMesh, body: &BodyProperties, env: &FluidEnvironment, state: &FullState) -> Result<f64> {
    Ok(kinetic_energy(body, state)? - potential_energy(mesh, body, env, &state.q)?)
}

/// `(p_xi, p_eta, p_psi) = (a q_dot)` at the cyclic indices.
pub fn conserved_momenta(body: &BodyProperties, state: &FullState) -> Result<Vector3<f64>> {
    let metric = kinetic_metric(body, state.q.theta, state.q.phi)?;
    let p = metric.a * state.qdot;
    Ok(Vector3::new(p[CYCLIC[0]], p[CYCLIC[1]], p[CYCLIC[2]]))
}

/// `R = 1/2 a_ab v^a v^b - 1/2 a^AB (p_A - a_Aa v^a)(p_B - a_Bb v^b) + U`.
pub fn routhian(metric: &KineticMetric, potential: f64, qdot_alpha: &Vector3<f64>, p_a: &Vector3<f64>) -> f64 {
    let w = p_a - metric.coupling_block().transpose() * qdot_alpha;
    0.5 * qdot_alpha.dot(&(metric.restoring_block() * qdot_alpha)) - 0.5 * w.dot(&(metric.cyclic_inverse() * w)) + potential
}

/// `m_ab = a_ab - a^AB a_Aa a_Bb`, the Schur complement of the cyclic block.
pub fn reduced_mass_matrix(metric: &KineticMetric) -> Matrix3<f64> {
    let c = metric.coupling_block();
    let m = metric.restoring_block() - c * metric.cyclic_inverse() * c.transpose();
    0.5 * (m + m.transpose())
}

/// Hydrostatic and gravity part of the right-hand side: `dU/dq`.
fn potential_gradient(mesh: &HullMesh, body: &BodyProperties, env: &FluidEnvironment, q: &Pose) -> Result<(Vector6<f64>, f64)> {
    let vol = clip_by_waterplane(mesh, q)?.volume_and_first_moments();
    let mut grad = forces_from_moments(env, q, vol.volume, &vol.first);
    grad[ZETA] += body.mass * env.gravity;
    let u = body.mass * env.gravity * q.zeta + potential_from_moments(env, q, vol.volume, &vol.first);
    Ok((grad, u))
}

/// `dL/dq_gamma` for `gamma` in `{theta, phi}`: `1/2 q_dot^T a_gamma q_dot + dU/dq_gamma`.
fn lagrangian_gradient(metric: &KineticMetric, qdot: &Vector6<f64>, grad_u: &Vector6<f64>) -> Vector6<f64> {
    let mut g = *grad_u;
    g[THETA] += 0.5 * qdot.dot(&(metric.d_theta * qdot));
    g[PHI] += 0.5 * qdot.dot(&(metric.d_phi * qdot));
    g
}

/// How the full equations are put in first-order form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FullFormulation {
    /// State `(q, p)` with `p = a q_dot`; `p_dot = dL/dq`. The cyclic momenta
    /// have identically zero rates.
    #[default]
    Momentum,
    /// State `(q, q_dot)` with `a q_ddot = dL/dq - sum_gamma a_gamma q_dot q_dot_gamma`.
    Acceleration,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulationOptions {
    pub integrator: IntegratorOptions,
    pub formulation: FullFormulation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub q: Pose,
    pub qdot: Vector6<f64>,
    /// `T - U`.
    pub energy: f64,
    /// `(p_xi, p_eta, p_psi)`.
    pub momenta: Vector3<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
    pub stats: IntegrationStats,
}

/// Drift of the conserved quantities relative to the first sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConservationSummary {
    pub max_energy_drift: f64,
    pub max_momentum_drift: Vector3<f64>,
}

pub const CSV_HEADER: &str =
    "t,xi,eta,zeta,psi,theta,phi,xi_dot,eta_dot,zeta_dot,psi_dot,theta_dot,phi_dot,energy,p_xi,p_eta,p_psi";

impl Trajectory {
    pub fn conservation(&self) -> Option<ConservationSummary> {
        let first = self.samples.first()?;
        let mut summary = ConservationSummary {
            max_energy_drift: 0.0,
            max_momentum_drift: Vector3::zeros(),
        };
        for s in &self.samples {
            summary.max_energy_drift = summary.max_energy_drift.max((s.energy - first.energy).abs());
            summary.max_momentum_drift = summary.max_momentum_drift.sup(&(s.momenta - first.momenta).abs());
        }
        Some(summary)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for s in &self.samples {
            let q = s.q.to_vector();
            let fields: Vec<String> = std::iter::once(s.t)
                .chain(q.iter().copied())
                .chain(s.qdot.iter().copied())
                .chain(std::iter::once(s.energy))
                .chain(s.momenta.iter().copied())
                .map(|x| x.to_string())
                .collect();
            writeln!(out, "{}", fields.join(","))?;
        }
        Ok(())
    }
}

/// An integration stopped early; `partial` holds the samples produced so far.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegrationFailure {
    pub error: Error,
    pub partial: Trajectory,
}

impl fmt::Display for IntegrationFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = self.partial.samples.last().map_or(f64::NAN, |s| s.t);
        write!(f, "{} (trajectory stopped after t = {t})", self.error)
    }
}

impl std::error::Error for IntegrationFailure {}

impl From<IntegrationFailure> for Error {
    fn from(failure: IntegrationFailure) -> Self {
        failure.error
    }
}

fn check_run(t_end: f64, dt: f64) -> Result<()> {
    if !(dt > 0.0 && dt.is_finite() && t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "need dt > 0 and t_end >= 0 (got dt = {dt}, t_end = {t_end})"
        )));
    }
    Ok(())
}

fn split12(y: &SVector<f64, 12>) -> (Vector6<f64>, Vector6<f64>) {
    (y.fixed_rows::<6>(0).into_owned(), y.fixed_rows::<6>(6).into_owned())
}

fn join12(a: &Vector6<f64>, b: &Vector6<f64>) -> SVector<f64, 12> {
    let mut y = SVector::<f64, 12>::zeros();
    y.fixed_rows_mut::<6>(0).copy_from(a);
    y.fixed_rows_mut::<6>(6).copy_from(b);
    y
}

fn solve_metric(metric: &KineticMetric, rhs: &Vector6<f64>) -> Result<Vector6<f64>> {
    Cholesky::new(metric.a).map(|c| c.solve(rhs)).ok_or(Error::IndefiniteMass)
}

fn full_sample(
    mesh: &HullMesh,
    body: &BodyProperties,
    env: &FluidEnvironment,
    t: f64,
    q: &Vector6<f64>,
    qdot: &Vector6<f64>,
) -> Result<TrajectorySample> {
    let pose = Pose::from_vector(q);
    let state = FullState { q: pose, qdot: *qdot };
    Ok(TrajectorySample {
        t,
        q: pose,
        qdot: *qdot,
        energy: total_energy(mesh, body, env, &state)?,
        momenta: conserved_momenta(body, &state)?,
    })
}

/// Integrates the full Lagrange equations, sampling every `dt` up to `t_end`.
pub fn integrate_full(
    mesh: &HullMesh,
    body: &BodyProperties,
    env: &FluidEnvironment,
    initial: &FullState,
    t_end: f64,
    dt: f64,
    options: &SimulationOptions,
) -> std::result::Result<Trajectory, IntegrationFailure> {
    let mut trajectory = Trajectory::default();
    let outcome = run_full(mesh, body, env, initial, t_end, dt, options, &mut trajectory);
    match outcome {
        Ok(stats) => {
            trajectory.stats = stats;
            Ok(trajectory)
        }
        Err(error) => Err(IntegrationFailure {
            error,
            partial: trajectory,
        }),
    }
}

#[allow(clippy::too_many_arguments)]
fn run_full(
    mesh: &HullMesh,
    body: &BodyProperties,
    env: &FluidEnvironment,
    initial: &FullState,
    t_end: f64,
    dt: f64,
    options: &SimulationOptions,
    trajectory: &mut Trajectory,
) -> Result<IntegrationStats> {
    check_run(t_end, dt)?;
    if !initial.q.is_finite() || !initial.qdot.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidParameter("initial state must be finite".into()));
    }
    let q0 = initial.q.to_vector();
    match options.formulation {
        FullFormulation::Momentum => {
            let metric0 = kinetic_metric(body, initial.q.theta, initial.q.phi)?;
            let rhs = |_t: f64, y: &SVector<f64, 12>| -> Result<SVector<f64, 12>> {
                let (q, p) = split12(y);
                let pose = Pose::from_vector(&q);
                let metric = kinetic_metric(body, pose.theta, pose.phi)?;
                let qdot = solve_metric(&metric, &p)?;
                let (grad_u, _) = potential_gradient(mesh, body, env, &pose)?;
                let mut pdot = lagrangian_gradient(&metric, &qdot, &grad_u);
                for k in CYCLIC {
                    pdot[k] = 0.0;
                }
                Ok(join12(&qdot, &pdot))
            };
            let observe = |t: f64, y: &SVector<f64, 12>| -> Result<()> {
                let (q, p) = split12(y);
                let metric = kinetic_metric(body, q[THETA], q[PHI])?;
                let qdot = solve_metric(&metric, &p)?;
                let mut sample = full_sample(mesh, body, env, t, &q, &qdot)?;
                // Report the integrated momenta rather than a q_dot recomputed from them.
                sample.momenta = Vector3::new(p[CYCLIC[0]], p[CYCLIC[1]], p[CYCLIC[2]]);
                trajectory.samples.push(sample);
                Ok(())
            };
            integrate(rhs, 0.0, join12(&q0, &(metric0.a * initial.qdot)), t_end, dt, &options.integrator, observe)
        }
        FullFormulation::Acceleration => {
            let rhs = |_t: f64, y: &SVector<f64, 12>| -> Result<SVector<f64, 12>> {
                let (q, qdot) = split12(y);
                let pose = Pose::from_vector(&q);
                let metric = kinetic_metric(body, pose.theta, pose.phi)?;
                let (grad_u, _) = potential_gradient(mesh, body, env, &pose)?;
                let mut f = lagrangian_gradient(&metric, &qdot, &grad_u);
                f -= metric.d_theta * qdot * qdot[THETA] + metric.d_phi * qdot * qdot[PHI];
                Ok(join12(&qdot, &solve_metric(&metric, &f)?))
            };
            let observe = |t: f64, y: &SVector<f64, 12>| -> Result<()> {
                let (q, qdot) = split12(y);
                trajectory.samples.push(full_sample(mesh, body, env, t, &q, &qdot)?);
                Ok(())
            };
            integrate(rhs, 0.0, join12(&q0, &initial.qdot), t_end, dt, &options.integrator, observe)
        }
    }
}

/// Reduced-system quantities at one `(q_alpha, v)` for fixed `p_A`.
struct ReducedTerms {
    mass: Matrix3<f64>,
    cyclic_rates: Vector3<f64>,
    cyclic_inverse: Matrix3<f64>,
    acceleration: Vector3<f64>,
}

fn reduced_terms(
    metric: &KineticMetric,
    grad_u: &Vector6<f64>,
    v: &Vector3<f64>,
    p_a: &Vector3<f64>,
) -> Result<ReducedTerms> {
    let c = metric.coupling_block();
    let a_hat = metric.cyclic_inverse();
    let u = a_hat * (p_a - c.transpose() * v);
    let mass = reduced_mass_matrix(metric);
    let qdot = assemble(v, &u);
    let dl = lagrangian_gradient(metric, &qdot, grad_u);
    let mut rhs = Vector3::new(dl[ZETA], dl[THETA], dl[PHI]);
    for (slot, gamma) in [(1, THETA), (2, PHI)] {
        let partial = metric.partial(gamma);
        let p_g = KineticMetric::pick(partial, RESTORING, RESTORING);
        let c_g = KineticMetric::pick(partial, RESTORING, CYCLIC);
        let k_g = KineticMetric::pick(partial, CYCLIC, CYCLIC);
        let m_g = p_g - c_g * a_hat * c.transpose() - c * a_hat * c_g.transpose() + c * a_hat * k_g * a_hat * c.transpose();
        let b_g = c_g * a_hat * p_a - c * a_hat * k_g * a_hat * p_a;
        rhs -= (m_g * v + b_g) * v[slot];
    }
    let acceleration = Cholesky::new(mass).map(|ch| ch.solve(&rhs)).ok_or(Error::IndefiniteMass)?;
    Ok(ReducedTerms {
        mass,
        cyclic_rates: u,
        cyclic_inverse: a_hat,
        acceleration,
    })
}

/// Integrates the Euler–Lagrange equations of the Routhian at the fixed
/// momenta `initial.p_a`, reconstructing `(xi, eta, psi)` alongside.
/// Samples carry the reconstructed full state and the reduced energy
/// `1/2 v^T m v + 1/2 p^T a^-1 p - U`.
pub fn integrate_reduced(
    mesh: &HullMesh,
    body: &BodyProperties,
    env: &FluidEnvironment,
    initial: &ReducedState,
    t_end: f64,
    dt: f64,
    options: &IntegratorOptions,
) -> std::result::Result<Trajectory, IntegrationFailure> {
    let mut trajectory = Trajectory::default();
    let outcome = run_reduced(mesh, body, env, initial, t_end, dt, options, &mut trajectory);
    match outcome {
        Ok(stats) => {
            trajectory.stats = stats;
            Ok(trajectory)
        }
        Err(error) => Err(IntegrationFailure {
            error,
            partial: trajectory,
        }),
    }
}

#[allow(clippy::too_many_arguments)]
fn run_reduced(
    mesh: &HullMesh,
    body: &BodyProperties,
    env: &FluidEnvironment,
    initial: &ReducedState,
    t_end: f64,
    dt: f64,
    options: &IntegratorOptions,
    trajectory: &mut Trajectory,
) -> Result<IntegrationStats> {
    check_run(t_end, dt)?;
    let p_a = initial.p_a;
    let unpack = |y: &SVector<f64, 9>| {
        (
            y.fixed_rows::<3>(0).into_owned(),
            y.fixed_rows::<3>(3).into_owned(),
            y.fixed_rows::<3>(6).into_owned(),
        )
    };
    let evaluate = |y: &SVector<f64, 9>| -> Result<(ReducedTerms, f64, Pose, Vector3<f64>)> {
        let (q_alpha, v, cyclic) = unpack(y);
        let pose = assemble_pose(&q_alpha, &cyclic);
        let metric = kinetic_metric(body, pose.theta, pose.phi)?;
        let (grad_u, u) = potential_gradient(mesh, body, env, &pose)?;
        Ok((reduced_terms(&metric, &grad_u, &v, &p_a)?, u, pose, v))
    };
    let rhs = |_t: f64, y: &SVector<f64, 9>| -> Result<SVector<f64, 9>> {
        let (terms, _, _, v) = evaluate(y)?;
        let mut dy = SVector::<f64, 9>::zeros();
        dy.fixed_rows_mut::<3>(0).copy_from(&v);
        dy.fixed_rows_mut::<3>(3).copy_from(&terms.acceleration);
        dy.fixed_rows_mut::<3>(6).copy_from(&terms.cyclic_rates);
        Ok(dy)
    };
    let observe = |t: f64, y: &SVector<f64, 9>| -> Result<()> {
        let (terms, u, pose, v) = evaluate(y)?;
        let energy = 0.5 * v.dot(&(terms.mass * v)) + 0.5 * p_a.dot(&(terms.cyclic_inverse * p_a)) - u;
        trajectory.samples.push(TrajectorySample {
            t,
            q: pose,
            qdot: assemble(&v, &terms.cyclic_rates),
            energy,
            momenta: p_a,
        });
        Ok(())
    };
    let mut y0 = SVector::<f64, 9>::zeros();
    y0.fixed_rows_mut::<3>(0).copy_from(&initial.q_alpha);
    y0.fixed_rows_mut::<3>(3).copy_from(&initial.qdot_alpha);
    y0.fixed_rows_mut::<3>(6).copy_from(&initial.cyclic);
    if !y0.iter().chain(p_a.iter()).all(|v| v.is_finite()) {
        return Err(Error::InvalidParameter("initial state must be finite".into()));
    }
    integrate(rhs, 0.0, y0, t_end, dt, options, observe)
}

/// The angular velocity in body components for a full state.
pub fn angular_velocity(state: &FullState) -> Result<Vector3<f64>> {
    let w = kinematics::omega_map(state.q.theta, state.q.phi)?;
    Ok(w * Vector3::new(state.qdot[kinematics::PSI], state.qdot[THETA], state.qdot[PHI]))
}
