//! The subcommands as library functions.

use anyhow::{bail, ensure, Context, Result};
use hydrostab::clip::clip_by_waterplane;
use hydrostab::dynamics::{
    integrate_full, integrate_reduced, kinetic_metric, reduced_mass_matrix, FullState, ReducedState, SimulationOptions, Trajectory,
};
use hydrostab::equilibrium::{find_equilibrium, EquilibriumResult};
use hydrostab::hydrostatics::{
    equilibrium_residual, force_gradient, generalized_forces, hessian_at_equilibrium, is_negative_definite, pseudo_stability_check,
    restoring_block, EquilibriumHydrostatics, MetacentricData,
};
use hydrostab::kinematics::{k3_body, Pose};
use hydrostab::oscillations::{normal_modes, ModalResult};
use hydrostab::verify::{e2_invariant, gradient_check, hessian_check, loop_work};
use hydrostab::Error as CoreError;
use nalgebra::{Matrix3, Vector3, Vector6};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::config::{AnalysisConfig, Model, SimulationConfig, SimulationMode, VerificationTolerances};
use crate::report::{
    BodyEcho, ClipSummary, HessianSource, ModesReport, Report, Stability, VerificationSummary, VerifyReport, SCHEMA_VERSION,
};

fn solve_equilibrium(config: &AnalysisConfig, model: &Model) -> Result<EquilibriumResult> {
    let eq = find_equilibrium(
        &model.mesh,
        model.body.mass,
        &model.env,
        Vector3::from(config.initial_guess),
        &config.tolerances.equilibrium,
    )?;
    ensure!(
        eq.converged,
        "equilibrium search stopped at residual {:e} (tolerance {:e})",
        eq.residual_norm,
        config.tolerances.equilibrium.tolerance
    );
    Ok(eq)
}

/// Hessian of `U`: the closed form where it applies, the force gradient otherwise.
fn equilibrium_hessian(model: &Model, q_star: &Pose) -> Result<(Matrix3<f64>, HessianSource)> {
    match hessian_at_equilibrium(&model.mesh, q_star, model.body.mass, &model.env) {
        Ok(h) => Ok((h, HessianSource::ClosedForm)),
        Err(CoreError::AsymmetricBody | CoreError::NonLevelEquilibrium { .. }) => Ok((
            restoring_block(&force_gradient(&model.mesh, q_star, &model.env)?),
            HessianSource::ForceGradient,
        )),
        Err(e) => Err(e.into()),
    }
}

fn modes_at(model: &Model, q_star: &Pose, hessian: &Matrix3<f64>) -> Result<(ModalResult, Matrix3<f64>)> {
    let metric = kinetic_metric(&model.body, q_star.theta, q_star.phi)?;
    let m_red = reduced_mass_matrix(&metric);
    Ok((normal_modes(hessian, &m_red)?, m_red))
}

fn stability(model: &Model, q_star: &Pose, level: bool, hydro: &EquilibriumHydrostatics) -> Result<Stability> {
    let (hessian, source) = equilibrium_hessian(model, q_star)?;
    if source == HessianSource::ClosedForm && level {
        let report = pseudo_stability_check(&MetacentricData::from_equilibrium(hydro, &model.env)?, &model.env);
        return Ok(Stability {
            hessian_source: source,
            hessian,
            pseudo_stable: report.pseudo_stable,
            gm_t: Some(report.gm_t),
            gm_l: Some(report.gm_l),
            margins: Some(report.margins),
            marginal: report.marginal,
        });
    }
    Ok(Stability {
        hessian_source: source,
        hessian,
        pseudo_stable: is_negative_definite(&hessian),
        gm_t: None,
        gm_l: None,
        margins: None,
        marginal: false,
    })
}

/// Equilibrium, hydrostatics, stability verdict, modes and a local verification.
pub fn analyze(config: &AnalysisConfig) -> Result<Report> {
    let model = config.resolve()?;
    let eq = solve_equilibrium(config, &model)?;
    let hydro = EquilibriumHydrostatics::evaluate(&model.mesh, &eq.q_star)?;
    let stability = stability(&model, &eq.q_star, eq.level, &hydro)?;
    let modes = modes_at(&model, &eq.q_star, &stability.hessian)?.0;

    let mut rng = StdRng::seed_from_u64(0);
    let height = model.mesh.height();
    let poses: Vec<Pose> = std::iter::once(eq.q_star)
        .chain((0..4).map(|_| {
            Pose::new(
                0.0,
                0.0,
                eq.q_star.zeta + rng.random_range(-0.05..0.05) * height,
                rng.random_range(-0.5..0.5),
                eq.q_star.theta + rng.random_range(-0.05..0.05),
                eq.q_star.phi + rng.random_range(-0.05..0.05),
            )
        }))
        .collect();
    let center = Vector3::new(eq.q_star.zeta, eq.q_star.theta, eq.q_star.phi);
    let loops: Vec<Vec<Vector3<f64>>> = (0..2)
        .map(|_| {
            (0..4)
                .map(|_| {
                    center
                        + Vector3::new(
                            rng.random_range(-0.05..0.05) * height,
                            rng.random_range(-0.05..0.05),
                            rng.random_range(-0.05..0.05),
                        )
                })
                .collect()
        })
        .collect();
    let verification = run_verification(&model, &config.tolerances.verification, &poses, &loops, &mut rng)?;

    Ok(Report {
        schema_version: SCHEMA_VERSION,
        input: config.clone(),
        body: BodyEcho {
            mass: model.body.mass,
            center_of_gravity: model.center_of_gravity,
            inertia: model.body.inertia,
            inertia_shift: model.inertia_shift,
            mesh_volume: model.mesh.volume(),
            mesh_diameter: model.mesh.diameter(),
            triangles: model.mesh.triangles().len(),
            symmetric: model.mesh.is_symmetric(),
        },
        equilibrium: eq,
        displacement: model.env.rho_g() * hydro.volume,
        hydrostatics: hydro,
        stability,
        modes: Some(modes),
        verification,
    })
}

/// Normal modes at a stored equilibrium (checked against this config) or a fresh one.
pub fn modes(config: &AnalysisConfig, stored: Option<&Report>) -> Result<ModesReport> {
    let model = config.resolve()?;
    let q_star = match stored {
        Some(report) => {
            ensure!(
                report.schema_version == SCHEMA_VERSION,
                "report schema version {} is not supported (expected {SCHEMA_VERSION})",
                report.schema_version
            );
            let q = report.equilibrium.q_star;
            let forces = generalized_forces(&model.mesh, &q, &model.env)?;
            let residual = equilibrium_residual(&forces, model.body.mass, &model.env);
            let weight = model.body.mass * model.env.gravity;
            let norm = (residual[0].abs() / weight)
                .max(residual[1].abs() / (weight * model.mesh.diameter()))
                .max(residual[2].abs() / (weight * model.mesh.diameter()));
            ensure!(
                norm <= 1e-8,
                "stored equilibrium does not balance this configuration (scaled residual {norm:e})"
            );
            q
        }
        None => solve_equilibrium(config, &model)?.q_star,
    };
    let (hessian, source) = equilibrium_hessian(&model, &q_star)?;
    let (modes, m_red) = modes_at(&model, &q_star, &hessian)?;
    Ok(ModesReport {
        schema_version: SCHEMA_VERSION,
        input: config.clone(),
        q_star,
        hessian_source: source,
        reduced_mass: m_red,
        modes,
    })
}

/// Integrates from the equilibrium plus the configured disturbance.
pub fn simulate(config: &AnalysisConfig, sim: &SimulationConfig) -> Result<Trajectory> {
    let model = config.resolve()?;
    let eq = solve_equilibrium(config, &model)?;
    let q = Pose {
        zeta: eq.q_star.zeta + sim.displacement[0],
        theta: eq.q_star.theta + sim.displacement[1],
        phi: eq.q_star.phi + sim.displacement[2],
        ..eq.q_star
    };
    let mut start = FullState {
        q,
        qdot: Vector6::from(sim.velocity),
    };
    if let Some(p) = sim.cyclic_momenta {
        let mut reduced = ReducedState::from_full(&model.body, &start)?;
        reduced.p_a = Vector3::from(p);
        start = reduced.to_full(&model.body)?;
    }
    let trajectory = match sim.mode {
        SimulationMode::Full => {
            let options = SimulationOptions {
                integrator: config.tolerances.integrator,
                ..SimulationOptions::default()
            };
            integrate_full(&model.mesh, &model.body, &model.env, &start, sim.t_end, sim.dt, &options)
        }
        SimulationMode::Reduced => {
            let reduced = ReducedState::from_full(&model.body, &start)?;
            integrate_reduced(&model.mesh, &model.body, &model.env, &reduced, sim.t_end, sim.dt, &config.tolerances.integrator)
        }
    };
    trajectory.map_err(|failure| {
        anyhow::Error::new(failure.error.clone()).context(format!(
            "integration stopped after {} samples (t = {})",
            failure.partial.samples.len(),
            failure.partial.samples.last().map_or(0.0, |s| s.t)
        ))
    })
}

/// Random pose whose waterplane cuts the hull, tilts below `max_tilt`.
pub fn random_cutting_pose(model: &Model, rng: &mut impl Rng, max_tilt: f64) -> Pose {
    let mut pose = Pose::new(
        rng.random_range(-2.0..2.0),
        rng.random_range(-2.0..2.0),
        0.0,
        rng.random_range(-std::f64::consts::PI..std::f64::consts::PI),
        rng.random_range(-max_tilt..max_tilt),
        rng.random_range(-max_tilt..max_tilt),
    );
    let n = k3_body(&pose);
    let (lo, hi) = model
        .mesh
        .vertices()
        .iter()
        .map(|v| n.dot(v))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| (lo.min(d), hi.max(d)));
    // Submerged iff zeta + n.x > 0, so zeta in (-hi, -lo) cuts the hull.
    let margin = 0.1 * (hi - lo);
    pose.zeta = rng.random_range(-hi + margin..-lo - margin);
    pose
}

/// Random closed polygons in `(zeta, theta, phi)` around cutting poses.
pub fn random_loops(model: &Model, rng: &mut impl Rng, count: usize) -> Vec<Vec<Vector3<f64>>> {
    let height = model.mesh.height();
    (0..count)
        .map(|_| {
            let c = random_cutting_pose(model, rng, 0.8);
            let sides = rng.random_range(3..7);
            (0..sides)
                .map(|_| {
                    Vector3::new(
                        c.zeta + rng.random_range(-0.1..0.1) * height,
                        c.theta + rng.random_range(-0.2..0.2),
                        c.phi + rng.random_range(-0.2..0.2),
                    )
                })
                .collect()
        })
        .collect()
}

pub fn run_verification(
    model: &Model,
    thresholds: &VerificationTolerances,
    poses: &[Pose],
    loops: &[Vec<Vector3<f64>>],
    rng: &mut impl Rng,
) -> Result<VerificationSummary> {
    let (mesh, env) = (&model.mesh, &model.env);
    let mut summary = VerificationSummary {
        poses: poses.len(),
        loops: loops.len(),
        loop_work: 0.0,
        gradient: 0.0,
        hessian: 0.0,
        hessian_asymmetry: 0.0,
        cyclic_derivative: 0.0,
        e2_invariant: true,
        thresholds: *thresholds,
        passed: false,
    };
    let scale = env.rho_g() * mesh.volume() * mesh.diameter();
    for vertices in loops {
        summary.loop_work = summary.loop_work.max(loop_work(mesh, env, vertices, 1e-10)?.relative);
    }
    for pose in poses {
        let g = gradient_check(mesh, env, pose)?;
        summary.gradient = summary.gradient.max(g.max_relative_error);
        summary.cyclic_derivative = summary.cyclic_derivative.max(g.cyclic_derivatives.amax() / scale);
        let h = hessian_check(mesh, env, pose)?;
        summary.hessian = summary.hessian.max(h.max_relative_error);
        summary.hessian_asymmetry = summary.hessian_asymmetry.max(h.asymmetry);
        let shift = Vector3::new(rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0), rng.random_range(-3.0..3.0));
        summary.e2_invariant &= e2_invariant(mesh, pose, &shift)?;
    }
    summary.passed = summary.loop_work <= thresholds.loop_work
        && summary.gradient <= thresholds.gradient
        && summary.hessian <= thresholds.hessian
        && summary.hessian_asymmetry <= thresholds.hessian_symmetry
        && summary.cyclic_derivative == 0.0
        && summary.e2_invariant;
    Ok(summary)
}

/// The verification suites at `poses` random cutting poses and `loops` random loops.
pub fn verify(config: &AnalysisConfig, seed: u64, poses: usize, loops: usize) -> Result<VerifyReport> {
    let model = config.resolve()?;
    let mut rng = StdRng::seed_from_u64(seed);
    let pose_list: Vec<Pose> = (0..poses).map(|_| random_cutting_pose(&model, &mut rng, 1.2)).collect();
    let loop_list = random_loops(&model, &mut rng, loops);
    let summary = run_verification(&model, &config.tolerances.verification, &pose_list, &loop_list, &mut rng)?;
    Ok(VerifyReport {
        schema_version: SCHEMA_VERSION,
        input: config.clone(),
        seed,
        summary,
    })
}

/// The submerged solid at `pose` (the equilibrium when absent) as triangles.
type Triangle = [Vector3<f64>; 3];

pub fn clip(config: &AnalysisConfig, pose: Option<Vector3<f64>>) -> Result<(ClipSummary, Vec<Triangle>)> {
    let model = config.resolve()?;
    let pose = match pose {
        Some(p) => Pose::restoring(p.x, p.y, p.z),
        None => solve_equilibrium(config, &model)?.q_star,
    };
    if !pose.is_finite() {
        bail!("pose must be finite");
    }
    let solid = clip_by_waterplane(&model.mesh, &pose).context("clipping failed")?;
    let vol = solid.volume_and_first_moments();
    let triangles = solid.to_triangles();
    Ok((
        ClipSummary {
            pose,
            volume: vol.volume,
            buoyancy_center: vol.buoyancy_center(),
            waterplane_area: solid.cap_integrals().area,
            triangles: triangles.len(),
        },
        triangles,
    ))
}

