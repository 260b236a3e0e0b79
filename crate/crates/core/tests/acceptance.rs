mod common;

use std::f64::consts::PI;
use std::time::Instant;

use hydrostab::clip::clip_by_waterplane;
use hydrostab::dynamics::{
    integrate_full, integrate_reduced, kinetic_metric, potential_energy, reduced_mass_matrix, BodyProperties, ReducedState, SimulationOptions,
    Trajectory,
};
use hydrostab::equilibrium::{find_equilibrium, EquilibriumOptions, EquilibriumResult};
use hydrostab::hydrostatics::{
    force_gradient, hessian_at_equilibrium, potential, potential_with_origin_offset, pseudo_stability_check, restoring_block,
    surface_term, EquilibriumHydrostatics, FluidEnvironment, MetacentricData,
};
use hydrostab::integrator::IntegratorOptions;
use hydrostab::kinematics::{k3_body, Pose};
use hydrostab::mesh::HullMesh;
use hydrostab::oscillations::{characteristic_polynomial, equilibrium_modes};
use hydrostab::shapes;
use hydrostab::verify::{gradient_check, hessian_check, loop_work};
use nalgebra::{Rotation3, Vector3};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

struct Outcome {
    pass: bool,
    detail: String,
}

fn equilibrium(mesh: &HullMesh, mass: f64, env: &FluidEnvironment) -> EquilibriumResult {
    let eq = find_equilibrium(mesh, mass, env, Vector3::zeros(), &EquilibriumOptions::default()).unwrap();
    assert!(eq.converged, "equilibrium did not converge: {eq:?}");
    eq
}

fn is_non_convex(mesh: &HullMesh) -> bool {
    let tol = 1e-9 * mesh.diameter();
    (0..mesh.triangles().len()).any(|t| {
        let [a, b, c] = mesh.triangle(t);
        let n = (b - a).cross(&(c - a)).normalize();
        mesh.vertices().iter().any(|v| (v - a).dot(&n) > tol)
    })
}

fn conservativeness() -> Outcome {
    let start = Instant::now();
    let env = common::env();
    let blob = common::blob(2024, 14, 28);
    assert!(is_non_convex(&blob));
    let mut rng = StdRng::seed_from_u64(1);
    let mut worst_loop: f64 = 0.0;
    let mut worst_fd: f64 = 0.0;
    for mesh in [common::cube(), blob] {
        let half = 0.5 * mesh.height();
        for _ in 0..20 {
            let center = Vector3::new(
                rng.random_range(-0.5..0.5) * half,
                rng.random_range(-0.5..0.5),
                rng.random_range(-0.5..0.5),
            );
            let count = rng.random_range(3..7);
            let vertices: Vec<Vector3<f64>> = (0..count)
                .map(|_| {
                    center
                        + Vector3::new(
                            rng.random_range(-0.4..0.4) * half,
                            rng.random_range(-0.4..0.4),
                            rng.random_range(-0.4..0.4),
                        )
                })
                .collect();
            let work = loop_work(&mesh, &env, &vertices, 1e-10).unwrap();
            worst_loop = worst_loop.max(work.relative);
        }
        for _ in 0..50 {
            let pose = common::random_cutting_pose(&mut rng, &mesh, 1.2);
            worst_fd = worst_fd.max(gradient_check(&mesh, &env, &pose).unwrap().max_relative_error);
        }
    }
    let seconds = start.elapsed().as_secs_f64();
    Outcome {
        pass: worst_loop < 1e-6 && worst_fd < 1e-5 && seconds < 30.0,
        detail: format!("loop work {worst_loop:.2e} (< 1e-6), gradient vs FD {worst_fd:.2e} (< 1e-5), {seconds:.1} s (< 30 s)"),
    }
}

fn surface_identity() -> Outcome {
    let env = common::env();
    let mut rng = StdRng::seed_from_u64(2);
    let mut worst_surface: f64 = 0.0;
    let mut worst_potential: f64 = 0.0;
    for mesh in [common::cube(), common::blob(2024, 14, 28)] {
        let l = mesh.diameter();
        for _ in 0..50 {
            let pose = common::random_cutting_pose(&mut rng, &mesh, 1.2);
            worst_surface = worst_surface.max(surface_term(&mesh, &pose, 0.0).unwrap().abs() / l.powi(4));
            let general = potential_with_origin_offset(&mesh, &pose, &env, 0.0).unwrap();
            let plain = potential(&mesh, &pose, &env).unwrap();
            worst_potential = worst_potential.max((general - plain).abs() / plain.abs());
        }
    }
    Outcome {
        pass: worst_surface < 1e-12 && worst_potential < 1e-10,
        detail: format!("surface term / L^4 {worst_surface:.2e} (< 1e-12), general vs plain potential {worst_potential:.2e} (< 1e-10)"),
    }
}

/// Prism along `e2` with a raked profile in `(x1, x3)`, ballasted so that it
/// floats level with the floating center ahead of `G`.
fn raked_hull(env: &FluidEnvironment) -> (HullMesh, f64) {
    let profile = [(-0.3, -1.0), (-0.3, 1.0), (0.3, 1.6), (0.3, -1.0)];
    let section: Vec<(f64, f64)> = profile.iter().map(|&(z, x)| (x, z)).collect();
    let along_x = shapes::prism(1.2, &section);
    let quarter_turn = Rotation3::from_axis_angle(&Vector3::z_axis(), PI / 2.0).into_inner();
    let hull = along_x.rotated(&quarter_turn).unwrap();
    let hull = hull.with_symmetry(hull.detect_symmetry()).unwrap();
    let waterline = 0.05;
    let solid = clip_by_waterplane(&hull, &Pose::restoring(-waterline, 0.0, 0.0)).unwrap();
    let vol = solid.volume_and_first_moments();
    let b = vol.buoyancy_center().unwrap();
    let g = Vector3::new(b.x, 0.0, b.z - 0.1);
    let shifted = hull.translated(&-g).unwrap();
    let shifted = shifted.with_symmetry(shifted.detect_symmetry()).unwrap();
    (shifted, env.density * vol.volume)
}

fn hessian_chain() -> Outcome {
    let env = common::env();
    let mut rng = StdRng::seed_from_u64(3);
    let mut worst_fd: f64 = 0.0;
    let mut worst_asym: f64 = 0.0;
    for mesh in [common::cube(), common::blob(2024, 14, 28)] {
        for _ in 0..25 {
            let pose = common::random_cutting_pose(&mut rng, &mesh, 1.2);
            let check = hessian_check(&mesh, &env, &pose).unwrap();
            worst_fd = worst_fd.max(check.max_relative_error);
            worst_asym = worst_asym.max(check.asymmetry);
        }
    }

    let barge = common::barge();
    let ellipsoid = common::ellipsoid();
    let vee = shapes::v_hull(3.0, 1.0, 0.3, 0.5);
    let (raked, raked_mass) = raked_hull(&env);
    let cases = [
        (barge.clone(), 0.3 * env.density * barge.volume()),
        (ellipsoid.clone(), 0.5 * env.density * ellipsoid.volume()),
        (vee.clone(), 0.4 * env.density * vee.volume()),
        (raked, raked_mass),
    ];
    let mut worst_closed: f64 = 0.0;
    let mut worst_zero: f64 = 0.0;
    let mut largest_xc: f64 = 0.0;
    for (mesh, mass) in &cases {
        let eq = equilibrium(mesh, *mass, &env);
        assert!(eq.level, "{eq:?}");
        let closed = hessian_at_equilibrium(mesh, &eq.q_star, *mass, &env).unwrap();
        let block = restoring_block(&force_gradient(mesh, &eq.q_star, &env).unwrap());
        worst_closed = worst_closed.max((closed - block).amax() / block.amax());
        worst_zero = worst_zero.max(block[(0, 2)].abs().max(block[(1, 2)].abs()) / block.amax());
        assert!(closed[(0, 2)] == 0.0 && closed[(1, 2)] == 0.0);
        largest_xc = largest_xc.max(EquilibriumHydrostatics::evaluate(mesh, &eq.q_star).unwrap().x_c.abs());
    }
    Outcome {
        pass: worst_fd < 1e-5 && worst_asym < 1e-12 && worst_closed < 1e-8 && worst_zero < 1e-8 && largest_xc > 0.01,
        detail: format!(
            "gradient vs FD {worst_fd:.2e} (< 1e-5), closed form vs gradient {worst_closed:.2e} (< 1e-8), \
             off-block entries {worst_zero:.2e}, largest |x_C| {largest_xc:.3}"
        ),
    }
}

/// `GM = KB + BM - KG` for a box of length `l`, beam `b`, depth `depth`
/// floating at draft `t` with `G` at mid-depth.
fn box_metacentric_heights(l: f64, b: f64, depth: f64, t: f64) -> (f64, f64) {
    let kb = 0.5 * t;
    let kg = 0.5 * depth;
    (kb + b * b / (12.0 * t) - kg, kb + l * l / (12.0 * t) - kg)
}

fn metacentric_oracle() -> Outcome {
    let env = common::env();
    let barge = shapes::cuboid(2.0, 1.0, 0.5);
    let draft = 0.25;
    let mass = env.density * 2.0 * 1.0 * draft;
    let eq = equilibrium(&barge, mass, &env);
    let data = MetacentricData::from_equilibrium(&EquilibriumHydrostatics::evaluate(&barge, &eq.q_star).unwrap(), &env).unwrap();
    let (gm_t, gm_l) = box_metacentric_heights(2.0, 1.0, 0.5, draft);
    let err_t = (data.gm_t - gm_t).abs() / gm_t;
    let err_l = (data.gm_l - gm_l).abs() / gm_l;

    let cube = common::cube();
    let eq = equilibrium(&cube, 0.5 * env.density, &env);
    let cube_data = MetacentricData::from_equilibrium(&EquilibriumHydrostatics::evaluate(&cube, &eq.q_star).unwrap(), &env).unwrap();
    let report = pseudo_stability_check(&cube_data, &env);
    let err_cube = (cube_data.gm_t + 1.0 / 12.0).abs();
    Outcome {
        pass: err_t < 1e-9 && err_l < 1e-9 && err_cube < 1e-10 && !report.pseudo_stable,
        detail: format!(
            "barge GM_T {:.12} (rel err {err_t:.1e}), GM_L {:.12} (rel err {err_l:.1e}); cube GM_T {:.12} (err {err_cube:.1e}), pseudo-stable {}",
            data.gm_t, data.gm_l, cube_data.gm_t, report.pseudo_stable
        ),
    }
}

fn routh_body(mesh: &HullMesh, density: f64) -> BodyProperties {
    let props = mesh.mass_properties(density);
    let mut inertia = props.inertia;
    let coupling = 0.1 * inertia[(0, 0)].min(inertia[(2, 2)]);
    inertia[(0, 2)] = coupling;
    inertia[(2, 0)] = coupling;
    BodyProperties::new(props.mass, inertia).unwrap()
}

fn max_projection_gap(reduced: &Trajectory, full: &Trajectory) -> f64 {
    assert_eq!(reduced.samples.len(), full.samples.len());
    reduced
        .samples
        .iter()
        .zip(&full.samples)
        .map(|(r, f)| {
            assert_eq!(r.t, f.t);
            [r.q.zeta - f.q.zeta, r.q.theta - f.q.theta, r.q.phi - f.q.phi]
                .iter()
                .fold(0.0f64, |acc, d| acc.max(d.abs()))
        })
        .fold(0.0, f64::max)
}

fn routh_equivalence() -> Outcome {
    let env = common::env();
    let barge = shapes::cuboid(2.0, 1.0, 0.5);
    let body = routh_body(&barge, 0.5 * env.density);
    let eq = equilibrium(&barge, body.mass, &env);
    let area = 2.0;
    let heave_period = 2.0 * PI / (env.rho_g() * area / body.mass).sqrt();
    let q_alpha = Vector3::new(eq.q_star.zeta + 0.03, 0.05, 0.08);
    let qdot_alpha = Vector3::new(0.1, -0.05, 0.2);
    let omega_h = 2.0 * PI / heave_period;

    let mut worst_gap: f64 = 0.0;
    let mut worst_momentum: f64 = 0.0;
    for p_psi in [0.0, 0.5 * body.inertia[(2, 2)]] {
        let reduced = ReducedState {
            q_alpha,
            qdot_alpha,
            p_a: Vector3::new(0.0, 0.0, p_psi),
            cyclic: Vector3::zeros(),
        };
        let full_start = reduced.to_full(&body).unwrap();
        let t_end = 10.0 * heave_period;
        let dt = heave_period / 50.0;
        let r = integrate_reduced(&barge, &body, &env, &reduced, t_end, dt, &IntegratorOptions::default()).unwrap();
        let f = integrate_full(&barge, &body, &env, &full_start, t_end, dt, &SimulationOptions::default()).unwrap();
        worst_gap = worst_gap.max(max_projection_gap(&r, &f));
        let scale = p_psi.abs().max(body.mass * barge.diameter() * omega_h);
        let drift = f.conservation().unwrap().max_momentum_drift.amax();
        worst_momentum = worst_momentum.max(drift / scale);
    }

    let reduced = ReducedState {
        q_alpha,
        qdot_alpha,
        p_a: Vector3::new(0.0, 0.0, 0.5 * body.inertia[(2, 2)]),
        cyclic: Vector3::zeros(),
    };
    let start = reduced.to_full(&body).unwrap();
    let long = integrate_full(&barge, &body, &env, &start, 150.0 * heave_period, heave_period / 10.0, &SimulationOptions::default()).unwrap();
    let e0 = long.samples[0].energy;
    let max_drift = long.conservation().unwrap().max_energy_drift;
    let energy_drift = max_drift / e0.abs();
    let excitation = e0 + potential_energy(&barge, &body, &env, &eq.q_star).unwrap();
    let steps = long.stats.accepted;
    Outcome {
        pass: worst_gap < 1e-6 && worst_momentum < 1e-9 && energy_drift < 1e-7 && steps >= 10_000,
        detail: format!(
            "reduced vs full {worst_gap:.2e} (< 1e-6), momentum drift {worst_momentum:.2e} (< 1e-9), \
             energy drift {energy_drift:.2e} over {steps} steps (< 1e-7; {:.2e} of the excitation energy)",
            max_drift / excitation
        ),
    }
}

fn normal_mode_oracle() -> Outcome {
    let env = common::env();
    let (l, b, depth, draft) = (2.0, 1.0, 0.5, 0.25);
    let barge = shapes::cuboid(l, b, depth);
    let body = routh_body(&barge, env.density * draft / depth);
    let eq = equilibrium(&barge, body.mass, &env);
    let modes = equilibrium_modes(&barge, &body, &env, &eq.q_star).unwrap();

    let displacement = body.mass * env.gravity;
    let (gm_t, gm_l) = box_metacentric_heights(l, b, depth, draft);
    let i = body.inertia;
    let mut expected = [
        env.rho_g() * l * b / body.mass,
        displacement * gm_l / i[(1, 1)],
        displacement * gm_t * i[(2, 2)] / (i[(0, 0)] * i[(2, 2)] - i[(0, 2)] * i[(0, 2)]),
    ];
    expected.sort_by(f64::total_cmp);
    let worst_lambda = (0..3)
        .map(|k| (modes.lambdas[k] - expected[k]).abs() / expected[k])
        .fold(0.0, f64::max);

    let m_red = reduced_mass_matrix(&kinetic_metric(&body, eq.q_star.theta, eq.q_star.phi).unwrap());
    let c = modes.c;
    let worst_det = modes
        .lambdas
        .iter()
        .map(|&lambda| characteristic_polynomial(&c, &m_red, lambda).abs() / (c.norm() + lambda.abs() * m_red.norm()).powi(3))
        .fold(0.0, f64::max);
    Outcome {
        pass: worst_lambda < 1e-9 && worst_det < 1e-8,
        detail: format!(
            "lambdas {:.9?} vs {:.9?}: rel err {worst_lambda:.1e} (< 1e-9), det(c - lambda m) {worst_det:.1e} (< 1e-8)",
            modes.lambdas.as_slice(),
            expected
        ),
    }
}

/// Cubic Hermite root of `s` on `[t0, t1]` from values and slopes at both ends.
fn hermite_root(t0: f64, t1: f64, s0: f64, s1: f64, d0: f64, d1: f64) -> f64 {
    let h = t1 - t0;
    let eval = |u: f64| {
        let (u2, u3) = (u * u, u * u * u);
        (2.0 * u3 - 3.0 * u2 + 1.0) * s0 + (u3 - 2.0 * u2 + u) * h * d0 + (-2.0 * u3 + 3.0 * u2) * s1 + (u3 - u2) * h * d1
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if eval(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    t0 + 0.5 * (lo + hi) * h
}

/// Mean period between upward crossings of `zeta = level`.
fn crossing_period(trajectory: &Trajectory, level: f64) -> f64 {
    let mut crossings = Vec::new();
    for pair in trajectory.samples.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let (s0, s1) = (a.q.zeta - level, b.q.zeta - level);
        if s0 < 0.0 && s1 >= 0.0 {
            crossings.push(hermite_root(a.t, b.t, s0, s1, a.qdot[2], b.qdot[2]));
        }
    }
    assert!(crossings.len() >= 3, "too few crossings");
    (crossings[crossings.len() - 1] - crossings[0]) / (crossings.len() - 1) as f64
}

fn small_oscillations() -> Outcome {
    let env = common::env();
    let hull = shapes::v_hull(3.0, 2.0, 0.3, 0.5);
    let (body, centroid) = BodyProperties::uniform(&hull, 0.4 * env.density).unwrap();
    let hull = hull.translated(&-centroid).unwrap();
    let hull = hull.with_symmetry(hull.detect_symmetry()).unwrap();
    let eq = equilibrium(&hull, body.mass, &env);
    let modes = equilibrium_modes(&hull, &body, &env, &eq.q_star).unwrap();
    assert!(modes.is_stable(), "{modes:?}");
    let heave = (0..3)
        .max_by(|&i, &j| modes.mode_shapes[(0, i)].abs().total_cmp(&modes.mode_shapes[(0, j)].abs()))
        .unwrap();
    let shape = modes.mode_shapes.column(heave).into_owned();
    let linear_period = 2.0 * PI / modes.lambdas[heave].sqrt();

    let options = IntegratorOptions {
        rtol: 1e-13,
        atol: 1e-16,
        ..IntegratorOptions::default()
    };
    let base = 1e-3 * hull.height();
    let errors: Vec<f64> = [1.0, 0.5, 0.25]
        .iter()
        .map(|&f| {
            let start = ReducedState {
                q_alpha: Vector3::new(eq.q_star.zeta, eq.q_star.theta, eq.q_star.phi) + f * base * shape / shape[0],
                qdot_alpha: Vector3::zeros(),
                p_a: Vector3::zeros(),
                cyclic: Vector3::zeros(),
            };
            let t = integrate_reduced(&hull, &body, &env, &start, 10.3 * linear_period, linear_period / 200.0, &options).unwrap();
            (crossing_period(&t, eq.q_star.zeta) - linear_period).abs() / linear_period
        })
        .collect();
    let ratios = [errors[0] / errors[1], errors[1] / errors[2]];
    let quadratic = ratios.iter().all(|&r| (2.0..=8.0).contains(&r));
    Outcome {
        pass: errors[0] < 0.01 && quadratic,
        detail: format!(
            "period error {:.3e} / {:.3e} / {:.3e} at a, a/2, a/4 (< 1%), ratios {:.2}, {:.2} (4 within a factor of 2)",
            errors[0], errors[1], errors[2], ratios[0], ratios[1]
        ),
    }
}

/// Outward face planes `(n, d)` with `n . x <= d` inside; valid for convex meshes.
fn face_planes(mesh: &HullMesh) -> Vec<(Vector3<f64>, f64)> {
    (0..mesh.triangles().len())
        .map(|t| {
            let [a, b, c] = mesh.triangle(t);
            let n = (b - a).cross(&(c - a)).normalize();
            (n, n.dot(&a))
        })
        .collect()
}

struct Estimate {
    volume: (f64, f64),
    first: [(f64, f64); 3],
}

fn sample_submerged(planes: &[(Vector3<f64>, f64)], bounds: (Vector3<f64>, Vector3<f64>), pose: &Pose, samples: usize, seed: u64) -> Estimate {
    let mut rng = StdRng::seed_from_u64(seed);
    let (lo, hi) = bounds;
    let span = hi - lo;
    let box_volume = span.x * span.y * span.z;
    let normal = k3_body(pose);
    let mut hits = 0usize;
    let mut sum = Vector3::zeros();
    let mut sum_sq = Vector3::zeros();
    for _ in 0..samples {
        let x = lo + span.component_mul(&Vector3::new(rng.random(), rng.random(), rng.random()));
        if pose.zeta + normal.dot(&x) <= 0.0 {
            continue;
        }
        if planes.iter().all(|(n, d)| n.dot(&x) <= *d) {
            hits += 1;
            sum += x;
            sum_sq += x.component_mul(&x);
        }
    }
    let n = samples as f64;
    let p = hits as f64 / n;
    let mean_and_error = |s: f64, s2: f64| {
        let mean = s / n;
        let var = s2 / n - mean * mean;
        (box_volume * mean, box_volume * (var / n).sqrt())
    };
    Estimate {
        volume: (box_volume * p, box_volume * (p * (1.0 - p) / n).sqrt()),
        first: [0, 1, 2].map(|k| mean_and_error(sum[k], sum_sq[k])),
    }
}

fn geometry_oracle() -> Outcome {
    let start = Instant::now();
    let meshes = [common::cube(), shapes::ellipsoid(Vector3::new(1.2, 0.7, 0.5), 10, 20)];
    let mut rng = StdRng::seed_from_u64(8);
    let jobs: Vec<(usize, Pose, u64)> = (0..2)
        .flat_map(|m| (0..20).map(move |k| (m, k)))
        .map(|(m, k)| (m, common::random_cutting_pose(&mut rng, &meshes[m], 1.2), 1000 + k as u64 + 100 * m as u64))
        .collect();
    let planes: Vec<_> = meshes.iter().map(face_planes).collect();
    let threads = std::thread::available_parallelism().map_or(4, |n| n.get()).min(jobs.len());
    let results: Vec<f64> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..threads)
            .map(|w| {
                let (jobs, meshes, planes) = (&jobs, &meshes, &planes);
                scope.spawn(move || {
                    jobs.iter()
                        .skip(w)
                        .step_by(threads)
                        .map(|&(m, pose, seed)| {
                            let est = sample_submerged(&planes[m], meshes[m].bounds(), &pose, 1_000_000, seed);
                            let exact = clip_by_waterplane(&meshes[m], &pose).unwrap().volume_and_first_moments();
                            let mut worst = (exact.volume - est.volume.0).abs() / est.volume.1.max(f64::MIN_POSITIVE);
                            for k in 0..3 {
                                worst = worst.max((exact.first[k] - est.first[k].0).abs() / est.first[k].1.max(f64::MIN_POSITIVE));
                            }
                            worst
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().unwrap()).collect()
    });
    let worst = results.iter().copied().fold(0.0, f64::max);
    let seconds = start.elapsed().as_secs_f64();
    Outcome {
        pass: worst < 4.0 && seconds < 60.0,
        detail: format!(
            "largest deviation {worst:.2} standard errors over {} poses (< 4), {seconds:.1} s (< 60 s)",
            results.len()
        ),
    }
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 8] = [
        ("conservative buoyancy", conservativeness),
        ("waterplane surface term", surface_identity),
        ("force gradient and closed-form Hessian", hessian_chain),
        ("metacentric heights", metacentric_oracle),
        ("Routh reduction", routh_equivalence),
        ("normal modes", normal_mode_oracle),
        ("small-oscillation periods", small_oscillations),
        ("clipped volume vs Monte Carlo", geometry_oracle),
    ];
    let mut failures = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        if !outcome.pass {
            failures += 1;
        }
        println!(
            "{} {}. {name}: {} [{:.1} s]",
            if outcome.pass { "PASS" } else { "FAIL" },
            k + 1,
            outcome.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
