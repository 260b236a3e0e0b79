mod common;

use std::sync::LazyLock;

use hydrostab::clip::clip_by_waterplane;
use hydrostab::dynamics::{angular_velocity, FullState};
use hydrostab::hydrostatics::{buoyant_force_torque, generalized_forces, potential, potential_with_origin_offset, surface_term};
use hydrostab::kinematics::Pose;
use hydrostab::mesh::HullMesh;
use hydrostab::verify::{gradient_check, hessian_check};
use nalgebra::{Vector3, Vector6};
use proptest::prelude::*;

static MESHES: LazyLock<Vec<HullMesh>> = LazyLock::new(|| vec![common::cube(), common::ellipsoid(), common::blob(11, 14, 28)]);

fn mesh_and_pose() -> impl Strategy<Value = (usize, Pose)> {
    (0..3usize, -0.5..0.5f64, -3.1..3.1f64, -1.2..1.2f64, -3.1..3.1f64).prop_map(|(m, depth, psi, theta, phi)| {
        let zeta = depth * MESHES[m].diameter() * 0.5;
        (m, Pose::new(0.7, -1.3, zeta, psi, theta, phi))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn forces_are_the_potential_gradient((m, pose) in mesh_and_pose()) {
        let check = gradient_check(&MESHES[m], &common::env(), &pose).unwrap();
        prop_assert!(check.max_relative_error < 1e-5, "{check:?}");
        prop_assert_eq!(check.cyclic_derivatives, Vector3::zeros());
    }

    #[test]
    fn force_gradient_is_symmetric_and_matches_differences((m, pose) in mesh_and_pose()) {
        let check = hessian_check(&MESHES[m], &common::env(), &pose).unwrap();
        prop_assert!(check.asymmetry < 1e-12 && check.max_relative_error < 1e-5, "{check:?}");
    }

    #[test]
    fn wrench_power_equals_generalized_force_power(
        (m, pose) in mesh_and_pose(),
        rates in prop::collection::vec(prop::array::uniform6(-2.0..2.0f64), 100),
    ) {
        let mesh = &MESHES[m];
        let env = common::env();
        let q = generalized_forces(mesh, &pose, &env).unwrap();
        let wrench = buoyant_force_torque(mesh, &pose, &env).unwrap();
        let scale = env.rho_g() * mesh.volume() * mesh.diameter();
        for rate in rates {
            let qdot = Vector6::from(rate);
            let omega = angular_velocity(&FullState { q: pose, qdot }).unwrap();
            let power = wrench.power(&Vector3::new(qdot[0], qdot[1], qdot[2]), &omega);
            prop_assert!((power - q.dot(&qdot)).abs() < 1e-9 * scale * qdot.amax().max(1.0));
        }
    }

    #[test]
    fn surface_term_vanishes_with_origin_on_the_surface((m, pose) in mesh_and_pose()) {
        let mesh = &MESHES[m];
        let l = mesh.diameter();
        prop_assert!(surface_term(mesh, &pose, 0.0).unwrap().abs() < 1e-12 * l.powi(4));
        let env = common::env();
        let general = potential_with_origin_offset(mesh, &pose, &env, 0.0).unwrap();
        let plain = potential(mesh, &pose, &env).unwrap();
        prop_assert!((general - plain).abs() <= 1e-10 * plain.abs().max(env.rho_g() * mesh.volume() * l));
    }

    #[test]
    fn offset_origin_adds_a_waterplane_constant((m, pose) in mesh_and_pose(), h in -0.5..0.5f64) {
        let mesh = &MESHES[m];
        let env = common::env();
        let solid = clip_by_waterplane(mesh, &pose).unwrap();
        let volume = solid.volume_and_first_moments().volume;
        let area = solid.cap_integrals().area;
        let expected = potential(mesh, &pose, &env).unwrap() + env.rho_g() * (h * volume + 0.5 * area * h * h);
        let general = potential_with_origin_offset(mesh, &pose, &env, h).unwrap();
        let scale = env.rho_g() * mesh.volume() * mesh.diameter();
        prop_assert!((general - expected).abs() < 1e-10 * scale);
    }
}
