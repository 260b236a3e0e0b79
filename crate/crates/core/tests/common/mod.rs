#![allow(dead_code)]

use std::f64::consts::PI;

use hydrostab::hydrostatics::FluidEnvironment;
use hydrostab::kinematics::Pose;
use hydrostab::mesh::HullMesh;
use hydrostab::shapes;
use nalgebra::Vector3;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub fn env() -> FluidEnvironment {
    FluidEnvironment::new(1025.0, 9.81).unwrap()
}

pub fn cube() -> HullMesh {
    shapes::cuboid(1.0, 1.0, 1.0)
}

pub fn barge() -> HullMesh {
    shapes::cuboid(4.0, 2.0, 1.0)
}

pub fn ellipsoid() -> HullMesh {
    shapes::ellipsoid(Vector3::new(1.2, 0.7, 0.5), 16, 32)
}

/// Non-convex star-shaped body: a sphere with a few smooth bumps and dents.
pub fn blob(seed: u64, stacks: usize, slices: usize) -> HullMesh {
    let mut rng = StdRng::seed_from_u64(seed);
    let lobes: Vec<(Vector3<f64>, f64, f64, f64)> = (0..4)
        .map(|_| {
            let axis = random_unit(&mut rng);
            let amplitude = rng.random_range(0.06..0.12);
            let frequency = [2.0, 3.0][rng.random_range(0..2)];
            let phase = rng.random_range(0.0..2.0 * PI);
            (axis, amplitude, frequency, phase)
        })
        .collect();
    shapes::radial_surface(stacks, slices, move |d| {
        let r: f64 = 1.0
            + lobes
                .iter()
                .map(|(u, a, f, ph)| a * (f * PI * d.dot(u) + ph).cos())
                .sum::<f64>();
        r * d.component_mul(&Vector3::new(1.0, 0.8, 0.6))
    })
}

pub fn random_unit(rng: &mut impl Rng) -> Vector3<f64> {
    loop {
        let v = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}

/// Pose cutting the hull: depth within the vertical extent, tilt below `max_tilt`.
pub fn random_cutting_pose(rng: &mut impl Rng, mesh: &HullMesh, max_tilt: f64) -> Pose {
    let half = 0.5 * mesh.diameter();
    Pose::new(
        rng.random_range(-5.0..5.0),
        rng.random_range(-5.0..5.0),
        rng.random_range(-0.6 * half..0.6 * half),
        rng.random_range(-PI..PI),
        rng.random_range(-max_tilt..max_tilt),
        rng.random_range(-max_tilt..max_tilt),
    )
}
