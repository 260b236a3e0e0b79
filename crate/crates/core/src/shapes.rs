//! Procedural hull meshes: boxes, prisms, ellipsoids and radial blobs.
//!
//! All shapes are returned as validated [`HullMesh`]es. Shapes whose
//! vertex set is mirror-symmetric about `x2 = 0` carry the symmetry flag.

use std::f64::consts::PI;

use nalgebra::Vector3;

use crate::mesh::{HullMesh, MeshTolerances};

/// Axis-aligned box centered at the origin.
pub fn cuboid(lx: f64, ly: f64, lz: f64) -> HullMesh {
    let (hy, hz) = (0.5 * ly, 0.5 * lz);
    prism(lx, &[(-hy, -hz), (hy, -hz), (hy, hz), (-hy, hz)])
}

/// Extrusion along `e1` (length `length`, centered) of a convex section
/// given as `(x2, x3)` points.
pub fn prism(length: f64, section: &[(f64, f64)]) -> HullMesh {
    let n = section.len();
    assert!(n >= 3, "prism section needs at least three points");
    let half = 0.5 * length;
    let mut vertices = Vec::with_capacity(2 * n);
    for &(y, z) in section {
        vertices.push(Vector3::new(half, y, z));
    }
    for &(y, z) in section {
        vertices.push(Vector3::new(-half, y, z));
    }
    let f = |k: usize| k % n;
    let b = |k: usize| n + k % n;
    let mut triangles = Vec::with_capacity(4 * n);
    for k in 1..n - 1 {
        triangles.push([f(0), f(k), f(k + 1)]);
        triangles.push([b(0), b(k + 1), b(k)]);
    }
    for k in 0..n {
        triangles.push([f(k), b(k), b(k + 1)]);
        triangles.push([f(k), b(k + 1), f(k + 1)]);
    }
    let symmetric = section
        .iter()
        .all(|&(y, z)| section.iter().any(|&(y2, z2)| y2 == -y && z2 == z));
    finish(vertices, triangles, symmetric)
}

/// Triangular-section prism with its keel (apex) pointing down (`+x3`).
///
/// The deck sits at `x3 = -deck_height` and the keel at `x3 = keel_depth`.
pub fn v_hull(length: f64, beam: f64, deck_height: f64, keel_depth: f64) -> HullMesh {
    let hb = 0.5 * beam;
    prism(length, &[(-hb, -deck_height), (0.0, keel_depth), (hb, -deck_height)])
}

/// Latitude/longitude tessellation of an ellipsoid with semi-axes `radii`,
/// poles on `+/- e3`. The polytope is convex.
pub fn ellipsoid(radii: Vector3<f64>, stacks: usize, slices: usize) -> HullMesh {
    radial_surface(stacks, slices, |dir| dir.component_mul(&radii))
}

/// Star-shaped closed surface `r(d) d` over the unit sphere, tessellated on
/// a latitude/longitude grid. `surface` maps a unit direction to the surface
/// point in that direction.
pub fn radial_surface(
    stacks: usize,
    slices: usize,
    surface: impl Fn(Vector3<f64>) -> Vector3<f64>,
) -> HullMesh {
    assert!(stacks >= 2 && slices >= 3);
    let mut vertices = Vec::with_capacity(2 + (stacks - 1) * slices);
    vertices.push(surface(Vector3::new(0.0, 0.0, -1.0)));
    for i in 1..stacks {
        let polar = PI * i as f64 / stacks as f64;
        let (sp, cp) = polar.sin_cos();
        for j in 0..slices {
            let az = 2.0 * PI * j as f64 / slices as f64;
            let (sa, ca) = az.sin_cos();
            vertices.push(surface(Vector3::new(sp * ca, sp * sa, -cp)));
        }
    }
    vertices.push(surface(Vector3::new(0.0, 0.0, 1.0)));
    let bottom = vertices.len() - 1;
    let ring = |i: usize, j: usize| 1 + (i - 1) * slices + j % slices;

    let mut triangles = Vec::new();
    for j in 0..slices {
        triangles.push([0, ring(1, j + 1), ring(1, j)]);
    }
    for i in 1..stacks - 1 {
        for j in 0..slices {
            triangles.push([ring(i, j), ring(i, j + 1), ring(i + 1, j + 1)]);
            triangles.push([ring(i, j), ring(i + 1, j + 1), ring(i + 1, j)]);
        }
    }
    for j in 0..slices {
        triangles.push([bottom, ring(stacks - 1, j), ring(stacks - 1, j + 1)]);
    }
    let mesh = finish(vertices, triangles, false);
    let symmetric = mesh.detect_symmetry();
    mesh.with_symmetry(symmetric).expect("symmetry was just detected")
}

/// Concatenates disjoint closed meshes into one body (e.g. twin hulls).
pub fn merge(parts: &[HullMesh]) -> HullMesh {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for part in parts {
        let base = vertices.len();
        vertices.extend_from_slice(part.vertices());
        triangles.extend(part.triangles().iter().map(|t| t.map(|i| i + base)));
    }
    let mesh = finish(vertices, triangles, false);
    let symmetric = mesh.detect_symmetry();
    mesh.with_symmetry(symmetric).expect("symmetry was just detected")
}

fn finish(vertices: Vec<Vector3<f64>>, mut triangles: Vec<[usize; 3]>, symmetric: bool) -> HullMesh {
    let six_volume: f64 = triangles
        .iter()
        .map(|t| vertices[t[0]].dot(&vertices[t[1]].cross(&vertices[t[2]])))
        .sum();
    if six_volume < 0.0 {
        for t in &mut triangles {
            t.swap(1, 2);
        }
    }
    HullMesh::with_options(vertices, triangles, symmetric, MeshTolerances::default())
        .expect("procedural shape must be a valid closed mesh")
}
