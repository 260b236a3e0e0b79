//! Watertight hull meshes in body coordinates.

use std::collections::HashMap;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Geometric tolerances, all relative to the mesh diameter (bounding-box diagonal).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MeshTolerances {
    /// Vertices closer than `plane_snap * diameter` to the waterplane are treated as lying on it.
    pub plane_snap: f64,
    /// Triangles with area below `degenerate_area * diameter^2` are rejected.
    pub degenerate_area: f64,
    /// Mirror images must match a vertex within `symmetry * diameter`.
    pub symmetry: f64,
}

impl Default for MeshTolerances {
    fn default() -> Self {
        Self {
            plane_snap: 1e-10,
            degenerate_area: 1e-14,
            symmetry: 1e-9,
        }
    }
}

/// Volume integrals of a closed solid about the body origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeMoments {
    pub volume: f64,
    /// `int x dv`
    pub first: Vector3<f64>,
    /// `int x x^T dv`
    pub second: Matrix3<f64>,
}

/// Mass properties of a uniform-density solid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassProperties {
    pub mass: f64,
    pub centroid: Vector3<f64>,
    /// Inertia tensor about the centroid.
    pub inertia: Matrix3<f64>,
}

/// A validated, watertight, outward-oriented triangle mesh.
///
/// Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct HullMesh {
    vertices: Vec<Vector3<f64>>,
    triangles: Vec<[usize; 3]>,
    symmetric: bool,
    tolerances: MeshTolerances,
    diameter: f64,
    bounds: (Vector3<f64>, Vector3<f64>),
    volume: f64,
}

impl HullMesh {
    /// Validates a mesh with default tolerances and no symmetry claim.
    pub fn new(vertices: Vec<Vector3<f64>>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        Self::with_options(vertices, triangles, false, MeshTolerances::default())
    }

    /// Validates a mesh. When `symmetric` is set the vertex set must be
    /// invariant under `x2 -> -x2`.
    pub fn with_options(
        vertices: Vec<Vector3<f64>>,
        triangles: Vec<[usize; 3]>,
        symmetric: bool,
        tolerances: MeshTolerances,
    ) -> Result<Self> {
        if vertices.is_empty() || triangles.is_empty() {
            return Err(Error::InvalidMesh("mesh has no triangles".into()));
        }
        if let Some(i) = vertices.iter().position(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(Error::InvalidMesh(format!("vertex {i} is not finite")));
        }
        let mut lo = vertices[0];
        let mut hi = vertices[0];
        for v in &vertices {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        let diameter = (hi - lo).norm();
        if diameter <= 0.0 {
            return Err(Error::InvalidMesh("mesh has zero extent".into()));
        }

        let min_area = tolerances.degenerate_area * diameter * diameter;
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&i| i >= vertices.len()) {
                return Err(Error::InvalidMesh(format!("triangle {t} references a missing vertex")));
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::InvalidMesh(format!("triangle {t} repeats a vertex")));
            }
            let [a, b, c] = tri.map(|i| vertices[i]);
            let area = 0.5 * (b - a).cross(&(c - a)).norm();
            if area <= min_area {
                return Err(Error::InvalidMesh(format!(
                    "triangle {t} is degenerate (area {area:e})"
                )));
            }
        }
        check_edge_pairing(&triangles)?;

        let mut mesh = Self {
            vertices,
            triangles,
            symmetric: false,
            tolerances,
            diameter,
            bounds: (lo, hi),
            volume: 0.0,
        };
        let volume = mesh.volume_moments().volume;
        if volume <= 0.0 {
            return Err(Error::InvertedMesh(volume));
        }
        mesh.volume = volume;
        if symmetric {
            if let Some(i) = mesh.first_unmirrored_vertex() {
                return Err(Error::NotSymmetric(i));
            }
            mesh.symmetric = true;
        }
        Ok(mesh)
    }

    /// Builds a mesh from an unindexed triangle list, merging bit-identical
    /// vertices (as found in STL files).
    pub fn from_triangle_soup(
        soup: &[[Vector3<f64>; 3]],
        symmetric: bool,
        tolerances: MeshTolerances,
    ) -> Result<Self> {
        let mut index: HashMap<[u64; 3], usize> = HashMap::new();
        let mut vertices = Vec::new();
        let mut triangles = Vec::with_capacity(soup.len());
        for tri in soup {
            let mut ids = [0usize; 3];
            for (k, v) in tri.iter().enumerate() {
                // Normalize -0.0 so mirrored coordinates weld.
                let key = [v.x, v.y, v.z].map(|c| (c + 0.0).to_bits());
                ids[k] = *index.entry(key).or_insert_with(|| {
                    vertices.push(*v);
                    vertices.len() - 1
                });
            }
            triangles.push(ids);
        }
        Self::with_options(vertices, triangles, symmetric, tolerances)
    }

    pub fn vertices(&self) -> &[Vector3<f64>] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn triangle(&self, t: usize) -> [Vector3<f64>; 3] {
        self.triangles[t].map(|i| self.vertices[i])
    }

    /// Whether the plane `x2 = 0` is a validated symmetry plane.
    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn tolerances(&self) -> &MeshTolerances {
        &self.tolerances
    }

    /// Bounding-box diagonal.
    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn bounds(&self) -> (Vector3<f64>, Vector3<f64>) {
        self.bounds
    }

    /// Extent along `e3`.
    pub fn height(&self) -> f64 {
        self.bounds.1.z - self.bounds.0.z
    }

    /// Enclosed volume.
    pub fn volume(&self) -> f64 {
        self.volume
    }

    /// Checks whether the vertex set is mirror-symmetric about `x2 = 0`.
    pub fn detect_symmetry(&self) -> bool {
        self.first_unmirrored_vertex().is_none()
    }

    /// Returns a copy with the symmetry claim set (validated) or cleared.
    pub fn with_symmetry(&self, symmetric: bool) -> Result<Self> {
        if symmetric {
            if let Some(i) = self.first_unmirrored_vertex() {
                return Err(Error::NotSymmetric(i));
            }
        }
        Ok(Self {
            symmetric,
            ..self.clone()
        })
    }

    pub fn translated(&self, offset: &Vector3<f64>) -> Result<Self> {
        let vertices = self.vertices.iter().map(|v| v + offset).collect();
        Self::with_options(vertices, self.triangles.clone(), false, self.tolerances)
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let vertices = self.vertices.iter().map(|v| v * factor).collect();
        Self::with_options(vertices, self.triangles.clone(), self.symmetric, self.tolerances)
    }

    /// Applies `x -> R x` to every vertex.
    pub fn rotated(&self, rotation: &Matrix3<f64>) -> Result<Self> {
        let vertices = self.vertices.iter().map(|v| rotation * v).collect();
        Self::with_options(vertices, self.triangles.clone(), false, self.tolerances)
    }

    /// Volume, first and second moments of the enclosed solid about the body origin.
    pub fn volume_moments(&self) -> VolumeMoments {
        let mut acc = MomentAccumulator::default();
        for tri in &self.triangles {
            let [a, b, c] = tri.map(|i| self.vertices[i]);
            acc.add_triangle(&a, &b, &c);
        }
        acc.finish()
    }

    /// Mass, centroid and centroidal inertia at uniform density.
    pub fn mass_properties(&self, density: f64) -> MassProperties {
        let m = self.volume_moments();
        let mass = density * m.volume;
        let centroid = m.first / m.volume;
        let inertia_origin = density * (Matrix3::identity() * m.second.trace() - m.second);
        let shift = mass * (Matrix3::identity() * centroid.norm_squared() - centroid * centroid.transpose());
        MassProperties {
            mass,
            centroid,
            inertia: inertia_origin - shift,
        }
    }

    fn first_unmirrored_vertex(&self) -> Option<usize> {
        let tol = self.tolerances.symmetry * self.diameter;
        let cell = tol.max(f64::MIN_POSITIVE) * 4.0;
        let key = |v: &Vector3<f64>| -> [i64; 3] {
            [v.x, v.y, v.z].map(|c| (c / cell).floor() as i64)
        };
        let mut grid: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
        for (i, v) in self.vertices.iter().enumerate() {
            grid.entry(key(v)).or_default().push(i);
        }
        'outer: for (i, v) in self.vertices.iter().enumerate() {
            let mirror = Vector3::new(v.x, -v.y, v.z);
            let k = key(&mirror);
            for dx in -1..=1 {
                for dy in -1..=1 {
                    for dz in -1..=1 {
                        if let Some(ids) = grid.get(&[k[0] + dx, k[1] + dy, k[2] + dz]) {
                            if ids.iter().any(|&j| (self.vertices[j] - mirror).norm() <= tol) {
                                continue 'outer;
                            }
                        }
                    }
                }
            }
            return Some(i);
        }
        None
    }
}

/// Every directed edge must appear exactly once, together with its reverse.
fn check_edge_pairing(triangles: &[[usize; 3]]) -> Result<()> {
    let mut directed: HashMap<(usize, usize), usize> = HashMap::with_capacity(triangles.len() * 3);
    for tri in triangles {
        for k in 0..3 {
            let e = (tri[k], tri[(k + 1) % 3]);
            *directed.entry(e).or_insert(0) += 1;
        }
    }
    let mut edges: Vec<_> = directed.iter().collect();
    edges.sort_unstable();
    for (&(a, b), &count) in edges {
        if count > 1 {
            return Err(Error::NonWatertightMesh(a, b, "is used by more than one triangle"));
        }
        if !directed.contains_key(&(b, a)) {
            return Err(Error::NonWatertightMesh(a, b, "has no opposite half-edge"));
        }
    }
    Ok(())
}

/// Divergence-theorem accumulation of volume integrals over oriented
/// triangles (signed tetrahedra against the origin).
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct MomentAccumulator {
    six_volume: f64,
    first: Vector3<f64>,
    second: Matrix3<f64>,
}

impl MomentAccumulator {
    pub(crate) fn add_triangle(&mut self, a: &Vector3<f64>, b: &Vector3<f64>, c: &Vector3<f64>) {
        let det = a.dot(&b.cross(c));
        self.six_volume += det;
        let sum = a + b + c;
        self.first += det * sum;
        self.second += det * (a * a.transpose() + b * b.transpose() + c * c.transpose() + sum * sum.transpose());
    }

    /// Volume and first moment only; cheaper for the hot path.
    pub(crate) fn add_triangle_first(&mut self, a: &Vector3<f64>, b: &Vector3<f64>, c: &Vector3<f64>) {
        let det = a.dot(&b.cross(c));
        self.six_volume += det;
        self.first += det * (a + b + c);
    }

    pub(crate) fn finish(&self) -> VolumeMoments {
        VolumeMoments {
            volume: self.six_volume / 6.0,
            first: self.first / 24.0,
            second: self.second / 120.0,
        }
    }
}
