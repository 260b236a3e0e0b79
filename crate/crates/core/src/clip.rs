//! Clipping a hull by the free surface and integrating over the result.
//!
//! Clipping happens in body coordinates against the plane
//! `zeta + k3 . x = 0`, where `k3` is the downward vertical in body
//! components. The depth `zeta + k3 . x` is positive below the surface.
//!
//! Intersection points are keyed by the mesh edge they lie on, so the two
//! triangles sharing an edge produce bit-identical points and the waterline
//! segments chain into closed loops without any floating-point matching.
//! Vertices within the snapping tolerance of the plane are classified as
//! submerged (depth `+0`), which is the limit of a vanishingly small
//! downward shift of the body.

use std::collections::HashMap;

use nalgebra::{Matrix3, Point2, Vector3};

use crate::error::{Error, Result};
use crate::kinematics::{k3_body, Pose};
use crate::mesh::{HullMesh, MomentAccumulator};
use crate::polygon;

/// The free surface expressed in body coordinates: `offset + normal . x = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaterPlane {
    /// Body components of `k3` (unit, pointing down).
    pub normal: Vector3<f64>,
    /// `zeta`, the depth of `G`.
    pub offset: f64,
}

impl WaterPlane {
    pub fn from_pose(pose: &Pose) -> Self {
        Self {
            normal: k3_body(pose),
            offset: pose.zeta,
        }
    }

    pub fn depth(&self, x: &Vector3<f64>) -> f64 {
        self.offset + self.normal.dot(x)
    }

    /// Orthogonal projection of a body point onto the plane.
    pub fn project(&self, x: &Vector3<f64>) -> Vector3<f64> {
        x - self.depth(x) * self.normal
    }

    /// Orthonormal in-plane basis `(u1, u2)` with `u1 x u2 = -normal`, and
    /// `u1` as close to `e1` as possible.
    pub fn basis(&self) -> (Vector3<f64>, Vector3<f64>) {
        let n = self.normal;
        let mut u1 = Vector3::x() - n.x * n;
        if u1.norm_squared() < 1e-12 {
            u1 = Vector3::y() - n.y * n;
        }
        let u1 = u1.normalize();
        let u2 = (-n).cross(&u1);
        (u1, u2)
    }
}

/// The submerged part of a hull: clipped boundary triangles plus the
/// waterplane caps closing them.
#[derive(Debug, Clone, PartialEq)]
pub struct SubmergedSolid {
    pub hull_triangles: Vec<[Vector3<f64>; 3]>,
    /// Closed loops in the waterplane, ordered so their normal is `-k3`
    /// (outward from the submerged region). Loops bounding holes in the
    /// waterplane run the other way and contribute negative area.
    pub cap_polygons: Vec<Vec<Vector3<f64>>>,
    pub plane: WaterPlane,
}

/// Volume and first moment `int_D x dv` of the submerged region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubmergedVolume {
    pub volume: f64,
    pub first: Vector3<f64>,
}

impl SubmergedVolume {
    /// Buoyancy center in body coordinates; `None` for an empty solid.
    pub fn buoyancy_center(&self) -> Option<Vector3<f64>> {
        (self.volume > 0.0).then(|| self.first / self.volume)
    }
}

/// Waterplane integrals about the body origin: `int_A dS`, `int_A x dS`,
/// `int_A x x^T dS`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapIntegrals {
    pub area: f64,
    pub first: Vector3<f64>,
    pub second: Matrix3<f64>,
}

/// Area, floating center and second-moment tensor of the waterplane,
/// relative to the projection `g_bar` of a reference point onto it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaterplaneProperties {
    pub area: f64,
    /// Projection of the reference point onto the waterplane.
    pub g_bar: Vector3<f64>,
    /// `C - g_bar` in body components.
    pub center_offset: Vector3<f64>,
    /// `e1` component of `C - g_bar`.
    pub x_c: f64,
    /// `e2` component of `C - g_bar`.
    pub y_c: f64,
    /// `int_A (P - g_bar) (P - g_bar)^T dS` in body axes.
    pub second: Matrix3<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct EdgeKey(usize, usize);

impl EdgeKey {
    fn new(a: usize, b: usize) -> Self {
        if a < b {
            Self(a, b)
        } else {
            Self(b, a)
        }
    }
}

/// Clips the hull at `pose` to its submerged part.
pub fn clip_by_waterplane(mesh: &HullMesh, pose: &Pose) -> Result<SubmergedSolid> {
    if !pose.is_finite() {
        return Err(Error::InvalidParameter(format!("pose is not finite: {pose:?}")));
    }
    let plane = WaterPlane::from_pose(pose);
    clip_by_plane(mesh, plane)
}

pub(crate) fn clip_by_plane(mesh: &HullMesh, plane: WaterPlane) -> Result<SubmergedSolid> {
    let vertices = mesh.vertices();
    let snap = mesh.tolerances().plane_snap * mesh.diameter();
    let depth: Vec<f64> = vertices
        .iter()
        .map(|v| {
            let d = plane.depth(v);
            if d.abs() < snap {
                0.0
            } else {
                d
            }
        })
        .collect();
    let inside: Vec<bool> = depth.iter().map(|&d| d >= 0.0).collect();

    let mut solid = SubmergedSolid {
        hull_triangles: Vec::new(),
        cap_polygons: Vec::new(),
        plane,
    };
    if inside.iter().all(|&s| !s) {
        return Ok(solid);
    }
    if inside.iter().all(|&s| s) {
        solid.hull_triangles = (0..mesh.triangles().len()).map(|t| mesh.triangle(t)).collect();
        return Ok(solid);
    }

    let mut points: HashMap<EdgeKey, Vector3<f64>> = HashMap::new();
    let mut crossing = |a: usize, b: usize| -> (EdgeKey, Vector3<f64>) {
        let key = EdgeKey::new(a, b);
        let p = *points.entry(key).or_insert_with(|| {
            let (i, j) = (key.0, key.1);
            let t = depth[i] / (depth[i] - depth[j]);
            vertices[i] + t * (vertices[j] - vertices[i])
        });
        (key, p)
    };

    // Waterline segments run from the entry point to the exit point of each
    // cut triangle, opposite to the clipped polygon's on-plane edge.
    let mut segments: Vec<(EdgeKey, EdgeKey)> = Vec::new();
    let mut clipped: Vec<Vector3<f64>> = Vec::with_capacity(4);
    for tri in mesh.triangles() {
        let n_in = tri.iter().filter(|&&i| inside[i]).count();
        match n_in {
            0 => continue,
            3 => {
                solid.hull_triangles.push(tri.map(|i| vertices[i]));
                continue;
            }
            _ => {}
        }
        clipped.clear();
        let (mut entry, mut exit) = (None, None);
        for k in 0..3 {
            let (i, j) = (tri[k], tri[(k + 1) % 3]);
            if inside[i] {
                clipped.push(vertices[i]);
            }
            if inside[i] != inside[j] {
                let (key, p) = crossing(i, j);
                clipped.push(p);
                if inside[i] {
                    exit = Some(key);
                } else {
                    entry = Some(key);
                }
            }
        }
        for k in 1..clipped.len() - 1 {
            let t = [clipped[0], clipped[k], clipped[k + 1]];
            if (t[1] - t[0]).cross(&(t[2] - t[0])) != Vector3::zeros() {
                solid.hull_triangles.push(t);
            }
        }
        match (entry, exit) {
            (Some(a), Some(b)) => segments.push((a, b)),
            _ => unreachable!("a cut triangle has one entry and one exit"),
        }
    }

    let mut next: HashMap<EdgeKey, EdgeKey> = HashMap::with_capacity(segments.len());
    for &(a, b) in &segments {
        if next.insert(a, b).is_some() {
            return Err(Error::ClipDegenerate(format!("edge ({}, {}) starts two waterline segments", a.0, a.1)));
        }
    }
    let mut visited: HashMap<EdgeKey, bool> = HashMap::with_capacity(segments.len());
    for &(start, _) in &segments {
        if visited.contains_key(&start) {
            continue;
        }
        let mut ring: Vec<Vector3<f64>> = Vec::new();
        let mut key = start;
        loop {
            visited.insert(key, true);
            let p = points[&key];
            if ring.last() != Some(&p) {
                ring.push(p);
            }
            key = match next.get(&key) {
                Some(&k) => k,
                None => {
                    return Err(Error::ClipDegenerate(format!(
                        "waterline stops at edge ({}, {})",
                        key.0, key.1
                    )))
                }
            };
            if key == start {
                break;
            }
            if visited.contains_key(&key) {
                return Err(Error::ClipDegenerate(format!("waterline revisits edge ({}, {})", key.0, key.1)));
            }
        }
        while ring.len() > 1 && ring.first() == ring.last() {
            ring.pop();
        }
        if ring.len() >= 3 {
            solid.cap_polygons.push(ring);
        }
    }
    Ok(solid)
}

impl SubmergedSolid {
    pub fn is_empty(&self) -> bool {
        self.hull_triangles.is_empty() && self.cap_polygons.is_empty()
    }

    /// Fan triangles of each cap loop; signed, so valid for any loop shape.
    fn cap_fans(&self) -> impl Iterator<Item = [Vector3<f64>; 3]> + '_ {
        self.cap_polygons
            .iter()
            .flat_map(|ring| (1..ring.len() - 1).map(move |k| [ring[0], ring[k], ring[k + 1]]))
    }

    /// Volume and first moments by the divergence theorem over hull
    /// triangles and caps.
    pub fn volume_and_first_moments(&self) -> SubmergedVolume {
        let mut acc = MomentAccumulator::default();
        for [a, b, c] in self.hull_triangles.iter().copied().chain(self.cap_fans()) {
            acc.add_triangle_first(&a, &b, &c);
        }
        let m = acc.finish();
        SubmergedVolume {
            volume: m.volume,
            first: m.first,
        }
    }

    /// Flux of the constant fields `e1, e2, e3` through the closed boundary
    /// (the vector area). Vanishes for a closed surface.
    pub fn closure_flux(&self) -> Vector3<f64> {
        self.hull_triangles
            .iter()
            .copied()
            .chain(self.cap_fans())
            .map(|[a, b, c]| 0.5 * (b - a).cross(&(c - a)))
            .sum()
    }

    /// Waterplane integrals about the body origin, from 3D triangle formulas.
    pub fn cap_integrals(&self) -> CapIntegrals {
        let up = -self.plane.normal;
        let mut out = CapIntegrals {
            area: 0.0,
            first: Vector3::zeros(),
            second: Matrix3::zeros(),
        };
        for [a, b, c] in self.cap_fans() {
            let s = 0.5 * (b - a).cross(&(c - a)).dot(&up);
            let sum = a + b + c;
            out.area += s;
            out.first += s / 3.0 * sum;
            out.second += s / 12.0 * (a * a.transpose() + b * b.transpose() + c * c.transpose() + sum * sum.transpose());
        }
        out
    }

    /// Area, floating center and second moments of the waterplane relative
    /// to the projection of `reference` onto it, via planar shoelace moments.
    pub fn waterplane_properties(&self, reference: &Vector3<f64>) -> WaterplaneProperties {
        let g_bar = self.plane.project(reference);
        let mut props = WaterplaneProperties {
            area: 0.0,
            g_bar,
            center_offset: Vector3::zeros(),
            x_c: 0.0,
            y_c: 0.0,
            second: Matrix3::zeros(),
        };
        if self.cap_polygons.is_empty() {
            return props;
        }
        let (u1, u2) = self.plane.basis();
        let mut first = nalgebra::Vector2::zeros();
        let mut second = nalgebra::Matrix2::zeros();
        for ring in &self.cap_polygons {
            let pts: Vec<Point2<f64>> = ring
                .iter()
                .map(|p| {
                    let r = p - g_bar;
                    Point2::new(r.dot(&u1), r.dot(&u2))
                })
                .collect();
            let m = polygon::moments_unchecked(&pts, &Point2::origin());
            props.area += m.area;
            first += m.first;
            second += m.second;
        }
        if props.area != 0.0 {
            props.center_offset = (first.x * u1 + first.y * u2) / props.area;
        }
        props.x_c = props.center_offset.x;
        props.y_c = props.center_offset.y;
        let basis = nalgebra::Matrix3x2::from_columns(&[u1, u2]);
        props.second = basis * second * basis.transpose();
        props
    }

    /// `int_A (depth(x) - shift)^2 dS`, integrated exactly per cap triangle
    /// from the vertex depths. With `shift = 0` the integrand vanishes on the
    /// waterplane.
    pub fn cap_depth_square_integral(&self, shift: f64) -> f64 {
        let up = -self.plane.normal;
        self.cap_fans()
            .map(|[a, b, c]| {
                let s = 0.5 * (b - a).cross(&(c - a)).dot(&up);
                let [f0, f1, f2] = [a, b, c].map(|p| self.plane.depth(&p) - shift);
                s / 6.0 * (f0 * f0 + f1 * f1 + f2 * f2 + f0 * f1 + f1 * f2 + f2 * f0)
            })
            .sum()
    }

    /// Triangulated closed surface for export. Caps are ear-clipped.
    pub fn to_triangles(&self) -> Vec<[Vector3<f64>; 3]> {
        let mut out = self.hull_triangles.clone();
        let (u1, u2) = self.plane.basis();
        for ring in &self.cap_polygons {
            let pts: Vec<Point2<f64>> = ring.iter().map(|p| Point2::new(p.dot(&u1), p.dot(&u2))).collect();
            for [i, j, k] in ear_clip(&pts) {
                out.push([ring[i], ring[j], ring[k]]);
            }
        }
        out
    }
}

/// Ear clipping of a simple polygon; keeps the input orientation. Falls
/// back to a fan when no ear can be found (degenerate input).
fn ear_clip(pts: &[Point2<f64>]) -> Vec<[usize; 3]> {
    let n = pts.len();
    let area2: f64 = (0..n)
        .map(|i| {
            let (p, q) = (pts[i], pts[(i + 1) % n]);
            p.x * q.y - q.x * p.y
        })
        .sum();
    let sign = if area2 >= 0.0 { 1.0 } else { -1.0 };
    let cross = |a: usize, b: usize, c: usize| {
        let (a, b, c) = (pts[a], pts[b], pts[c]);
        sign * ((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x))
    };
    let mut idx: Vec<usize> = (0..n).collect();
    let mut out = Vec::with_capacity(n.saturating_sub(2));
    while idx.len() > 3 {
        let m = idx.len();
        let ear = (0..m).find(|&k| {
            let (a, b, c) = (idx[(k + m - 1) % m], idx[k], idx[(k + 1) % m]);
            if cross(a, b, c) <= 0.0 {
                return false;
            }
            idx.iter()
                .filter(|&&p| p != a && p != b && p != c)
                .all(|&p| !(cross(a, b, p) >= 0.0 && cross(b, c, p) >= 0.0 && cross(c, a, p) >= 0.0))
        });
        match ear {
            Some(k) => {
                let m = idx.len();
                out.push([idx[(k + m - 1) % m], idx[k], idx[(k + 1) % m]]);
                idx.remove(k);
            }
            None => {
                for k in 1..idx.len() - 1 {
                    out.push([idx[0], idx[k], idx[k + 1]]);
                }
                return out;
            }
        }
    }
    out.push([idx[0], idx[1], idx[2]]);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;

    fn cube() -> HullMesh {
        shapes::cuboid(1.0, 1.0, 1.0)
    }

    #[test]
    fn half_submerged_cube() {
        let solid = clip_by_waterplane(&cube(), &Pose::default()).unwrap();
        assert_eq!(solid.cap_polygons.len(), 1);
        let v = solid.volume_and_first_moments();
        assert!((v.volume - 0.5).abs() < 1e-15);
        let b = v.buoyancy_center().unwrap();
        assert!((b - Vector3::new(0.0, 0.0, 0.25)).norm() < 1e-15);
        for p in &solid.cap_polygons[0] {
            assert!(p.z.abs() < 1e-15);
        }
        for t in &solid.hull_triangles {
            assert!(t.iter().all(|p| p.z >= 0.0));
        }
    }

    #[test]
    fn fully_submerged_cube_has_no_cap() {
        let solid = clip_by_waterplane(&cube(), &Pose::restoring(0.6, 0.0, 0.0)).unwrap();
        assert!(solid.cap_polygons.is_empty());
        assert_eq!(solid.hull_triangles.len(), 12);
        let v = solid.volume_and_first_moments();
        assert!((v.volume - 1.0).abs() < 1e-15);
        assert!(v.buoyancy_center().unwrap().norm() < 1e-15);
    }

    #[test]
    fn emerged_cube_is_empty() {
        let solid = clip_by_waterplane(&cube(), &Pose::restoring(-0.9, 0.1, 0.2)).unwrap();
        assert!(solid.is_empty());
        let v = solid.volume_and_first_moments();
        assert_eq!(v.volume, 0.0);
        assert!(v.buoyancy_center().is_none());
        let wp = solid.waterplane_properties(&Vector3::zeros());
        assert_eq!(wp.area, 0.0);
        assert_eq!(wp.second, Matrix3::zeros());
    }

    #[test]
    fn slab_oracle_at_quarter_depth() {
        // Level box: the submerged part is x3 in [-zeta, 0.5].
        let solid = clip_by_waterplane(&cube(), &Pose::restoring(0.25, 0.0, 0.0)).unwrap();
        let v = solid.volume_and_first_moments();
        assert!((v.volume - 0.75).abs() < 1e-15);
        assert!((v.buoyancy_center().unwrap() - Vector3::new(0.0, 0.0, 0.125)).norm() < 1e-15);
        let wp = solid.waterplane_properties(&Vector3::zeros());
        assert!((wp.area - 1.0).abs() < 1e-15);
    }

    #[test]
    fn waterplane_of_half_cube() {
        let solid = clip_by_waterplane(&cube(), &Pose::default()).unwrap();
        let wp = solid.waterplane_properties(&Vector3::zeros());
        assert!((wp.area - 1.0).abs() < 1e-15);
        assert!(wp.x_c.abs() < 1e-15 && wp.y_c.abs() < 1e-15);
        let expected = Matrix3::from_diagonal(&Vector3::new(1.0 / 12.0, 1.0 / 12.0, 0.0));
        assert!((wp.second - expected).amax() < 1e-15);
    }

    #[test]
    fn waterplane_of_barge() {
        let barge = shapes::cuboid(2.0, 1.0, 0.5);
        let solid = clip_by_waterplane(&barge, &Pose::default()).unwrap();
        let wp = solid.waterplane_properties(&Vector3::zeros());
        assert!((wp.second[(0, 0)] - 2.0 / 3.0).abs() < 1e-15);
        assert!((wp.second[(1, 1)] - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn deck_exactly_at_waterline_counts_as_submerged() {
        let solid = clip_by_waterplane(&cube(), &Pose::restoring(0.5, 0.0, 0.0)).unwrap();
        assert!(solid.cap_polygons.is_empty());
        assert!((solid.volume_and_first_moments().volume - 1.0).abs() < 1e-15);
    }

    #[test]
    fn tilted_cap_is_planar_and_closed() {
        let pose = Pose::restoring(0.1, 0.3, -0.45);
        let solid = clip_by_waterplane(&cube(), &pose).unwrap();
        assert_eq!(solid.cap_polygons.len(), 1);
        for p in &solid.cap_polygons[0] {
            assert!(solid.plane.depth(p).abs() < 1e-15);
        }
        assert!(solid.closure_flux().norm() < 1e-15);
        let wp = solid.waterplane_properties(&Vector3::zeros());
        assert!((wp.second * solid.plane.normal).norm() < 1e-15);
    }

    #[test]
    fn the_two_waterplane_routes_agree() {
        let pose = Pose::restoring(0.05, -0.2, 0.35);
        let solid = clip_by_waterplane(&cube(), &pose).unwrap();
        let direct = solid.cap_integrals();
        let wp = solid.waterplane_properties(&Vector3::zeros());
        assert!((direct.area - wp.area).abs() < 1e-14);
        let first = wp.area * (wp.g_bar + wp.center_offset);
        assert!((direct.first - first).norm() < 1e-14);
        let g = wp.g_bar;
        let c = wp.center_offset * wp.area;
        let second = wp.second + wp.area * g * g.transpose() + g * c.transpose() + c * g.transpose();
        assert!((direct.second - second).amax() < 1e-14);
    }

    #[test]
    fn twin_hulls_give_two_caps() {
        let a = shapes::cuboid(2.0, 0.4, 0.5).translated(&Vector3::new(0.0, 0.8, 0.0)).unwrap();
        let b = shapes::cuboid(2.0, 0.4, 0.5).translated(&Vector3::new(0.0, -0.8, 0.0)).unwrap();
        let cat = shapes::merge(&[a, b]);
        let solid = clip_by_waterplane(&cat, &Pose::default()).unwrap();
        assert_eq!(solid.cap_polygons.len(), 2);
        let wp = solid.waterplane_properties(&Vector3::zeros());
        assert!((wp.area - 1.6).abs() < 1e-14);
        // Two 2 x 0.4 strips centered at x2 = +/-0.8.
        let s22 = 2.0 * (2.0 * 0.4f64.powi(3) / 12.0 + 0.8 * 0.8 * 0.8);
        assert!((wp.second[(1, 1)] - s22).abs() < 1e-14);
    }

    #[test]
    fn exported_triangles_close_the_solid() {
        let pose = Pose::restoring(0.1, 0.25, 0.4);
        let solid = clip_by_waterplane(&shapes::v_hull(3.0, 1.0, 0.3, 0.6), &pose).unwrap();
        let tris = solid.to_triangles();
        let flux: Vector3<f64> = tris.iter().map(|[a, b, c]| 0.5 * (b - a).cross(&(c - a))).sum();
        assert!(flux.norm() < 1e-14);
        let six_v: f64 = tris.iter().map(|[a, b, c]| a.dot(&b.cross(c))).sum();
        assert!((six_v / 6.0 - solid.volume_and_first_moments().volume).abs() < 1e-14);
    }

    #[test]
    fn depth_square_integral() {
        let solid = clip_by_waterplane(&cube(), &Pose::default()).unwrap();
        assert!(solid.cap_depth_square_integral(0.0).abs() < 1e-30);
        let h = 0.3;
        assert!((solid.cap_depth_square_integral(h) - h * h).abs() < 1e-15);
    }
}
