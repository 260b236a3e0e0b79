//! Area moments of simple planar polygons (shoelace family).

use nalgebra::{Matrix2, Point2, Vector2};

use crate::error::{Error, Result};

/// Area, centroid and second moments of a polygon.
///
/// `area` is signed: positive for counter-clockwise vertex order.
/// `second` is `int (p - ref)(p - ref)^T dA` about the reference point
/// passed to [`polygon_moments_about`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolygonMoments {
    pub area: f64,
    pub centroid: Point2<f64>,
    /// `int (p - ref) dA`
    pub first: Vector2<f64>,
    pub second: Matrix2<f64>,
}

/// Moments about the origin, after checking that the polygon is simple.
pub fn polygon_moments(points: &[Point2<f64>]) -> Result<PolygonMoments> {
    polygon_moments_about(points, &Point2::origin())
}

/// Moments about `reference`, after checking that the polygon is simple.
pub fn polygon_moments_about(points: &[Point2<f64>], reference: &Point2<f64>) -> Result<PolygonMoments> {
    check_simple(points)?;
    Ok(moments_unchecked(points, reference))
}

/// Shoelace moments with no validation. Exact for any closed polygon in the
/// signed (winding-number weighted) sense.
pub(crate) fn moments_unchecked(points: &[Point2<f64>], reference: &Point2<f64>) -> PolygonMoments {
    let n = points.len();
    let mut a2 = 0.0;
    let (mut sx, mut sy) = (0.0, 0.0);
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let p = points[i] - reference;
        let q = points[(i + 1) % n] - reference;
        let cross = p.x * q.y - q.x * p.y;
        a2 += cross;
        sx += (p.x + q.x) * cross;
        sy += (p.y + q.y) * cross;
        sxx += (p.x * p.x + p.x * q.x + q.x * q.x) * cross;
        syy += (p.y * p.y + p.y * q.y + q.y * q.y) * cross;
        sxy += (p.x * q.y + 2.0 * p.x * p.y + 2.0 * q.x * q.y + q.x * p.y) * cross;
    }
    let area = 0.5 * a2;
    let first = Vector2::new(sx, sy) / 6.0;
    let centroid = if area != 0.0 {
        reference + first / area
    } else {
        *reference
    };
    let second = Matrix2::new(sxx / 12.0, sxy / 24.0, sxy / 24.0, syy / 12.0);
    PolygonMoments {
        area,
        centroid,
        first,
        second,
    }
}

/// Rejects polygons whose edges cross or fold back onto each other.
/// Zero-length edges (repeated points) are ignored.
pub fn check_simple(points: &[Point2<f64>]) -> Result<()> {
    let mut pts: Vec<Point2<f64>> = Vec::with_capacity(points.len());
    for p in points {
        if pts.last() != Some(p) {
            pts.push(*p);
        }
    }
    while pts.len() > 1 && pts.first() == pts.last() {
        pts.pop();
    }
    let n = pts.len();
    if n < 3 {
        return Err(Error::InvalidParameter("polygon needs at least three distinct points".into()));
    }
    let edge = |i: usize| (pts[i], pts[(i + 1) % n]);

    // Adjacent edges must not reverse direction along a common line.
    for i in 0..n {
        let (a, b) = edge(i);
        let (_, c) = edge((i + 1) % n);
        let (u, v) = (b - a, c - b);
        if orient(&a, &b, &c) == 0.0 && u.dot(&v) < 0.0 {
            return Err(Error::SelfIntersecting(i, (i + 1) % n));
        }
    }
    for i in 0..n {
        for j in i + 2..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            let (a, b) = edge(i);
            let (c, d) = edge(j);
            if segments_intersect(&a, &b, &c, &d) {
                return Err(Error::SelfIntersecting(i, j));
            }
        }
    }
    Ok(())
}

fn orient(a: &Point2<f64>, b: &Point2<f64>, c: &Point2<f64>) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

fn on_segment(a: &Point2<f64>, b: &Point2<f64>, p: &Point2<f64>) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

fn segments_intersect(a: &Point2<f64>, b: &Point2<f64>, c: &Point2<f64>, d: &Point2<f64>) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}
