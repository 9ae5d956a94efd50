//! Small planar geometry toolkit shared by the mesh, planner and coverage code.

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, o: Point2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Point2) -> f64 {
        (self - o).norm()
    }

    pub fn midpoint(self, o: Point2) -> Point2 {
        Point2::new(0.5 * (self.x + o.x), 0.5 * (self.y + o.y))
    }

    /// Unit vector, or `None` for a (near) zero vector.
    pub fn normalized(self) -> Option<Point2> {
        let n = self.norm();
        (n > 1e-15).then(|| Point2::new(self.x / n, self.y / n))
    }

    /// Rotated by +90 degrees.
    pub fn perp(self) -> Point2 {
        Point2::new(-self.y, self.x)
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, k: f64) -> Point2 {
        Point2::new(self.x * k, self.y * k)
    }
}

/// Twice the signed area of triangle (a, b, c); positive when counter-clockwise.
pub fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
    (b - a).cross(c - a)
}

/// Signed shoelace area, positive for counter-clockwise rings.
pub fn signed_area(ring: &[Point2]) -> f64 {
    let n = ring.len();
    let mut acc = 0.0;
    for i in 0..n {
        acc += ring[i].cross(ring[(i + 1) % n]);
    }
    0.5 * acc
}

pub fn centroid(points: &[Point2]) -> Point2 {
    let n = points.len() as f64;
    let (sx, sy) = points.iter().fold((0.0, 0.0), |(sx, sy), p| (sx + p.x, sy + p.y));
    Point2::new(sx / n, sy / n)
}

/// Even-odd point-in-polygon test over one or more rings.
pub fn point_in_rings<'a>(p: Point2, rings: impl IntoIterator<Item = &'a [Point2]>) -> bool {
    let mut inside = false;
    for ring in rings {
        let n = ring.len();
        let mut j = n - 1;
        for i in 0..n {
            let (a, b) = (ring[i], ring[j]);
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
                if p.x < x {
                    inside = !inside;
                }
            }
            j = i;
        }
    }
    inside
}

pub fn point_in_polygon(p: Point2, ring: &[Point2]) -> bool {
    point_in_rings(p, [ring])
}

/// True when the open segments (a, b) and (c, d) cross at a single interior point.
/// Touching at endpoints and collinear overlap do not count.
pub fn segments_cross(a: Point2, b: Point2, c: Point2, d: Point2) -> bool {
    let o1 = orient(a, b, c);
    let o2 = orient(a, b, d);
    let o3 = orient(c, d, a);
    let o4 = orient(c, d, b);
    o1 * o2 < 0.0 && o3 * o4 < 0.0
}

/// Parameter `t` along (a, b) of the crossing with (c, d), if the segments cross.
pub fn segment_crossing_param(a: Point2, b: Point2, c: Point2, d: Point2) -> Option<f64> {
    if !segments_cross(a, b, c, d) {
        return None;
    }
    let r = b - a;
    let s = d - c;
    let denom = r.cross(s);
    Some((c - a).cross(s) / denom)
}

/// Distance from `p` to the closed segment (a, b).
pub fn point_segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.dist(a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.dist(a + ab * t)
}

/// Axis-aligned bounding box `(min, max)` of a point set.
pub fn bbox(points: &[Point2]) -> (Point2, Point2) {
    let mut lo = Point2::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in points {
        lo.x = lo.x.min(p.x);
        lo.y = lo.y.min(p.y);
        hi.x = hi.x.max(p.x);
        hi.y = hi.y.max(p.y);
    }
    (lo, hi)
}

/// True when no two non-adjacent edges of the closed ring intersect.
pub fn ring_is_simple(ring: &[Point2]) -> bool {
    let n = ring.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        let (a, b) = (ring[i], ring[(i + 1) % n]);
        if a == b {
            return false;
        }
        for j in (i + 1)..n {
            if j == i || (j + 1) % n == i || j == (i + 1) % n {
                continue;
            }
            let (c, d) = (ring[j], ring[(j + 1) % n]);
            if segments_cross(a, b, c, d) || touches(a, b, c, d) {
                return false;
            }
        }
    }
    true
}

// Improper contact between non-adjacent edges: an endpoint lying on the other segment.
fn touches(a: Point2, b: Point2, c: Point2, d: Point2) -> bool {
    let on = |p: Point2, q: Point2, r: Point2| orient(p, q, r) == 0.0 && point_segment_distance(r, p, q) == 0.0;
    on(a, b, c) || on(a, b, d) || on(c, d, a) || on(c, d, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Vec<Point2> {
        vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
        ]
    }

    #[test]
    fn shoelace_orientation() {
        let mut sq = square();
        assert_eq!(signed_area(&sq), 1.0);
        sq.reverse();
        assert_eq!(signed_area(&sq), -1.0);
    }

    #[test]
    fn crossing_excludes_shared_endpoints() {
        let a = Point2::new(0.0, 0.0);
        let b = Point2::new(1.0, 1.0);
        assert!(segments_cross(a, b, Point2::new(0.0, 1.0), Point2::new(1.0, 0.0)));
        assert!(!segments_cross(a, b, b, Point2::new(2.0, 0.0)));
        assert!(!segments_cross(a, b, Point2::new(2.0, 2.0), Point2::new(3.0, 3.0)));
    }

    #[test]
    fn bowtie_is_not_simple() {
        let bowtie = [
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(1.0, 0.0),
            Point2::new(0.0, 1.0),
        ];
        assert!(!ring_is_simple(&bowtie));
        assert!(ring_is_simple(&square()));
    }

    #[test]
    fn ring_with_hole() {
        let outer = vec![
            Point2::new(0.0, 0.0),
            Point2::new(4.0, 0.0),
            Point2::new(4.0, 4.0),
            Point2::new(0.0, 4.0),
        ];
        let hole = vec![
            Point2::new(1.0, 1.0),
            Point2::new(1.0, 3.0),
            Point2::new(3.0, 3.0),
            Point2::new(3.0, 1.0),
        ];
        let rings = [outer.as_slice(), hole.as_slice()];
        assert!(point_in_rings(Point2::new(0.5, 0.5), rings));
        assert!(!point_in_rings(Point2::new(2.0, 2.0), rings));
    }
}
