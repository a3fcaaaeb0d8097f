//! Convex geometry on the ground plane.
//!
//! Polygons are stored counter-clockwise in the `(x, z)` plane, meaning a
//! positive cross product turns from `+x` toward `+z`. Footprints, clearance
//! dilations and overlap areas used by the collision energy all live here.

use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::math::{sin_cos_deg, Point2, GEOM_EPS};
use crate::scene::ObjectInstance;

/// Segment count of the regular polygon standing in for a clearance disk.
pub const CLEARANCE_SEGMENTS: usize = 128;

/// A convex polygon, counter-clockwise, without repeated or collinear
/// vertices. Fewer than three vertices means a degenerate polygon (a point
/// or a segment, zero area); zero vertices is the empty polygon.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConvexPolygon {
    vertices: Vec<Point2>,
}

impl ConvexPolygon {
    pub fn empty() -> Self {
        ConvexPolygon::default()
    }

    /// Convex hull of arbitrary points.
    pub fn hull(points: &[Point2]) -> Self {
        convex_hull(points)
    }

    /// Axis-aligned rectangle.
    pub fn rect(center: Point2, half_x: f64, half_z: f64) -> Self {
        let c = center;
        ConvexPolygon {
            vertices: alloc::vec![
                Point2::new(c.x - half_x, c.z - half_z),
                Point2::new(c.x + half_x, c.z - half_z),
                Point2::new(c.x + half_x, c.z + half_z),
                Point2::new(c.x - half_x, c.z + half_z),
            ],
        }
    }

    /// Regular `n`-gon with the given circumradius; vertex 0 lies on `+x`.
    pub fn regular(n: usize, center: Point2, circumradius: f64) -> Self {
        assert!(n >= 3, "a regular polygon needs at least 3 sides");
        let vertices = (0..n)
            .map(|k| {
                let (s, c) = sin_cos_deg(360.0 * k as f64 / n as f64);
                Point2::new(center.x + circumradius * c, center.z + circumradius * s)
            })
            .collect();
        ConvexPolygon { vertices }
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// True for points, segments and the empty polygon.
    pub fn is_degenerate(&self) -> bool {
        self.vertices.len() < 3
    }

    pub fn translated(&self, t: Point2) -> Self {
        ConvexPolygon {
            vertices: self.vertices.iter().map(|v| *v + t).collect(),
        }
    }

    pub fn area(&self) -> f64 {
        polygon_area(self)
    }

    pub fn perimeter(&self) -> f64 {
        let n = self.vertices.len();
        if n < 2 {
            return 0.0;
        }
        (0..n)
            .map(|i| self.vertices[i].dist(self.vertices[(i + 1) % n]))
            .sum()
    }

    /// Mean of the vertices. For box footprints this is the box center.
    pub fn vertex_mean(&self) -> Point2 {
        if self.vertices.is_empty() {
            return Point2::default();
        }
        let n = self.vertices.len() as f64;
        let s = self
            .vertices
            .iter()
            .fold(Point2::default(), |acc, v| acc + *v);
        s * (1.0 / n)
    }

    /// Circle around [`vertex_mean`](Self::vertex_mean) reaching the farthest vertex.
    pub fn bounding_circle(&self) -> (Point2, f64) {
        let c = self.vertex_mean();
        let r = self
            .vertices
            .iter()
            .map(|v| v.dist(c))
            .fold(0.0, f64::max);
        (c, r)
    }

    /// Containment with the crate-wide tolerance; boundary points count as inside.
    pub fn contains(&self, p: Point2) -> bool {
        self.max_edge_violation(p) <= GEOM_EPS
    }

    /// Largest distance by which `p` lies outside any edge's supporting line.
    /// Zero or negative when `p` is inside. Degenerate polygons fall back to
    /// the plain distance to their vertices/segment.
    pub fn max_edge_violation(&self, p: Point2) -> f64 {
        let n = self.vertices.len();
        if n < 3 {
            return self.distance_outside(p);
        }
        let mut worst = f64::NEG_INFINITY;
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            let e = b - a;
            let len = e.norm();
            // outward distance is negative cross / |e| for a CCW polygon
            let d = -e.cross(p - a) / len;
            if d > worst {
                worst = d;
            }
        }
        worst
    }

    /// Euclidean distance from `p` to the polygon, zero when inside.
    pub fn distance_outside(&self, p: Point2) -> f64 {
        let n = self.vertices.len();
        match n {
            0 => f64::INFINITY,
            1 => p.dist(self.vertices[0]),
            _ => {
                if n >= 3 && self.max_edge_violation(p) <= 0.0 {
                    return 0.0;
                }
                let edges = if n == 2 { 1 } else { n };
                (0..edges)
                    .map(|i| segment_distance(p, self.vertices[i], self.vertices[(i + 1) % n]))
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }

    fn cmp_key(&self, other: &Self) -> Ordering {
        self.vertices.len().cmp(&other.vertices.len()).then_with(|| {
            for (a, b) in self.vertices.iter().zip(&other.vertices) {
                let o = a.x.total_cmp(&b.x).then(a.z.total_cmp(&b.z));
                if o != Ordering::Equal {
                    return o;
                }
            }
            Ordering::Equal
        })
    }
}

fn segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let e = b - a;
    let l2 = e.dot(e);
    if l2 == 0.0 {
        return p.dist(a);
    }
    let t = ((p - a).dot(e) / l2).clamp(0.0, 1.0);
    p.dist(a + e * t)
}

/// Andrew's monotone chain. Collinear and duplicate points are dropped; all
/// points coincident yields a one-vertex degenerate polygon.
pub fn convex_hull(points: &[Point2]) -> ConvexPolygon {
    let mut pts: Vec<Point2> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.z.total_cmp(&b.z)));
    pts.dedup();
    if pts.len() <= 2 {
        return ConvexPolygon { vertices: pts };
    }
    let mut hull: Vec<Point2> = Vec::with_capacity(pts.len() * 2);
    for pass in 0..2 {
        let start = hull.len();
        let iter: &mut dyn Iterator<Item = &Point2> = if pass == 0 {
            &mut pts.iter()
        } else {
            &mut pts.iter().rev()
        };
        for &p in iter {
            while hull.len() >= start + 2 {
                let a = hull[hull.len() - 2];
                let b = hull[hull.len() - 1];
                if (b - a).cross(p - b) <= 0.0 {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(p);
        }
        hull.pop();
    }
    if hull.len() < 3 {
        // all points collinear: keep the two extremes
        let (first, last) = (pts[0], pts[pts.len() - 1]);
        return ConvexPolygon {
            vertices: alloc::vec![first, last],
        };
    }
    ConvexPolygon { vertices: hull }
}

/// Ground-plane footprint: hull of the eight world corners projected to `(x, z)`.
pub fn footprint(obj: &ObjectInstance) -> ConvexPolygon {
    let pts: Vec<Point2> = obj.world_corners().iter().map(|c| c.ground()).collect();
    convex_hull(&pts)
}

/// Monotone stand-in for the polar angle of a direction, in `[0, 4)`.
fn pseudo_angle(d: Point2) -> f64 {
    if d.z >= 0.0 {
        if d.x >= 0.0 {
            d.z / (d.x + d.z)
        } else {
            1.0 + (-d.x) / (-d.x + d.z)
        }
    } else if d.x < 0.0 {
        2.0 + (-d.z) / (-d.x - d.z)
    } else {
        3.0 + d.x / (d.x - d.z)
    }
}

/// Lowest vertex (min z, then min x) and the edge vectors walking CCW from it.
fn edges_from_lowest(p: &[Point2]) -> (Point2, Vec<Point2>) {
    let n = p.len();
    let lo = (0..n)
        .min_by(|&i, &j| p[i].z.total_cmp(&p[j].z).then(p[i].x.total_cmp(&p[j].x)))
        .unwrap_or(0);
    let edges = (0..n)
        .map(|k| p[(lo + k + 1) % n] - p[(lo + k) % n])
        .collect();
    (p[lo], edges)
}

/// Minkowski sum by merging the two edge sequences in angular order.
/// Handles degenerate operands (points and segments).
pub fn minkowski_sum(p: &ConvexPolygon, q: &ConvexPolygon) -> ConvexPolygon {
    if p.is_empty() || q.is_empty() {
        return ConvexPolygon::empty();
    }
    if p.len() == 1 {
        return q.translated(p.vertices[0]);
    }
    if q.len() == 1 {
        return p.translated(q.vertices[0]);
    }
    let (p0, ep) = edges_from_lowest(&p.vertices);
    let (q0, eq) = edges_from_lowest(&q.vertices);
    let ap: Vec<f64> = ep.iter().map(|e| pseudo_angle(*e)).collect();
    let aq: Vec<f64> = eq.iter().map(|e| pseudo_angle(*e)).collect();

    let mut out = Vec::with_capacity(ep.len() + eq.len());
    let mut cur = p0 + q0;
    let (mut i, mut j) = (0, 0);
    while i < ep.len() || j < eq.len() {
        out.push(cur);
        let take_p = j >= eq.len() || (i < ep.len() && ap[i] <= aq[j]);
        if take_p {
            cur = cur + ep[i];
            i += 1;
        } else {
            cur = cur + eq[j];
            j += 1;
        }
    }
    ConvexPolygon {
        vertices: drop_collinear(out),
    }
}

/// Removes repeated vertices and vertices lying on the segment between
/// their neighbours.
fn drop_collinear(mut v: Vec<Point2>) -> Vec<Point2> {
    let mut changed = true;
    while changed && v.len() >= 3 {
        changed = false;
        let n = v.len();
        let mut keep = Vec::with_capacity(n);
        for i in 0..n {
            let prev = v[(i + n - 1) % n];
            let cur = v[i];
            let next = v[(i + 1) % n];
            let e1 = cur - prev;
            let e2 = next - cur;
            let scale = e1.norm() * e2.norm();
            let straight = e1.dot(e2) >= 0.0 && e1.cross(e2).abs() <= 1e-12 * scale;
            if cur == prev || straight {
                changed = true;
            } else {
                keep.push(cur);
            }
        }
        if keep.len() < 3 {
            // collapsed to a segment or point
            keep.dedup();
            if keep.is_empty() {
                keep.push(v[0]);
            }
            return keep;
        }
        v = keep;
    }
    v
}

/// Dilates `p` by a clearance disk of radius `clearance`, approximated by
/// a polygon inscribed in the circle: the regular
/// [`CLEARANCE_SEGMENTS`]-gon plus one vertex along each outward edge normal
/// of `p`. Those extra vertices make every edge of `p` move out by exactly
/// `clearance`, so the area is `A + P*r + a` with
/// `0.999 * PI * r^2 < a <= PI * r^2`. A clearance of zero returns `p`
/// unchanged.
pub fn dilate(p: &ConvexPolygon, clearance: f64) -> ConvexPolygon {
    if clearance <= 0.0 || clearance.is_nan() {
        return p.clone();
    }
    let mut pts = ConvexPolygon::regular(CLEARANCE_SEGMENTS, Point2::default(), clearance).vertices;
    let n = p.len();
    if n >= 2 {
        for i in 0..n {
            let e = p.vertices[(i + 1) % n] - p.vertices[i];
            let len = e.norm();
            if len > 0.0 {
                // outward normal; vertices run counter-clockwise
                pts.push(Point2::new(e.z, -e.x) * (clearance / len));
            }
        }
    }
    minkowski_sum(p, &convex_hull(&pts))
}

/// Shoelace area; zero for degenerate polygons.
pub fn polygon_area(p: &ConvexPolygon) -> f64 {
    let v = &p.vertices;
    let n = v.len();
    if n < 3 {
        return 0.0;
    }
    let twice: f64 = (0..n).map(|i| v[i].cross(v[(i + 1) % n])).sum();
    (0.5 * twice).max(0.0)
}

/// Sutherland–Hodgman: clips `subject` against every edge of the convex `clip`.
pub fn clip_convex(subject: &ConvexPolygon, clip: &ConvexPolygon) -> Vec<Point2> {
    if subject.is_degenerate() || clip.is_degenerate() {
        return Vec::new();
    }
    let mut out: Vec<Point2> = subject.vertices.clone();
    let c = &clip.vertices;
    for i in 0..c.len() {
        if out.is_empty() {
            break;
        }
        let a = c[i];
        let e = c[(i + 1) % c.len()] - a;
        let input = core::mem::take(&mut out);
        let m = input.len();
        for k in 0..m {
            let cur = input[k];
            let prev = input[(k + m - 1) % m];
            let dc = e.cross(cur - a);
            let dp = e.cross(prev - a);
            if dc >= 0.0 {
                if dp < 0.0 {
                    out.push(prev + (cur - prev) * (dp / (dp - dc)));
                }
                out.push(cur);
            } else if dp >= 0.0 {
                out.push(prev + (cur - prev) * (dp / (dp - dc)));
            }
        }
    }
    out
}

/// Area of `p ∩ q`. Operands are put in a canonical order before clipping,
/// so the result is bitwise symmetric in its arguments.
pub fn intersection_area(p: &ConvexPolygon, q: &ConvexPolygon) -> f64 {
    let (a, b) = if p.cmp_key(q) == Ordering::Greater {
        (q, p)
    } else {
        (p, q)
    };
    let pts = clip_convex(a, b);
    if pts.len() < 3 {
        return 0.0;
    }
    let n = pts.len();
    let twice: f64 = (0..n).map(|i| pts[i].cross(pts[(i + 1) % n])).sum();
    (0.5 * twice).max(0.0)
}

/// Minimum translation that separates `q` from `p`, found by separating
/// axes over both polygons' edge normals. Returns `(depth, axis)` with
/// `axis` a unit direction to move `q` along; `depth ≤ 0` means the two are
/// already apart (or touching).
pub fn separation(p: &ConvexPolygon, q: &ConvexPolygon) -> (f64, Point2) {
    let mut best = (f64::INFINITY, Point2::new(1.0, 0.0));
    for poly in [p, q] {
        let n = poly.len();
        if n < 2 {
            continue;
        }
        for i in 0..n {
            let e = poly.vertices[(i + 1) % n] - poly.vertices[i];
            let len = e.norm();
            if len == 0.0 {
                continue;
            }
            let axis = Point2::new(e.z / len, -e.x / len);
            let (pmin, pmax) = project(p, axis);
            let (qmin, qmax) = project(q, axis);
            // push q whichever way along the axis is shorter
            let fwd = pmax - qmin;
            let back = qmax - pmin;
            let (d, dir) = if fwd <= back { (fwd, axis) } else { (back, axis * -1.0) };
            if d < best.0 {
                best = (d, dir);
            }
        }
    }
    best
}

fn project(p: &ConvexPolygon, axis: Point2) -> (f64, f64) {
    p.vertices
        .iter()
        .map(|v| v.dot(axis))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| (lo.min(d), hi.max(d)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::Vec3;
    use crate::scene::{AssetRecord, ObjectInstance, Orientation};
    use core::f64::consts::PI;

    fn unit_square(cx: f64, cz: f64) -> ConvexPolygon {
        ConvexPolygon::rect(Point2::new(cx, cz), 0.5, 0.5)
    }

    fn cube(yaw: f64, half: Vec3) -> ObjectInstance {
        let a = AssetRecord::new("box", half);
        let mut o = ObjectInstance::from_asset("b", &a, Vec3::ZERO, 0.0);
        o.orientation = Orientation::from_yaw(yaw);
        o
    }

    #[test]
    fn footprint_cases() {
        let f = footprint(&cube(0.0, Vec3::new(0.5, 0.5, 0.5)));
        assert_eq!(
            f.vertices(),
            &[
                Point2::new(-0.5, -0.5),
                Point2::new(0.5, -0.5),
                Point2::new(0.5, 0.5),
                Point2::new(-0.5, 0.5)
            ]
        );
        let f = footprint(&cube(45.0, Vec3::new(0.5, 0.5, 0.5)));
        assert_eq!(f.len(), 4);
        assert!((f.area() - 1.0).abs() < 1e-12);
        let f = footprint(&cube(0.0, Vec3::new(1.0, 0.5, 2.0)));
        assert_eq!(f.area(), 8.0);
        assert_eq!(f.perimeter(), 12.0);
    }

    #[test]
    fn hull_cases() {
        let mut pts = unit_square(0.0, 0.0).vertices().to_vec();
        pts.push(Point2::new(0.0, 0.0));
        pts.push(Point2::new(0.5, 0.0)); // on an edge
        assert_eq!(convex_hull(&pts).len(), 4);

        let tri = [Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)];
        let h = convex_hull(&tri);
        assert_eq!(h.len(), 3);
        assert_eq!(h.area(), 0.5);

        let same = [Point2::new(2.0, 3.0); 5];
        let h = convex_hull(&same);
        assert!(h.is_degenerate());
        assert_eq!(h.len(), 1);
        assert_eq!(h.area(), 0.0);

        let line = [Point2::new(0.0, 0.0), Point2::new(1.0, 1.0), Point2::new(2.0, 2.0)];
        let h = convex_hull(&line);
        assert_eq!(h.vertices(), &[Point2::new(0.0, 0.0), Point2::new(2.0, 2.0)]);
    }

    #[test]
    fn minkowski_cases() {
        let s = minkowski_sum(&unit_square(0.0, 0.0), &unit_square(0.0, 0.0));
        assert_eq!(s.len(), 4);
        assert_eq!(s.area(), 4.0);

        let pt = convex_hull(&[Point2::new(2.0, -1.0)]);
        let t = minkowski_sum(&unit_square(0.0, 0.0), &pt);
        assert_eq!(t, unit_square(2.0, -1.0));

        let disk = ConvexPolygon::regular(64, Point2::default(), 0.25);
        let a = minkowski_sum(&unit_square(0.0, 0.0), &disk).area();
        let expect = 1.0 + 4.0 * 0.25 + PI * 0.0625;
        assert!(((a - expect) / expect).abs() < 0.005, "{a} vs {expect}");
    }

    #[test]
    fn minkowski_matches_pairwise_hull() {
        // independent route: hull of all vertex sums
        let p = convex_hull(&[
            Point2::new(0.0, 0.0),
            Point2::new(2.0, 0.3),
            Point2::new(1.5, 1.7),
            Point2::new(-0.4, 1.0),
        ]);
        let q = ConvexPolygon::regular(7, Point2::new(0.3, -0.2), 0.6);
        let mut sums = Vec::new();
        for a in p.vertices() {
            for b in q.vertices() {
                sums.push(*a + *b);
            }
        }
        let oracle = convex_hull(&sums);
        let got = minkowski_sum(&p, &q);
        assert!(got.len() <= p.len() + q.len());
        assert!((got.area() - oracle.area()).abs() < 1e-12);
        assert_eq!(got.len(), oracle.len());
    }

    #[test]
    fn minkowski_with_segment() {
        let seg = convex_hull(&[Point2::new(0.0, 0.0), Point2::new(1.0, 0.0)]);
        let s = minkowski_sum(&unit_square(0.0, 0.0), &seg);
        assert_eq!(s.area(), 2.0);
        assert_eq!(s.len(), 4);
    }

    #[test]
    fn dilate_cases() {
        let sq = unit_square(0.0, 0.0);
        assert_eq!(dilate(&sq, 0.0), sq);

        let a = dilate(&sq, 0.1).area();
        let expect = 1.0 + 0.4 + 0.01 * PI;
        assert!(((a - expect) / expect).abs() < 0.005);

        // long edges with a small radius: the perimeter term must be exact
        let tri = convex_hull(&[Point2::new(-1.946, 1.560), Point2::new(0.0, -0.942), Point2::new(1.095, 0.0)]);
        let r = 0.01;
        let lin = tri.area() + tri.perimeter() * r;
        let a = dilate(&tri, r).area();
        assert!(a >= lin + 0.99 * PI * r * r && a <= lin + PI * r * r, "{a} vs {lin}");

        let pt = convex_hull(&[Point2::new(1.0, 1.0)]);
        let a = dilate(&pt, 0.3).area();
        let expect = PI * 0.09;
        assert!(((a - expect) / expect).abs() < 0.005, "{a} vs {expect}");
    }

    #[test]
    fn intersection_cases() {
        assert_eq!(intersection_area(&unit_square(0.0, 0.0), &unit_square(3.0, 0.0)), 0.0);
        assert_eq!(intersection_area(&unit_square(0.0, 0.0), &unit_square(0.0, 0.0)), 1.0);
        let a = intersection_area(&unit_square(0.0, 0.0), &unit_square(0.5, 0.0));
        assert!((a - 0.5).abs() < 1e-15);
        let tri = convex_hull(&[Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)]);
        assert_eq!(intersection_area(&tri, &ConvexPolygon::empty()), 0.0);
    }

    #[test]
    fn area_cases() {
        assert_eq!(polygon_area(&unit_square(4.0, -2.0)), 1.0);
        let g = ConvexPolygon::regular(64, Point2::default(), 1.0);
        let closed_form = 32.0 * (2.0 * PI / 64.0).sin();
        assert!((g.area() - closed_form).abs() < 1e-12);
        assert!((g.area() - 3.13655).abs() < 1e-4);
    }

    #[test]
    fn containment_and_distance() {
        let sq = unit_square(0.0, 0.0);
        assert!(sq.contains(Point2::new(0.5, 0.0)));
        assert!(!sq.contains(Point2::new(0.6, 0.0)));
        assert!((sq.distance_outside(Point2::new(1.5, 1.5)) - 2f64.sqrt()).abs() < 1e-12);
        assert!((sq.max_edge_violation(Point2::new(0.8, 0.0)) - 0.3).abs() < 1e-12);
        let (c, r) = sq.bounding_circle();
        assert_eq!(c, Point2::new(0.0, 0.0));
        assert!((r - 0.5 * 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn separation_cases() {
        let a = unit_square(0.0, 0.0);
        let b = unit_square(0.75, 0.0);
        let (d, axis) = separation(&a, &b);
        assert!((d - 0.25).abs() < 1e-15);
        assert_eq!(axis, Point2::new(1.0, 0.0));
        let moved = b.translated(axis * d);
        assert_eq!(intersection_area(&a, &moved), 0.0);

        let (d, _) = separation(&a, &unit_square(3.0, 0.0));
        assert!(d < 0.0);
    }
}
