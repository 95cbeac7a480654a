//! Planar geometry: points, simple polygons, and the exact predicates used by
//! the ground-truth collision oracle.

use crate::scalar::Scalar;

/// 2-D point / vector in workspace units.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2<S> {
    pub x: S,
    pub y: S,
}

impl<S: Scalar> Point2<S> {
    pub fn new(x: S, y: S) -> Self {
        Self { x, y }
    }

    pub fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y)
    }

    pub fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y)
    }

    pub fn scale(self, s: S) -> Self {
        Self::new(self.x * s, self.y * s)
    }

    pub fn dot(self, o: Self) -> S {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the cross product (signed parallelogram area).
    pub fn cross(self, o: Self) -> S {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> S {
        self.dot(self).sqrt()
    }

    pub fn distance(self, o: Self) -> S {
        self.sub(o).norm()
    }

    /// Rotate counter-clockwise by `angle` radians about the origin.
    pub fn rotated(self, angle: S) -> Self {
        let (s, c) = angle.sin_cos();
        Self::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }
}

/// Simple polygon given by an ordered vertex list (either winding).
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon<S> {
    pub vertices: Vec<Point2<S>>,
}

/// Orientation of the triangle (a, b, c): positive = counter-clockwise.
fn orient<S: Scalar>(a: Point2<S>, b: Point2<S>, c: Point2<S>) -> S {
    b.sub(a).cross(c.sub(a))
}

/// Closed-segment intersection test, including touching and collinear overlap.
pub fn segments_intersect<S: Scalar>(
    p1: Point2<S>,
    p2: Point2<S>,
    q1: Point2<S>,
    q2: Point2<S>,
) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);

    if ((d1 > S::zero() && d2 < S::zero()) || (d1 < S::zero() && d2 > S::zero()))
        && ((d3 > S::zero() && d4 < S::zero()) || (d3 < S::zero() && d4 > S::zero()))
    {
        return true;
    }
    let on = |a: Point2<S>, b: Point2<S>, p: Point2<S>, d: S| -> bool {
        d == S::zero()
            && p.x >= a.x.min(b.x)
            && p.x <= a.x.max(b.x)
            && p.y >= a.y.min(b.y)
            && p.y <= a.y.max(b.y)
    };
    on(q1, q2, p1, d1) || on(q1, q2, p2, d2) || on(p1, p2, q1, d3) || on(p1, p2, q2, d4)
}

/// Squared distance from point `p` to the closed segment `[a, b]`.
pub fn point_segment_dist_sq<S: Scalar>(p: Point2<S>, a: Point2<S>, b: Point2<S>) -> S {
    let ab = b.sub(a);
    let len_sq = ab.dot(ab);
    if len_sq == S::zero() {
        return p.sub(a).dot(p.sub(a));
    }
    let t = (p.sub(a).dot(ab) / len_sq).max(S::zero()).min(S::one());
    let proj = a.add(ab.scale(t));
    p.sub(proj).dot(p.sub(proj))
}

/// Minimum distance between two closed segments.
pub fn segment_segment_dist<S: Scalar>(
    p1: Point2<S>,
    p2: Point2<S>,
    q1: Point2<S>,
    q2: Point2<S>,
) -> S {
    if segments_intersect(p1, p2, q1, q2) {
        return S::zero();
    }
    let d = point_segment_dist_sq(p1, q1, q2)
        .min(point_segment_dist_sq(p2, q1, q2))
        .min(point_segment_dist_sq(q1, p1, p2))
        .min(point_segment_dist_sq(q2, p1, p2));
    d.sqrt()
}

impl<S: Scalar> Polygon<S> {
    pub fn new(vertices: Vec<Point2<S>>) -> Self {
        Self { vertices }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Edges as (start, end) pairs, closing back to the first vertex.
    pub fn edges(&self) -> impl Iterator<Item = (Point2<S>, Point2<S>)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// Signed area (positive for counter-clockwise winding).
    pub fn signed_area(&self) -> S {
        let mut acc = S::zero();
        for (a, b) in self.edges() {
            acc += a.cross(b);
        }
        acc / S::of_f64(2.0)
    }

    /// Even-odd point containment; boundary points count as inside.
    pub fn contains(&self, p: Point2<S>) -> bool {
        let n = self.vertices.len();
        if n < 3 {
            return false;
        }
        // Boundary check first so the ray-cast parity cannot misclassify it.
        for (a, b) in self.edges() {
            if point_segment_dist_sq(p, a, b) == S::zero() {
                return true;
            }
        }
        let mut inside = false;
        let mut j = n - 1;
        for i in 0..n {
            let vi = self.vertices[i];
            let vj = self.vertices[j];
            if (vi.y > p.y) != (vj.y > p.y) {
                let slope_x = vj.x - vi.x;
                let t = (p.y - vi.y) / (vj.y - vi.y);
                let x_cross = vi.x + t * slope_x;
                if p.x < x_cross {
                    inside = !inside;
                }
            }
            j = i;
        }
        inside
    }

    /// True iff no two non-adjacent edges intersect and the polygon has
    /// at least 3 finite vertices.
    pub fn is_simple(&self) -> bool {
        let n = self.vertices.len();
        if n < 3 {
            return false;
        }
        if self.vertices.iter().any(|v| !v.x.is_finite() || !v.y.is_finite()) {
            return false;
        }
        for i in 0..n {
            let (a1, a2) = (self.vertices[i], self.vertices[(i + 1) % n]);
            for j in (i + 1)..n {
                // Skip adjacent edges (shared vertex).
                if j == i || (j + 1) % n == i || (i + 1) % n == j {
                    continue;
                }
                let (b1, b2) = (self.vertices[j], self.vertices[(j + 1) % n]);
                if segments_intersect(a1, a2, b1, b2) {
                    return false;
                }
            }
        }
        true
    }

    /// Exact polygon-polygon intersection, including full containment.
    pub fn intersects(&self, other: &Polygon<S>) -> bool {
        for (a1, a2) in self.edges() {
            for (b1, b2) in other.edges() {
                if segments_intersect(a1, a2, b1, b2) {
                    return true;
                }
            }
        }
        // Disjoint boundaries: one polygon may still contain the other.
        if !self.vertices.is_empty() && other.contains(self.vertices[0]) {
            return true;
        }
        if !other.vertices.is_empty() && self.contains(other.vertices[0]) {
            return true;
        }
        false
    }

    /// Minimum boundary distance between two polygons; 0 when they intersect.
    pub fn distance(&self, other: &Polygon<S>) -> S {
        if self.intersects(other) {
            return S::zero();
        }
        let mut best = S::infinity();
        for (a1, a2) in self.edges() {
            for (b1, b2) in other.edges() {
                best = best.min(segment_segment_dist(a1, a2, b1, b2));
            }
        }
        best
    }

    pub fn translated(&self, d: Point2<S>) -> Self {
        Self::new(self.vertices.iter().map(|v| v.add(d)).collect())
    }

    pub fn rotated(&self, angle: S) -> Self {
        Self::new(self.vertices.iter().map(|v| v.rotated(angle)).collect())
    }

    /// Inward offset of a convex polygon by `delta`; `None` if it vanishes.
    ///
    /// Each edge line is moved toward the interior and consecutive offset
    /// lines are re-intersected.
    pub fn shrink_convex(&self, delta: S) -> Option<Polygon<S>> {
        let n = self.vertices.len();
        if n < 3 {
            return None;
        }
        // Work in counter-clockwise winding.
        let verts: Vec<Point2<S>> = if self.signed_area() >= S::zero() {
            self.vertices.clone()
        } else {
            self.vertices.iter().rev().copied().collect()
        };
        // Offset each edge along its inward normal.
        let mut lines = Vec::with_capacity(n);
        for i in 0..n {
            let a = verts[i];
            let b = verts[(i + 1) % n];
            let dir = b.sub(a);
            let len = dir.norm();
            if len == S::zero() {
                return None;
            }
            // Inward normal for CCW winding.
            let normal = Point2::new(-dir.y / len, dir.x / len);
            let shift = normal.scale(delta);
            lines.push((a.add(shift), b.add(shift)));
        }
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let (a1, a2) = lines[(i + n - 1) % n];
            let (b1, b2) = lines[i];
            let d1 = a2.sub(a1);
            let d2 = b2.sub(b1);
            let denom = d1.cross(d2);
            if denom == S::zero() {
                return None;
            }
            let t = b1.sub(a1).cross(d2) / denom;
            out.push(a1.add(d1.scale(t)));
        }
        let poly = Polygon::new(out);
        if poly.signed_area() <= S::zero() {
            return None;
        }
        // All shrunken vertices must stay inside the original polygon.
        if poly.vertices.iter().any(|v| !self.contains(*v)) {
            return None;
        }
        Some(poly)
    }

    /// Convex hull of the vertex set (monotone chain); returns CCW vertices.
    pub fn convex_hull(points: &[Point2<S>]) -> Polygon<S> {
        let mut pts: Vec<Point2<S>> = points.to_vec();
        pts.sort_by(|a, b| {
            a.x.partial_cmp(&b.x).unwrap().then(a.y.partial_cmp(&b.y).unwrap())
        });
        pts.dedup_by(|a, b| a.x == b.x && a.y == b.y);
        if pts.len() < 3 {
            return Polygon::new(pts);
        }
        let build = |iter: &mut dyn Iterator<Item = Point2<S>>| -> Vec<Point2<S>> {
            let mut chain: Vec<Point2<S>> = Vec::new();
            for p in iter {
                while chain.len() >= 2
                    && orient(chain[chain.len() - 2], chain[chain.len() - 1], p) <= S::zero()
                {
                    chain.pop();
                }
                chain.push(p);
            }
            chain
        };
        let mut lower = build(&mut pts.iter().copied());
        let mut upper = build(&mut pts.iter().rev().copied());
        lower.pop();
        upper.pop();
        lower.append(&mut upper);
        Polygon::new(lower)
    }

    /// Axis-aligned rectangle helper (counter-clockwise winding).
    pub fn rect(cx: S, cy: S, half_w: S, half_h: S) -> Self {
        Self::new(vec![
            Point2::new(cx - half_w, cy - half_h),
            Point2::new(cx + half_w, cy - half_h),
            Point2::new(cx + half_w, cy + half_h),
            Point2::new(cx - half_w, cy + half_h),
        ])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type P = Point2<f64>;

    #[test]
    fn segment_intersection_basic() {
        let a = P::new(0.0, 0.0);
        let b = P::new(2.0, 2.0);
        let c = P::new(0.0, 2.0);
        let d = P::new(2.0, 0.0);
        assert!(segments_intersect(a, b, c, d));
        assert!(!segments_intersect(a, P::new(1.0, 0.0), c, P::new(1.0, 2.0)));
        // Touching endpoint counts.
        assert!(segments_intersect(a, b, b, P::new(3.0, 0.0)));
    }

    #[test]
    fn contains_and_boundary() {
        let sq = Polygon::rect(0.0, 0.0, 1.0, 1.0);
        assert!(sq.contains(P::new(0.0, 0.0)));
        assert!(sq.contains(P::new(1.0, 0.0))); // boundary
        assert!(!sq.contains(P::new(1.5, 0.0)));
    }

    #[test]
    fn intersects_containment() {
        let big = Polygon::rect(0.0, 0.0, 2.0, 2.0);
        let small = Polygon::rect(0.0, 0.0, 0.5, 0.5);
        assert!(big.intersects(&small));
        assert!(small.intersects(&big));
        let far = Polygon::rect(10.0, 0.0, 1.0, 1.0);
        assert!(!big.intersects(&far));
    }

    #[test]
    fn polygon_distance() {
        let a = Polygon::<f64>::rect(0.0, 0.0, 1.0, 1.0);
        let b = Polygon::rect(5.0, 0.0, 1.0, 1.0);
        assert!((a.distance(&b) - 3.0).abs() < 1e-12);
        assert_eq!(a.distance(&a), 0.0);
    }

    #[test]
    fn shrink_rect() {
        let r = Polygon::<f64>::rect(1.0, 2.0, 1.0, 0.5);
        let s = r.shrink_convex(0.2).unwrap();
        assert!((s.signed_area() - (1.6 * 0.6)).abs() < 1e-9);
        assert!(r.shrink_convex(0.6).is_none()); // half-height is 0.5
    }

    #[test]
    fn convex_hull_of_two_squares() {
        let mut pts = Polygon::<f64>::rect(0.0, 0.0, 1.0, 1.0).vertices;
        pts.extend(Polygon::rect(0.0, 0.0, 2.0, 0.5).vertices);
        let hull = Polygon::convex_hull(&pts);
        assert_eq!(hull.vertices.len(), 8);
        assert!(hull.signed_area() > 4.0); // bigger than either input
        assert!(hull.contains(P::new(1.4, 0.2)));
    }

    #[test]
    fn simple_check_rejects_bowtie() {
        let bowtie = Polygon::new(vec![
            P::new(0.0, 0.0),
            P::new(1.0, 1.0),
            P::new(1.0, 0.0),
            P::new(0.0, 1.0),
        ]);
        assert!(!bowtie.is_simple());
        assert!(Polygon::<f64>::rect(0.0, 0.0, 1.0, 1.0).is_simple());
    }
}
