//! Small 2D helpers shared by extent handling and structure inference:
//! convex polygon overlap/distance tests, line intersection, areas.

use nalgebra::Vector2;

use crate::scalar::Real;

/// Closest distance between two 2D segments `a0-a1` and `b0-b1`.
pub fn segment_distance<T: Real>(
    a0: Vector2<T>,
    a1: Vector2<T>,
    b0: Vector2<T>,
    b1: Vector2<T>,
) -> T {
    if segments_intersect(a0, a1, b0, b1) {
        return T::zero();
    }
    point_segment_distance(a0, b0, b1)
        .minr(point_segment_distance(a1, b0, b1))
        .minr(point_segment_distance(b0, a0, a1))
        .minr(point_segment_distance(b1, a0, a1))
}

pub fn point_segment_distance<T: Real>(p: Vector2<T>, s0: Vector2<T>, s1: Vector2<T>) -> T {
    let d = s1 - s0;
    let len2 = d.norm_squared();
    if len2 <= T::zero() {
        return (p - s0).norm();
    }
    let t = ((p - s0).dot(&d) / len2).clampr(T::zero(), T::one());
    (p - (s0 + d * t)).norm()
}

fn orient<T: Real>(a: Vector2<T>, b: Vector2<T>, c: Vector2<T>) -> T {
    (b - a).perp(&(c - a))
}

fn segments_intersect<T: Real>(
    a0: Vector2<T>,
    a1: Vector2<T>,
    b0: Vector2<T>,
    b1: Vector2<T>,
) -> bool {
    let d1 = orient(b0, b1, a0);
    let d2 = orient(b0, b1, a1);
    let d3 = orient(a0, a1, b0);
    let d4 = orient(a0, a1, b1);
    if ((d1 > T::zero() && d2 < T::zero()) || (d1 < T::zero() && d2 > T::zero()))
        && ((d3 > T::zero() && d4 < T::zero()) || (d3 < T::zero() && d4 > T::zero()))
    {
        return true;
    }
    let on = |d: T, p: Vector2<T>, s0: Vector2<T>, s1: Vector2<T>| {
        d == T::zero()
            && p.x <= s0.x.maxr(s1.x)
            && p.x >= s0.x.minr(s1.x)
            && p.y <= s0.y.maxr(s1.y)
            && p.y >= s0.y.minr(s1.y)
    };
    on(d1, a0, b0, b1) || on(d2, a1, b0, b1) || on(d3, b0, a0, a1) || on(d4, b1, a0, a1)
}

/// Separating-axis overlap test for convex polygons (vertices in either
/// winding order).
pub fn convex_polygons_overlap<T: Real>(a: &[Vector2<T>], b: &[Vector2<T>]) -> bool {
    if a.is_empty() || b.is_empty() {
        return false;
    }
    for (poly, other) in [(a, b), (b, a)] {
        for i in 0..poly.len() {
            let edge = poly[(i + 1) % poly.len()] - poly[i];
            let axis = Vector2::new(-edge.y, edge.x);
            if axis.norm_squared() <= T::zero() {
                continue;
            }
            let project = |pts: &[Vector2<T>]| {
                let mut lo = pts[0].dot(&axis);
                let mut hi = lo;
                for p in &pts[1..] {
                    let v = p.dot(&axis);
                    lo = lo.minr(v);
                    hi = hi.maxr(v);
                }
                (lo, hi)
            };
            let (alo, ahi) = project(poly);
            let (blo, bhi) = project(other);
            if ahi < blo || bhi < alo {
                return false;
            }
        }
    }
    true
}

/// Distance between two convex polygons; zero when they overlap.
pub fn convex_polygon_distance<T: Real>(a: &[Vector2<T>], b: &[Vector2<T>]) -> T {
    if convex_polygons_overlap(a, b) {
        return T::zero();
    }
    let mut best = T::max_value().unwrap_or_else(T::one);
    for i in 0..a.len() {
        let (a0, a1) = (a[i], a[(i + 1) % a.len()]);
        for j in 0..b.len() {
            let (b0, b1) = (b[j], b[(j + 1) % b.len()]);
            best = best.minr(segment_distance(a0, a1, b0, b1));
        }
    }
    best
}

/// Shoelace area (absolute value).
pub fn polygon_area<T: Real>(poly: &[Vector2<T>]) -> T {
    if poly.len() < 3 {
        return T::zero();
    }
    let mut acc = T::zero();
    for i in 0..poly.len() {
        let p = poly[i];
        let q = poly[(i + 1) % poly.len()];
        acc += p.perp(&q);
    }
    (acc / T::of(2.0)).abs()
}

/// Intersection of lines `{q : q . n_a = o_a}` and `{q : q . n_b = o_b}`.
/// Returns `None` for near-parallel normals.
pub fn line_intersection<T: Real>(
    n_a: Vector2<T>,
    o_a: T,
    n_b: Vector2<T>,
    o_b: T,
) -> Option<Vector2<T>> {
    let det = n_a.x * n_b.y - n_a.y * n_b.x;
    if det.abs() <= T::of(1e-9) {
        return None;
    }
    Some(Vector2::new(
        (o_a * n_b.y - o_b * n_a.y) / det,
        (n_a.x * o_b - n_b.x * o_a) / det,
    ))
}
