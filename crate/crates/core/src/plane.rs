//! Plane representation (`n . p + d = 0`), closed-form total-least-squares
//! fitting, and oriented rectangular extents on a plane.

use nalgebra::{Matrix3, SymmetricEigen, Unit, Vector2, Vector3};

use crate::cloud::FrameId;
use crate::scalar::Real;

/// A fitted plane with the indices of its supporting points.
#[derive(Debug, Clone)]
pub struct Plane<T: Real> {
    /// Unit normal. In the camera frame the convention is `d > 0`
    /// (normal faces the camera center).
    pub normal: Unit<Vector3<T>>,
    pub d: T,
    /// Indices into the cloud the plane was fitted on.
    pub inliers: Vec<usize>,
    pub frame_id: FrameId,
    pub rms_residual: T,
}

impl<T: Real> Plane<T> {
    #[inline]
    pub fn signed_distance(&self, p: &Vector3<T>) -> T {
        self.normal.dot(p) + self.d
    }

    #[inline]
    pub fn distance(&self, p: &Vector3<T>) -> T {
        self.signed_distance(p).abs()
    }

    /// Orientation-agnostic angle to another normal, in radians ([0, pi/2]).
    pub fn angle_between_normals(a: &Unit<Vector3<T>>, b: &Unit<Vector3<T>>) -> T {
        a.dot(b).abs().clampr(T::zero(), T::one()).acos()
    }
}

/// Flips `(normal, d)` so that `d > 0`, i.e. the normal faces the origin of
/// the frame the plane is expressed in.
pub fn orient_toward_origin<T: Real>(normal: Unit<Vector3<T>>, d: T) -> (Unit<Vector3<T>>, T) {
    if d <= T::zero() {
        (Unit::new_unchecked(-normal.into_inner()), -d)
    } else {
        (normal, d)
    }
}

/// Closed-form total-least-squares plane through a point set: centroid plus
/// the eigenvector of the smallest covariance eigenvalue. Returns `None` for
/// fewer than 3 points or a degenerate (rank < 2) configuration.
pub fn tls_fit<T: Real>(points: &[Vector3<T>]) -> Option<(Unit<Vector3<T>>, T)> {
    if points.len() < 3 {
        return None;
    }
    let n = T::of(points.len() as f64);
    let mut centroid = Vector3::zeros();
    for p in points {
        centroid += p;
    }
    centroid /= n;

    let mut cov = Matrix3::zeros();
    for p in points {
        let q = p - centroid;
        cov += q * q.transpose();
    }
    cov /= n;

    let eig = SymmetricEigen::new(cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .expect("finite eigenvalues")
    });
    let smallest = order[0];
    let mid = order[1];
    let largest = order[2];
    // Rank-deficient scatter (collinear points) leaves the normal undefined.
    let scale = eig.eigenvalues[largest].maxr(T::of(1e-30));
    if eig.eigenvalues[mid] <= scale * T::of(1e-12) {
        return None;
    }
    let normal = Unit::new_normalize(eig.eigenvectors.column(smallest).into_owned());
    let d = -normal.dot(&centroid);
    Some((normal, d))
}

/// Oriented bounding rectangle of a point set on a plane: center, two
/// in-plane axes and half-lengths. Axes are the principal directions of the
/// projected scatter, with a deterministic sign convention.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneExtent<T: Real> {
    pub center: Vector3<T>,
    pub axes: [Unit<Vector3<T>>; 2],
    pub half_lengths: [T; 2],
}

/// Deterministic in-plane basis for a normal: the world axis least aligned
/// with the normal is projected into the plane.
pub fn plane_basis<T: Real>(normal: &Unit<Vector3<T>>) -> (Vector3<T>, Vector3<T>) {
    let n = normal.into_inner();
    let ax = n.x.abs();
    let ay = n.y.abs();
    let az = n.z.abs();
    let seed = if ax <= ay && ax <= az {
        Vector3::x()
    } else if ay <= az {
        Vector3::y()
    } else {
        Vector3::z()
    };
    let e1 = seed
        .cross(&n)
        .try_normalize(T::of(1e-12))
        .expect("seed axis not parallel to normal");
    let e2 = n.cross(&e1);
    (e1, e2)
}

impl<T: Real> PlaneExtent<T> {
    /// Builds the extent from points assumed to lie near the plane
    /// `(normal, d)`. Returns `None` for an empty input.
    pub fn from_points<'a, I>(normal: &Unit<Vector3<T>>, d: T, points: I) -> Option<Self>
    where
        I: IntoIterator<Item = &'a Vector3<T>>,
        T: 'a,
    {
        let (e1, e2) = plane_basis(normal);
        let origin = -normal.into_inner() * d; // closest plane point to the frame origin
        let uv: Vec<Vector2<T>> = points
            .into_iter()
            .map(|p| {
                let q = p - origin;
                Vector2::new(q.dot(&e1), q.dot(&e2))
            })
            .collect();
        if uv.is_empty() {
            return None;
        }

        let n = T::of(uv.len() as f64);
        let mut mean = Vector2::zeros();
        for q in &uv {
            mean += q;
        }
        mean /= n;
        let (mut cxx, mut cxy, mut cyy) = (T::zero(), T::zero(), T::zero());
        for q in &uv {
            let r = q - mean;
            cxx += r.x * r.x;
            cxy += r.x * r.y;
            cyy += r.y * r.y;
        }

        // Principal direction of the 2x2 scatter, sign-canonicalized.
        let theta = T::of(0.5) * (cxy + cxy).atan2(cxx - cyy);
        let mut a1 = Vector2::new(theta.cos(), theta.sin());
        if a1.x < T::zero() || (a1.x == T::zero() && a1.y < T::zero()) {
            a1 = -a1;
        }
        let a2 = Vector2::new(-a1.y, a1.x);

        let mut lo1 = T::max_value().unwrap_or_else(T::one);
        let mut hi1 = -lo1;
        let mut lo2 = lo1;
        let mut hi2 = -lo1;
        for q in &uv {
            let t1 = q.dot(&a1);
            let t2 = q.dot(&a2);
            lo1 = lo1.minr(t1);
            hi1 = hi1.maxr(t1);
            lo2 = lo2.minr(t2);
            hi2 = hi2.maxr(t2);
        }
        let c1 = (lo1 + hi1) / T::of(2.0);
        let c2 = (lo2 + hi2) / T::of(2.0);
        let min_half = T::of(1e-6);
        let half_lengths = [
            ((hi1 - lo1) / T::of(2.0)).maxr(min_half),
            ((hi2 - lo2) / T::of(2.0)).maxr(min_half),
        ];

        let axis1 = e1 * a1.x + e2 * a1.y;
        let axis2 = e1 * a2.x + e2 * a2.y;
        let center = origin + axis1 * c1 + axis2 * c2;
        Some(PlaneExtent {
            center,
            axes: [Unit::new_normalize(axis1), Unit::new_normalize(axis2)],
            half_lengths,
        })
    }

    /// Bounding rectangle along the deterministic [`plane_basis`] axes
    /// (horizontal/vertical for walls, axis-aligned for grounds). Landmarks
    /// use this fixed orientation so repeated unions stay tight.
    pub fn bounding_on_basis<'a, I>(normal: &Unit<Vector3<T>>, d: T, points: I) -> Option<Self>
    where
        I: IntoIterator<Item = &'a Vector3<T>>,
        T: 'a,
    {
        let (e1, e2) = plane_basis(normal);
        let anchor = -normal.into_inner() * d;
        let mut lo1 = T::max_value().unwrap_or_else(T::one);
        let mut hi1 = -lo1;
        let mut lo2 = lo1;
        let mut hi2 = -lo1;
        let mut any = false;
        for p in points {
            any = true;
            let q = p - anchor;
            let t1 = q.dot(&e1);
            let t2 = q.dot(&e2);
            lo1 = lo1.minr(t1);
            hi1 = hi1.maxr(t1);
            lo2 = lo2.minr(t2);
            hi2 = hi2.maxr(t2);
        }
        if !any {
            return None;
        }
        let min_half = T::of(1e-6);
        Some(PlaneExtent {
            center: anchor
                + e1 * ((lo1 + hi1) / T::of(2.0))
                + e2 * ((lo2 + hi2) / T::of(2.0)),
            axes: [Unit::new_normalize(e1), Unit::new_normalize(e2)],
            half_lengths: [
                ((hi1 - lo1) / T::of(2.0)).maxr(min_half),
                ((hi2 - lo2) / T::of(2.0)).maxr(min_half),
            ],
        })
    }

    /// Rectangle defined directly by center, two orthonormal axes and
    /// half-lengths (used by synthetic scenes).
    pub fn from_rect(
        center: Vector3<T>,
        axis1: Unit<Vector3<T>>,
        axis2: Unit<Vector3<T>>,
        half_lengths: [T; 2],
    ) -> Self {
        PlaneExtent {
            center,
            axes: [axis1, axis2],
            half_lengths,
        }
    }

    pub fn area(&self) -> T {
        T::of(4.0) * self.half_lengths[0] * self.half_lengths[1]
    }

    pub fn corners(&self) -> [Vector3<T>; 4] {
        let a = self.axes[0].into_inner() * self.half_lengths[0];
        let b = self.axes[1].into_inner() * self.half_lengths[1];
        [
            self.center + a + b,
            self.center + a - b,
            self.center - a - b,
            self.center - a + b,
        ]
    }

    /// Whether `point` projects inside the rectangle, with `tolerance` slack
    /// along both axes.
    pub fn contains(&self, point: &Vector3<T>, tolerance: T) -> bool {
        let q = point - self.center;
        q.dot(&self.axes[0]).abs() <= self.half_lengths[0] + tolerance
            && q.dot(&self.axes[1]).abs() <= self.half_lengths[1] + tolerance
    }

    /// Bounding union of this extent and `other` on the plane `(normal, d)`,
    /// keeping this extent's axis orientation (re-orthogonalized to the
    /// plane). A fixed orientation keeps repeated unions from inflating the
    /// rectangle the way repeated PCA refits would.
    pub fn union_on_plane(
        &self,
        other: &PlaneExtent<T>,
        normal: &Unit<Vector3<T>>,
        d: T,
    ) -> PlaneExtent<T> {
        let n = normal.into_inner();
        let axis1 = (self.axes[0].into_inner() - n * n.dot(&self.axes[0]))
            .try_normalize(T::of(1e-9))
            .unwrap_or_else(|| plane_basis(normal).0);
        let axis2 = n.cross(&axis1);
        let anchor = -n * d;

        let mut lo1 = T::max_value().unwrap_or_else(T::one);
        let mut hi1 = -lo1;
        let mut lo2 = lo1;
        let mut hi2 = -lo1;
        for corner in self.corners().into_iter().chain(other.corners()) {
            let q = corner - anchor;
            let t1 = q.dot(&axis1);
            let t2 = q.dot(&axis2);
            lo1 = lo1.minr(t1);
            hi1 = hi1.maxr(t1);
            lo2 = lo2.minr(t2);
            hi2 = hi2.maxr(t2);
        }
        let min_half = T::of(1e-6);
        PlaneExtent {
            center: anchor
                + axis1 * ((lo1 + hi1) / T::of(2.0))
                + axis2 * ((lo2 + hi2) / T::of(2.0)),
            axes: [Unit::new_normalize(axis1), Unit::new_normalize(axis2)],
            half_lengths: [
                ((hi1 - lo1) / T::of(2.0)).maxr(min_half),
                ((hi2 - lo2) / T::of(2.0)).maxr(min_half),
            ],
        }
    }
}

/// In-plane gap between two extents: both rectangles are projected onto the
/// plane of `a` and the convex distance is measured there (0 when they
/// overlap).
pub fn extent_gap<T: Real>(a: &PlaneExtent<T>, b: &PlaneExtent<T>) -> T {
    let to_2d = |p: &Vector3<T>| {
        let q = p - a.center;
        Vector2::new(q.dot(&a.axes[0]), q.dot(&a.axes[1]))
    };
    let quad_a: Vec<Vector2<T>> = a.corners().iter().map(&to_2d).collect();
    let quad_b: Vec<Vector2<T>> = b.corners().iter().map(&to_2d).collect();
    crate::geom2d::convex_polygon_distance(&quad_a, &quad_b)
}
