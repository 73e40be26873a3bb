//! Per-frame fusion of geometric and semantic planes: matched pairs become
//! validated building components, which are then pruned by dangling removal
//! and gravity-referenced structural validation.

use nalgebra::Vector3;

use crate::camera::{Pose, UnitVec3};
use crate::cloud::{Point, PointCloud};
use crate::error::{Error, Result};
use crate::plane::{Plane, PlaneExtent};
use crate::scalar::Real;
use crate::semantic::{SemanticClass, SemanticPlane};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusionConfig<T: Real> {
    /// Minimum match score for a valid geometric/semantic association.
    pub epsilon_match: T,
    /// Point-to-plane distance under which a semantic point counts as covered.
    pub tau_dist: T,
    /// Maximum normal angle (degrees) for a candidate pair.
    pub theta_normal_deg: T,
    /// Minimum in-plane bounding-rectangle area for a kept component (m^2).
    pub min_area: T,
    pub vertical_tol_deg: T,
    pub horizontal_tol_deg: T,
    /// Minimum inlier support for a kept component (a quarter of the RANSAC
    /// threshold; the pipeline keeps this in sync per frame).
    pub min_support: usize,
}

impl<T: Real> Default for FusionConfig<T> {
    fn default() -> Self {
        FusionConfig {
            epsilon_match: T::of(0.6),
            tau_dist: T::of(0.05),
            theta_normal_deg: T::of(15.0),
            min_area: T::of(0.25),
            vertical_tol_deg: T::of(5.0),
            horizontal_tol_deg: T::of(5.0),
            min_support: 50,
        }
    }
}

impl<T: Real> FusionConfig<T> {
    // Negated comparisons so NaN inputs fail validation.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon_match > T::zero() && self.epsilon_match <= T::one()) {
            return Err(Error::Config("epsilon_match must be in (0, 1]".into()));
        }
        for (name, v) in [
            ("tau_dist", self.tau_dist),
            ("theta_normal", self.theta_normal_deg),
            ("min_area", self.min_area),
            ("vertical_tol", self.vertical_tol_deg),
            ("horizontal_tol", self.horizontal_tol_deg),
        ] {
            if !(v > T::zero()) {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        Ok(())
    }
}

/// A geometric plane whose semantic class was confirmed by a matching
/// semantic plane. Geometry and inlier points come from the geometric
/// estimate; the class comes from the semantic one.
#[derive(Debug, Clone)]
pub struct ValidatedComponent<T: Real> {
    pub plane: Plane<T>,
    pub class: SemanticClass,
    pub match_score: T,
    pub frame_timestamp: f64,
    /// Inlier points resolved from the source cloud (same frame as `plane`).
    pub points: Vec<Point<T>>,
}

impl<T: Real> ValidatedComponent<T> {
    pub fn support(&self) -> usize {
        self.points.len()
    }

    pub fn extent(&self) -> Option<PlaneExtent<T>> {
        PlaneExtent::from_points(
            &self.plane.normal,
            self.plane.d,
            self.points.iter().map(|p| &p.position),
        )
    }
}

/// Match score between a geometric and a semantic plane: 0 when the normals
/// disagree beyond the angular gate (orientation-agnostic), otherwise the
/// fraction of semantic inlier points lying within `tau_dist` of the
/// geometric plane.
pub fn match_score<T: Real>(
    geometric: &Plane<T>,
    semantic: &SemanticPlane<T>,
    config: &FusionConfig<T>,
) -> T {
    if semantic.points.is_empty() {
        return T::zero();
    }
    let angle = Plane::angle_between_normals(&geometric.normal, &semantic.plane.normal);
    if angle > config.theta_normal_deg.radians() {
        return T::zero();
    }
    let covered = semantic
        .points
        .iter()
        .filter(|p| geometric.distance(p) <= config.tau_dist)
        .count();
    T::of(covered as f64) / T::of(semantic.points.len() as f64)
}

/// Greedy one-to-one association in decreasing score order. Ties break on
/// larger geometric inlier count, then lower plane index. Unmatched geometric
/// planes are discarded.
pub fn fuse_frame<T: Real>(
    geometric: &[Plane<T>],
    cloud: &PointCloud<T>,
    semantic: &[SemanticPlane<T>],
    config: &FusionConfig<T>,
    timestamp: f64,
) -> Vec<ValidatedComponent<T>> {
    let mut candidates: Vec<(T, usize, usize)> = Vec::new();
    for (gi, gplane) in geometric.iter().enumerate() {
        for (sj, splane) in semantic.iter().enumerate() {
            let score = match_score(gplane, splane, config);
            if score >= config.epsilon_match {
                candidates.push((score, gi, sj));
            }
        }
    }
    candidates.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .expect("finite scores")
            .then(geometric[b.1].inliers.len().cmp(&geometric[a.1].inliers.len()))
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });

    let mut used_g = vec![false; geometric.len()];
    let mut used_s = vec![false; semantic.len()];
    let mut out = Vec::new();
    for (score, gi, sj) in candidates {
        if used_g[gi] || used_s[sj] {
            continue;
        }
        used_g[gi] = true;
        used_s[sj] = true;
        let gplane = &geometric[gi];
        let points = gplane
            .inliers
            .iter()
            .map(|&i| cloud.points[i])
            .collect();
        out.push(ValidatedComponent {
            plane: gplane.clone(),
            class: semantic[sj].class,
            match_score: score,
            frame_timestamp: timestamp,
            points,
        });
    }
    out
}

/// Drops components whose projected bounding rectangle is too small or whose
/// support is too thin to be a wall or ground patch.
pub fn remove_dangling<T: Real>(
    components: Vec<ValidatedComponent<T>>,
    config: &FusionConfig<T>,
) -> Vec<ValidatedComponent<T>> {
    components
        .into_iter()
        .filter(|c| {
            if c.support() < config.min_support {
                return false;
            }
            match c.extent() {
                Some(extent) => extent.area() >= config.min_area,
                None => false,
            }
        })
        .collect()
}

/// Gravity-referenced orientation check in the world frame: grounds must be
/// horizontal, walls vertical. Without a pose the component normals are
/// assumed to already share the frame `gravity_up` is expressed in.
pub fn structural_validate<T: Real>(
    components: Vec<ValidatedComponent<T>>,
    gravity_up: &UnitVec3<T>,
    pose: Option<&Pose<T>>,
    config: &FusionConfig<T>,
) -> Vec<ValidatedComponent<T>> {
    let vertical_tol = config.vertical_tol_deg.radians();
    let horizontal_tol = config.horizontal_tol_deg.radians();
    let quarter_turn = T::frac_pi_2();
    components
        .into_iter()
        .filter(|c| {
            let normal: Vector3<T> = match pose {
                Some(p) => p.rotate(&c.plane.normal),
                None => c.plane.normal.into_inner(),
            };
            // Angle to +/- up in [0, pi/2].
            let up_angle = normal.dot(gravity_up).abs().clampr(T::zero(), T::one()).acos();
            match c.class {
                SemanticClass::Ground => up_angle <= horizontal_tol,
                SemanticClass::Wall => (quarter_turn - up_angle).abs() <= vertical_tol,
                SemanticClass::Other => false,
            }
        })
        .collect()
}
