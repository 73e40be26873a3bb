//! Global map layer: validated per-frame components are re-associated across
//! frames into plane landmarks; inferred rooms/corridors attach as structure
//! nodes. Single-writer: one owner mutates the graph in timestamp order.

use std::collections::BTreeMap;
use std::io::Write;

use nalgebra::Unit;

use crate::camera::{Pose, UnitVec3};
use crate::cloud::Point;
use crate::error::{Error, Result};
use crate::fusion::ValidatedComponent;
use crate::plane::{extent_gap, PlaneExtent};
use crate::scalar::Real;
use crate::semantic::SemanticClass;
use crate::structures::StructureNode;

/// Identifier of a plane landmark within one scene graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LandmarkId(pub u32);

impl std::fmt::Display for LandmarkId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

/// A globally associated plane in the world frame, accumulating support and
/// extent over all frames that observed it.
#[derive(Debug, Clone)]
pub struct PlaneLandmark<T: Real> {
    pub id: LandmarkId,
    pub class: SemanticClass,
    pub normal: UnitVec3<T>,
    pub d: T,
    /// Accumulated inlier count over all observations.
    pub support: usize,
    /// Timestamps of the frames that observed this landmark.
    pub observations: Vec<f64>,
    pub extent: PlaneExtent<T>,
    /// Subsampled world-frame inlier points kept for export.
    pub stored_points: Vec<Point<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssociationConfig<T: Real> {
    pub angle_tol_deg: T,
    pub offset_tol: T,
    /// Maximum in-plane rectangle gap for merging co-planar segments.
    pub extent_gap_max: T,
    /// Cap on stored points added per observation.
    pub stored_points_per_observation: usize,
}

impl<T: Real> Default for AssociationConfig<T> {
    fn default() -> Self {
        AssociationConfig {
            angle_tol_deg: T::of(10.0),
            offset_tol: T::of(0.2),
            extent_gap_max: T::of(0.5),
            stored_points_per_observation: 1024,
        }
    }
}

/// Plane transform to the world frame: `n_w = R n_c`, `d_w = d_c - n_w . t`.
pub fn to_world<T: Real>(normal: &UnitVec3<T>, d: T, pose: &Pose<T>) -> (UnitVec3<T>, T) {
    let n_w = Unit::new_normalize(pose.rotate(normal));
    let d_w = d - n_w.dot(&pose.translation);
    (n_w, d_w)
}

#[derive(Debug, Clone, Default)]
pub struct SceneGraph<T: Real> {
    landmarks: BTreeMap<LandmarkId, PlaneLandmark<T>>,
    next_id: u32,
    pub structures: Vec<StructureNode<T>>,
    /// Structure-to-landmark membership relations.
    pub edges: Vec<(usize, LandmarkId)>,
}

impl<T: Real> SceneGraph<T> {
    pub fn new() -> Self {
        SceneGraph {
            landmarks: BTreeMap::new(),
            next_id: 0,
            structures: Vec::new(),
            edges: Vec::new(),
        }
    }

    pub fn landmark_count(&self) -> usize {
        self.landmarks.len()
    }

    pub fn landmark(&self, id: LandmarkId) -> Option<&PlaneLandmark<T>> {
        self.landmarks.get(&id)
    }

    /// Landmarks in id order.
    pub fn landmarks(&self) -> impl Iterator<Item = &PlaneLandmark<T>> {
        self.landmarks.values()
    }

    pub fn total_support(&self) -> usize {
        self.landmarks.values().map(|l| l.support).sum()
    }

    /// Associates one validated component against the landmarks of its class:
    /// the best candidate within the angle/offset/extent gates is merged
    /// (support-weighted), otherwise a new landmark is created. Returns the
    /// affected landmark id.
    pub fn associate(
        &mut self,
        component: &ValidatedComponent<T>,
        pose: &Pose<T>,
        config: &AssociationConfig<T>,
    ) -> LandmarkId {
        let (normal, d) = to_world(&component.plane.normal, component.plane.d, pose);
        let world_points: Vec<Point<T>> = component
            .points
            .iter()
            .map(|p| Point {
                position: pose.transform_point(&p.position),
                color: p.color,
            })
            .collect();
        let extent =
            PlaneExtent::bounding_on_basis(&normal, d, world_points.iter().map(|p| &p.position))
                .unwrap_or_else(|| {
                    PlaneExtent::from_rect(
                        -normal.into_inner() * d,
                        Unit::new_normalize(crate::plane::plane_basis(&normal).0),
                        Unit::new_normalize(crate::plane::plane_basis(&normal).1),
                        [T::of(1e-6), T::of(1e-6)],
                    )
                });
        let support = world_points.len();

        let angle_tol = config.angle_tol_deg.radians();
        let mut best: Option<(T, LandmarkId)> = None;
        for (id, landmark) in &self.landmarks {
            if landmark.class != component.class {
                continue;
            }
            // Orientation-aware: opposing faces of nearby walls must not merge.
            let angle = landmark
                .normal
                .dot(&normal)
                .clampr(-T::one(), T::one())
                .acos();
            if angle > angle_tol {
                continue;
            }
            let offset = (landmark.d - d).abs();
            if offset > config.offset_tol {
                continue;
            }
            if extent_gap(&landmark.extent, &extent) > config.extent_gap_max {
                continue;
            }
            let error = angle / angle_tol + offset / config.offset_tol;
            if best.is_none_or(|(e, _)| error < e) {
                best = Some((error, *id));
            }
        }

        match best {
            Some((_, id)) => {
                let landmark = self.landmarks.get_mut(&id).expect("candidate exists");
                let w_old = T::of(landmark.support as f64);
                let w_new = T::of(support as f64);
                let merged = landmark.normal.into_inner() * w_old + normal.into_inner() * w_new;
                landmark.normal = Unit::new_normalize(merged);
                landmark.d = (landmark.d * w_old + d * w_new) / (w_old + w_new);
                landmark.support += support;
                landmark.observations.push(component.frame_timestamp);
                landmark.extent =
                    landmark
                        .extent
                        .union_on_plane(&extent, &landmark.normal, landmark.d);
                subsample_into(
                    &mut landmark.stored_points,
                    &world_points,
                    config.stored_points_per_observation,
                );
                id
            }
            None => {
                let id = LandmarkId(self.next_id);
                self.next_id += 1;
                let mut stored_points = Vec::new();
                subsample_into(
                    &mut stored_points,
                    &world_points,
                    config.stored_points_per_observation,
                );
                self.landmarks.insert(
                    id,
                    PlaneLandmark {
                        id,
                        class: component.class,
                        normal,
                        d,
                        support,
                        observations: vec![component.frame_timestamp],
                        extent,
                        stored_points,
                    },
                );
                id
            }
        }
    }

    pub fn set_structures(&mut self, structures: Vec<StructureNode<T>>) {
        self.edges.clear();
        for (idx, node) in structures.iter().enumerate() {
            for &wall in &node.wall_ids {
                self.edges.push((idx, wall));
            }
            if let Some(ground) = node.ground_id {
                self.edges.push((idx, ground));
            }
        }
        self.structures = structures;
    }

    /// Line-oriented export: one `landmark` record per landmark (id order),
    /// then `structure`, `footprint` and `edge` records. All floats are
    /// printed with six decimals.
    pub fn write_export<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# scene graph export v1")?;
        writeln!(
            w,
            "# landmark <id> <class> <nx> <ny> <nz> <d> <support> <observations> \
             <cx> <cy> <cz> <a1x> <a1y> <a1z> <a2x> <a2y> <a2z> <h1> <h2>"
        )?;
        for l in self.landmarks.values() {
            let n = l.normal.into_inner();
            let e = &l.extent;
            let a1 = e.axes[0].into_inner();
            let a2 = e.axes[1].into_inner();
            writeln!(
                w,
                "landmark {} {} {:.6} {:.6} {:.6} {:.6} {} {} {:.6} {:.6} {:.6} {:.6} {:.6} {:.6} {:.6} {:.6} {:.6} {:.6} {:.6}",
                l.id,
                l.class,
                n.x.as_f64(),
                n.y.as_f64(),
                n.z.as_f64(),
                l.d.as_f64(),
                l.support,
                l.observations.len(),
                e.center.x.as_f64(),
                e.center.y.as_f64(),
                e.center.z.as_f64(),
                a1.x.as_f64(),
                a1.y.as_f64(),
                a1.z.as_f64(),
                a2.x.as_f64(),
                a2.y.as_f64(),
                a2.z.as_f64(),
                e.half_lengths[0].as_f64(),
                e.half_lengths[1].as_f64(),
            )?;
        }
        for (idx, s) in self.structures.iter().enumerate() {
            let walls: Vec<String> = s.wall_ids.iter().map(|id| id.to_string()).collect();
            let ground = s
                .ground_id
                .map(|id| id.to_string())
                .unwrap_or_else(|| "none".into());
            writeln!(
                w,
                "structure {} {} walls={} ground={}",
                idx,
                s.kind,
                walls.join(","),
                ground
            )?;
            let coords: Vec<String> = s
                .footprint
                .iter()
                .map(|p| format!("{:.6} {:.6}", p.x.as_f64(), p.y.as_f64()))
                .collect();
            writeln!(w, "footprint {} {}", idx, coords.join(" "))?;
        }
        for (idx, id) in &self.edges {
            writeln!(w, "edge {} {}", idx, id)?;
        }
        Ok(())
    }

    pub fn export_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_export(&mut buf).expect("write to vec");
        String::from_utf8(buf).expect("utf8 export")
    }

    pub fn export_to_file(&self, path: &std::path::Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_export(std::io::BufWriter::new(file))
            .map_err(|e| Error::io(path, e))
    }
}

/// Appends at most `cap` points, evenly strided over the input.
fn subsample_into<T: Real>(target: &mut Vec<Point<T>>, points: &[Point<T>], cap: usize) {
    if points.is_empty() || cap == 0 {
        return;
    }
    let step = points.len().div_ceil(cap);
    target.extend(points.iter().step_by(step).copied());
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cloud::FrameId;
    use crate::plane::Plane;
    use approx::assert_relative_eq;
    use nalgebra::Vector3;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn wall_component(
        normal: Vector3<f64>,
        d: f64,
        center_u: f64,
        timestamp: f64,
        class: SemanticClass,
    ) -> ValidatedComponent<f64> {
        // Camera-frame component on the given plane; points spread around
        // (center_u, 0) in plane coordinates.
        let n = Unit::new_normalize(normal);
        let (e1, e2) = crate::plane::plane_basis(&n);
        let origin = -n.into_inner() * d;
        let mut points = Vec::new();
        for i in 0..20 {
            for j in 0..20 {
                let u = center_u + (i as f64 / 19.0 - 0.5) * 2.0;
                let v = (j as f64 / 19.0 - 0.5) * 2.0;
                points.push(Point {
                    position: origin + e1 * u + e2 * v,
                    color: [50, 100, 150],
                });
            }
        }
        ValidatedComponent {
            plane: Plane {
                normal: n,
                d,
                inliers: (0..points.len()).collect(),
                frame_id: FrameId::Camera,
                rms_residual: 0.0,
            },
            class,
            match_score: 1.0,
            frame_timestamp: timestamp,
            points,
        }
    }

    #[test]
    fn to_world_identity_is_noop() {
        let n = Unit::new_normalize(Vector3::new(0.0, 0.0, 1.0));
        let pose = Pose::identity(0.0);
        let (nw, dw) = to_world(&n, -2.0, &pose);
        assert_relative_eq!(nw.into_inner(), Vector3::new(0.0, 0.0, 1.0), epsilon = 1e-12);
        assert_relative_eq!(dw, -2.0);
    }

    #[test]
    fn to_world_translation_along_normal() {
        let n = Unit::new_normalize(Vector3::new(0.0, 0.0, 1.0));
        let mut pose = Pose::identity(0.0);
        pose.translation = Vector3::new(0.0, 0.0, 0.7); // t = normal * s
        let (_, dw) = to_world(&n, -2.0, &pose);
        assert_relative_eq!(dw, -2.7);
    }

    #[test]
    fn to_world_agrees_with_point_transform_oracle() {
        // Transforming sample points and refitting must give the same plane.
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let pose = Pose::<f64>::looking_at(
            Vector3::new(0.4, -1.2, 0.9),
            Vector3::new(0.6, 0.3, -0.2),
            Vector3::z(),
            0.0,
        )
        .unwrap();
        let n = Unit::new_normalize(Vector3::new(0.3, -0.4, 0.85));
        let d = -1.7;
        let (e1, e2) = crate::plane::plane_basis(&n);
        let origin = -n.into_inner() * d;
        let points: Vec<Vector3<f64>> = (0..50)
            .map(|_| {
                let u = (rng.random::<f64>() - 0.5) * 3.0;
                let v = (rng.random::<f64>() - 0.5) * 3.0;
                pose.transform_point(&(origin + e1 * u + e2 * v))
            })
            .collect();
        let (n_fit, d_fit) = crate::plane::tls_fit(&points).unwrap();
        let (n_w, d_w) = to_world(&n, d, &pose);
        let dot = n_fit.dot(&n_w);
        let (n_fit, d_fit) = if dot < 0.0 {
            (-n_fit.into_inner(), -d_fit)
        } else {
            (n_fit.into_inner(), d_fit)
        };
        assert!(n_fit.dot(&n_w).min(1.0).acos() <= 1e-6);
        assert!((d_fit - d_w).abs() <= 1e-6);
    }

    #[test]
    fn reobserved_wall_merges_into_one_landmark() {
        let mut graph = SceneGraph::new();
        let config = AssociationConfig::default();
        let pose = Pose::identity(0.0);
        let c0 = wall_component(Vector3::z(), -2.0, 0.0, 0.0, SemanticClass::Wall);
        let c1 = wall_component(Vector3::z(), -2.0, 0.0, 0.1, SemanticClass::Wall);
        let id0 = graph.associate(&c0, &pose, &config);
        let id1 = graph.associate(&c1, &pose, &config);
        assert_eq!(id0, id1);
        assert_eq!(graph.landmark_count(), 1);
        let l = graph.landmark(id0).unwrap();
        assert_eq!(l.support, c0.support() + c1.support());
        assert_eq!(l.observations.len(), 2);
    }

    #[test]
    fn reobservation_from_two_poses_merges() {
        // The same world wall (x = 0, normal +x) seen from two camera poses:
        // camera-frame components differ, the world-frame landmark is one.
        let wall_center = Vector3::new(0.0, 1.5, 1.25);
        let poses = [
            Pose::<f64>::looking_at(
                Vector3::new(2.0, 1.5, 1.3),
                Vector3::new(-1.0, 0.0, 0.0),
                Vector3::z(),
                0.0,
            )
            .unwrap(),
            Pose::<f64>::looking_at(
                Vector3::new(1.5, 2.5, 1.0),
                wall_center - Vector3::new(1.5, 2.5, 1.0),
                Vector3::z(),
                0.1,
            )
            .unwrap(),
        ];
        let mut graph = SceneGraph::new();
        let config = AssociationConfig::default();
        for pose in &poses {
            // World-frame points on the wall, expressed in the camera frame.
            let points: Vec<Point<f64>> = (0..200)
                .map(|i| {
                    let u = (i % 20) as f64 / 19.0 * 2.0 - 1.0;
                    let v = (i / 20) as f64 / 9.0 * 2.0 - 1.0;
                    let world = Vector3::new(0.0, 1.5 + u, 1.25 + v * 0.8);
                    let cam = pose.rotation.inverse() * (world - pose.translation);
                    Point {
                        position: cam,
                        color: [0, 0, 0],
                    }
                })
                .collect();
            let positions: Vec<Vector3<f64>> = points.iter().map(|p| p.position).collect();
            let (n, d) = crate::plane::tls_fit(&positions).unwrap();
            let (n, d) = crate::plane::orient_toward_origin(n, d);
            let component = ValidatedComponent {
                plane: Plane {
                    normal: n,
                    d,
                    inliers: (0..points.len()).collect(),
                    frame_id: FrameId::Camera,
                    rms_residual: 0.0,
                },
                class: SemanticClass::Wall,
                match_score: 1.0,
                frame_timestamp: pose.timestamp,
                points,
            };
            graph.associate(&component, pose, &config);
        }
        assert_eq!(graph.landmark_count(), 1);
        let landmark = graph.landmarks().next().unwrap();
        assert_eq!(landmark.support, 400);
        assert!((landmark.normal.x.abs() - 1.0).abs() < 1e-6);
        assert!(landmark.d.abs() < 1e-6);
    }

    #[test]
    fn parallel_walls_three_meters_apart_stay_separate() {
        let mut graph = SceneGraph::new();
        let config = AssociationConfig::default();
        let pose = Pose::identity(0.0);
        let c0 = wall_component(Vector3::z(), -2.0, 0.0, 0.0, SemanticClass::Wall);
        let c1 = wall_component(Vector3::z(), -5.0, 0.0, 0.1, SemanticClass::Wall);
        graph.associate(&c0, &pose, &config);
        graph.associate(&c1, &pose, &config);
        assert_eq!(graph.landmark_count(), 2);
    }

    #[test]
    fn class_mismatch_never_merges() {
        let mut graph = SceneGraph::new();
        let config = AssociationConfig::default();
        let pose = Pose::identity(0.0);
        let wall = wall_component(Vector3::z(), -2.0, 0.0, 0.0, SemanticClass::Wall);
        let ground = wall_component(Vector3::z(), -2.0, 0.0, 0.1, SemanticClass::Ground);
        graph.associate(&wall, &pose, &config);
        graph.associate(&ground, &pose, &config);
        assert_eq!(graph.landmark_count(), 2);
    }

    #[test]
    fn distant_collinear_segments_stay_separate() {
        // Same plane equation, but patches 4 m apart in-plane: the extent
        // gap gate must prevent the merge.
        let mut graph = SceneGraph::new();
        let config = AssociationConfig::default();
        let pose = Pose::identity(0.0);
        let c0 = wall_component(Vector3::z(), -2.0, 0.0, 0.0, SemanticClass::Wall);
        let c1 = wall_component(Vector3::z(), -2.0, 6.0, 0.1, SemanticClass::Wall);
        graph.associate(&c0, &pose, &config);
        graph.associate(&c1, &pose, &config);
        assert_eq!(graph.landmark_count(), 2);
    }

    #[test]
    fn noisy_reobservations_converge_to_truth() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let mut graph = SceneGraph::new();
        let config = AssociationConfig::default();
        let pose = Pose::identity(0.0);
        for k in 0..10 {
            let tilt = (rng.random::<f64>() - 0.5) * 2.0 * 2f64.to_radians();
            let axis = (rng.random::<f64>() - 0.5) * 2.0;
            let normal = Vector3::new(tilt.sin() * axis.cos(), tilt.sin() * axis.sin(), tilt.cos());
            let d = -2.0 + (rng.random::<f64>() - 0.5) * 0.1;
            let c = wall_component(normal, d, 0.0, k as f64 * 0.1, SemanticClass::Wall);
            graph.associate(&c, &pose, &config);
        }
        assert_eq!(graph.landmark_count(), 1);
        let l = graph.landmarks().next().unwrap();
        let angle = l.normal.z.abs().min(1.0).acos().to_degrees();
        assert!(angle <= 1.0, "merged normal off by {angle} deg");
    }

    #[test]
    fn merge_order_insensitive_within_tolerance() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let observations: Vec<ValidatedComponent<f64>> = (0..10)
            .map(|k| {
                let tilt = (rng.random::<f64>() - 0.5) * 2.0 * 2f64.to_radians();
                let normal = Vector3::new(tilt.sin(), 0.0, tilt.cos());
                wall_component(normal, -2.0, 0.0, k as f64, SemanticClass::Wall)
            })
            .collect();
        let pose = Pose::identity(0.0);
        let config = AssociationConfig::default();

        let run = |order: Vec<usize>| {
            let mut graph = SceneGraph::new();
            for i in order {
                graph.associate(&observations[i], &pose, &config);
            }
            assert_eq!(graph.landmark_count(), 1);
            let normal = *graph.landmarks().next().unwrap().normal;
            normal
        };
        let forward = run((0..10).collect());
        let backward = run((0..10).rev().collect());
        let angle = forward.dot(&backward).min(1.0).acos().to_degrees();
        assert!(angle < 0.1, "permutation changed normal by {angle} deg");
    }

    #[test]
    fn export_is_deterministic_and_line_oriented() {
        let mut graph = SceneGraph::new();
        let pose = Pose::identity(0.0);
        let config = AssociationConfig::default();
        graph.associate(
            &wall_component(Vector3::z(), -2.0, 0.0, 0.0, SemanticClass::Wall),
            &pose,
            &config,
        );
        graph.associate(
            &wall_component(Vector3::x(), -1.0, 0.0, 0.0, SemanticClass::Ground),
            &pose,
            &config,
        );
        let a = graph.export_string();
        let b = graph.export_string();
        assert_eq!(a, b);
        assert_eq!(a.lines().filter(|l| l.starts_with("landmark ")).count(), 2);
    }
}
