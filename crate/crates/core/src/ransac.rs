//! Iterative RANSAC plane extraction. Hypotheses come from random
//! non-collinear triples, the consensus winner is refined by a
//! total-least-squares refit, and extraction greedily removes each winner's
//! inliers until the cloud is exhausted.

use nalgebra::{Unit, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::plane::{orient_toward_origin, tls_fit, Plane};
use crate::scalar::Real;

/// Cloud size the default `min_inliers` is calibrated for; `scaled_to`
/// rescales proportionally for smaller or larger clouds.
pub const NOMINAL_CLOUD_SIZE: usize = 30_000;

/// Confidence used to terminate hypothesis sampling early once the best
/// consensus is large enough.
const EARLY_EXIT_CONFIDENCE: f64 = 0.9999;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RansacConfig<T: Real> {
    pub max_iterations: usize,
    /// Inlier threshold in meters (point-to-plane distance).
    pub epsilon_inlier: T,
    pub min_inliers: usize,
    pub max_planes: usize,
    pub random_seed: u64,
}

impl<T: Real> Default for RansacConfig<T> {
    fn default() -> Self {
        RansacConfig {
            max_iterations: 500,
            epsilon_inlier: T::of(0.02),
            min_inliers: 200,
            max_planes: 8,
            random_seed: 7,
        }
    }
}

impl<T: Real> RansacConfig<T> {
    // Negated comparison so a NaN threshold fails validation.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 || self.min_inliers == 0 || self.max_planes == 0 {
            return Err(Error::Config("RANSAC counts must be positive".into()));
        }
        if !(self.epsilon_inlier > T::zero()) {
            return Err(Error::Config("epsilon_inlier must be positive".into()));
        }
        Ok(())
    }

    /// Support threshold rescaled proportionally to the actual cloud size
    /// (floored at 50) so one setting works across resolutions and strides.
    pub fn scaled_to(&self, cloud_len: usize) -> Self {
        let scaled =
            (self.min_inliers as f64 * cloud_len as f64 / NOMINAL_CLOUD_SIZE as f64).round();
        RansacConfig {
            min_inliers: (scaled as usize).max(50),
            ..*self
        }
    }
}

struct SubsetFit<T: Real> {
    normal: Unit<Vector3<T>>,
    d: T,
    /// Positions into the subset slice handed to `fit_on_subset`.
    inliers_local: Vec<usize>,
    rms: T,
}

/// Runs one RANSAC round over `cloud[indices]`. Shared by the public entry
/// points and by the semantic extraction pass.
fn fit_on_subset<T: Real>(
    cloud: &PointCloud<T>,
    indices: &[usize],
    config: &RansacConfig<T>,
    rng: &mut ChaCha8Rng,
) -> Option<SubsetFit<T>> {
    let n = indices.len();
    if n < 3 {
        return None;
    }
    let eps = config.epsilon_inlier;
    let degenerate = T::of(1e-12);

    let mut best: Option<(usize, Unit<Vector3<T>>, T)> = None;
    let mut budget = config.max_iterations;
    let mut iteration = 0;
    while iteration < budget {
        iteration += 1;
        let sample = rand::seq::index::sample(rng, n, 3);
        let a = *cloud.position(indices[sample.index(0)]);
        let b = *cloud.position(indices[sample.index(1)]);
        let c = *cloud.position(indices[sample.index(2)]);
        let cross = (b - a).cross(&(c - a));
        if cross.norm() <= degenerate {
            continue; // collinear sample
        }
        let normal = Unit::new_normalize(cross);
        let d = -normal.dot(&a);
        let count = indices
            .iter()
            .filter(|&&i| (normal.dot(cloud.position(i)) + d).abs() <= eps)
            .count();
        if best.as_ref().is_none_or(|(bc, _, _)| count > *bc) {
            best = Some((count, normal, d));
            // Standard adaptive termination: stop once enough samples were
            // drawn to have seen an all-inlier triple with high confidence.
            let w = count as f64 / n as f64;
            let miss = (1.0 - w * w * w).max(f64::EPSILON);
            let needed = if miss < 1.0 {
                ((1.0 - EARLY_EXIT_CONFIDENCE).ln() / miss.ln()).ceil() as usize
            } else {
                config.max_iterations
            };
            budget = needed.clamp(iteration, config.max_iterations);
        }
    }

    let (best_count, hypo_normal, hypo_d) = best?;
    if best_count < config.min_inliers.max(3) {
        return None;
    }

    let consensus: Vec<usize> = (0..n)
        .filter(|&k| (hypo_normal.dot(cloud.position(indices[k])) + hypo_d).abs() <= eps)
        .collect();
    let consensus_points: Vec<Vector3<T>> = consensus
        .iter()
        .map(|&k| *cloud.position(indices[k]))
        .collect();

    let (normal, d) = tls_fit(&consensus_points).unwrap_or((hypo_normal, hypo_d));
    let (normal, d) = orient_toward_origin(normal, d);

    // Re-evaluate membership against the refined plane.
    let mut inliers_local = Vec::with_capacity(best_count);
    let mut sq_sum = T::zero();
    for (k, &index) in indices.iter().enumerate() {
        let r = normal.dot(cloud.position(index)) + d;
        if r.abs() <= eps {
            inliers_local.push(k);
            sq_sum += r * r;
        }
    }
    if inliers_local.len() < config.min_inliers.max(3) {
        return None;
    }
    let rms = (sq_sum / T::of(inliers_local.len() as f64)).sqrt();
    Some(SubsetFit {
        normal,
        d,
        inliers_local,
        rms,
    })
}

/// Fits the single best plane in the cloud, or `None` when no candidate
/// reaches `min_inliers`.
pub fn fit_plane_ransac<T: Real>(
    cloud: &PointCloud<T>,
    config: &RansacConfig<T>,
) -> Option<Plane<T>> {
    let indices: Vec<usize> = (0..cloud.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.random_seed);
    fit_on_subset(cloud, &indices, config, &mut rng).map(|fit| Plane {
        normal: fit.normal,
        d: fit.d,
        inliers: fit.inliers_local, // identity mapping for the full cloud
        frame_id: cloud.frame_id,
        rms_residual: fit.rms,
    })
}

/// Extracts all planes by repeated fitting with greedy inlier removal.
/// Returned planes are sorted by decreasing inlier count; their inlier sets
/// are disjoint and index into the original cloud.
pub fn extract_planes<T: Real>(cloud: &PointCloud<T>, config: &RansacConfig<T>) -> Vec<Plane<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.random_seed);
    let mut active: Vec<usize> = (0..cloud.len()).collect();
    let mut planes: Vec<Plane<T>> = Vec::new();

    while planes.len() < config.max_planes && active.len() >= config.min_inliers.max(3) {
        let Some(fit) = fit_on_subset(cloud, &active, config, &mut rng) else {
            break;
        };
        let inliers: Vec<usize> = fit.inliers_local.iter().map(|&k| active[k]).collect();
        let mut taken = vec![false; active.len()];
        for &k in &fit.inliers_local {
            taken[k] = true;
        }
        active = active
            .iter()
            .enumerate()
            .filter(|&(k, _)| !taken[k])
            .map(|(_, &i)| i)
            .collect();
        planes.push(Plane {
            normal: fit.normal,
            d: fit.d,
            inliers,
            frame_id: cloud.frame_id,
            rms_residual: fit.rms,
        });
    }

    planes.sort_by_key(|p| std::cmp::Reverse(p.inliers.len()));
    planes
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cloud::{FrameId, Point, PointCloud};
    use approx::assert_relative_eq;
    use rand::Rng;

    /// Independent oracle: TLS via SVD of the centered data matrix (a
    /// different algebraic route than the covariance eigendecomposition used
    /// by the implementation's refit).
    fn svd_plane_oracle(points: &[Vector3<f64>]) -> (Unit<Vector3<f64>>, f64) {
        let n = points.len();
        let mut centroid = Vector3::zeros();
        for p in points {
            centroid += p;
        }
        centroid /= n as f64;
        let mut mat = nalgebra::DMatrix::<f64>::zeros(n, 3);
        for (i, p) in points.iter().enumerate() {
            let q = p - centroid;
            mat[(i, 0)] = q.x;
            mat[(i, 1)] = q.y;
            mat[(i, 2)] = q.z;
        }
        let svd = mat.svd(false, true);
        let vt = svd.v_t.unwrap();
        // Right singular vector of the smallest singular value.
        let mut smallest = 0;
        for k in 1..3 {
            if svd.singular_values[k] < svd.singular_values[smallest] {
                smallest = k;
            }
        }
        let normal = Unit::new_normalize(Vector3::new(
            vt[(smallest, 0)],
            vt[(smallest, 1)],
            vt[(smallest, 2)],
        ));
        let d = -normal.dot(&centroid);
        orient_toward_origin(normal, d)
    }

    fn cloud_from(positions: Vec<Vector3<f64>>) -> PointCloud<f64> {
        PointCloud::from_points(
            positions
                .into_iter()
                .map(|position| Point {
                    position,
                    color: [0, 0, 0],
                })
                .collect(),
            FrameId::Camera,
        )
    }

    fn grid_on_plane(
        normal: Vector3<f64>,
        d: f64,
        count: usize,
        extent: f64,
        seed: u64,
    ) -> Vec<Vector3<f64>> {
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = Unit::new_normalize(normal);
        let (e1, e2) = crate::plane::plane_basis(&n);
        let origin = -n.into_inner() * d;
        (0..count)
            .map(|_| {
                let u = (rng.random::<f64>() * 2.0 - 1.0) * extent;
                let v = (rng.random::<f64>() * 2.0 - 1.0) * extent;
                origin + e1 * u + e2 * v
            })
            .collect()
    }

    fn small_config() -> RansacConfig<f64> {
        RansacConfig {
            min_inliers: 50,
            ..RansacConfig::default()
        }
    }

    #[test]
    fn exact_plane_matches_closed_form_oracle() {
        // 100 exact points on z = 2: expect normal (0,0,-1), d = 2 after the
        // face-the-camera flip.
        let mut positions = Vec::new();
        for i in 0..10 {
            for j in 0..10 {
                positions.push(Vector3::new(i as f64 * 0.3 - 1.5, j as f64 * 0.3 - 1.5, 2.0));
            }
        }
        let oracle = svd_plane_oracle(&positions);
        let plane = fit_plane_ransac(&cloud_from(positions), &small_config()).unwrap();
        assert_relative_eq!(plane.normal.z, -1.0, epsilon = 1e-9);
        assert_relative_eq!(plane.d, 2.0, epsilon = 1e-9);
        let angle = plane.normal.dot(&oracle.0).abs().min(1.0).acos();
        assert!(angle <= 1e-6, "angle to oracle {angle}");
        assert!((plane.d - oracle.1).abs() <= 1e-6);
        assert_eq!(plane.inliers.len(), 100);
    }

    #[test]
    fn two_points_yield_none() {
        let cloud = cloud_from(vec![
            Vector3::new(0.0, 0.0, 1.0),
            Vector3::new(1.0, 0.0, 1.0),
        ]);
        assert!(fit_plane_ransac(&cloud, &small_config()).is_none());
    }

    #[test]
    fn collinear_cloud_yields_none() {
        let positions: Vec<_> = (0..100)
            .map(|i| Vector3::new(i as f64 * 0.01, i as f64 * 0.02, 1.0 + i as f64 * 0.005))
            .collect();
        assert!(fit_plane_ransac(&cloud_from(positions), &small_config()).is_none());
    }

    #[test]
    fn noisy_plane_recovered_within_tolerance() {
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let normal = Unit::new_normalize(Vector3::new(0.0, 0.0, 1.0));
        let mut positions = grid_on_plane(*normal, -2.0, 500, 1.5, 4);
        let gauss = rand_distr::Normal::new(0.0f64, 0.005).unwrap();
        for p in &mut positions {
            *p += *normal * rand_distr::Distribution::sample(&gauss, &mut rng);
        }
        let plane = fit_plane_ransac(&cloud_from(positions), &small_config()).unwrap();
        let angle = plane.normal.z.abs().min(1.0).acos().to_degrees();
        assert!(angle <= 1.0, "normal off by {angle} deg");
        assert!((plane.d.abs() - 2.0).abs() <= 0.01);
    }

    #[test]
    fn refit_keeps_consensus_support() {
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        let normal = Unit::new_normalize(Vector3::new(0.3, -0.5, 0.8));
        let mut positions = grid_on_plane(*normal, -1.5, 800, 2.0, 17);
        let gauss = rand_distr::Normal::new(0.0f64, 0.004).unwrap();
        for p in &mut positions {
            *p += *normal * rand_distr::Distribution::sample(&gauss, &mut rng);
        }
        let cloud = cloud_from(positions);
        let config = small_config();
        let plane = fit_plane_ransac(&cloud, &config).unwrap();
        // All reported inliers satisfy the threshold against the refit plane.
        for &i in &plane.inliers {
            assert!(plane.distance(cloud.position(i)) <= config.epsilon_inlier);
        }
        // The refit keeps at least 95% of the hypothesis consensus; with
        // sigma = 4 mm and eps = 20 mm virtually nothing is lost.
        assert!(plane.inliers.len() as f64 >= 0.95 * 760.0);
    }

    #[test]
    fn determinism_same_seed_same_output() {
        let positions = grid_on_plane(Vector3::new(0.2, 0.3, 0.9), -2.2, 600, 2.0, 8);
        let cloud = cloud_from(positions);
        let config = small_config();
        let a = extract_planes(&cloud, &config);
        let b = extract_planes(&cloud, &config);
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b.iter()) {
            assert_eq!(x.inliers, y.inliers);
            assert_eq!(x.d, y.d);
            assert_eq!(x.normal, y.normal);
        }
    }

    #[test]
    fn extract_empty_cloud() {
        let cloud = PointCloud::<f64>::new(FrameId::Camera);
        assert!(extract_planes(&cloud, &small_config()).is_empty());
    }

    #[test]
    fn extract_two_perpendicular_planes() {
        let mut positions = grid_on_plane(Vector3::new(0.0, 0.0, 1.0), -3.0, 500, 1.8, 21);
        positions.extend(grid_on_plane(Vector3::new(1.0, 0.0, 0.0), -2.0, 500, 1.8, 22));
        let cloud = cloud_from(positions);
        let planes = extract_planes(&cloud, &small_config());
        assert_eq!(planes.len(), 2);
        let angle = planes[0]
            .normal
            .dot(&planes[1].normal)
            .abs()
            .min(1.0)
            .acos()
            .to_degrees();
        assert!((angle - 90.0).abs() <= 0.5, "inter-normal angle {angle}");
        // Disjoint inlier sets.
        let mut seen = std::collections::HashSet::new();
        for plane in &planes {
            for &i in &plane.inliers {
                assert!(seen.insert(i), "index {i} assigned twice");
            }
        }
    }

    #[test]
    fn extract_box_room_cloud_finds_six_planes() {
        // Six faces of a 4 x 3 x 2.5 box sampled as a free point set.
        let mut positions = Vec::new();
        positions.extend(grid_on_plane(Vector3::new(1.0, 0.0, 0.0), 0.0, 700, 1.2, 31));
        positions.extend(grid_on_plane(Vector3::new(1.0, 0.0, 0.0), -4.0, 700, 1.2, 32));
        positions.extend(grid_on_plane(Vector3::new(0.0, 1.0, 0.0), 0.0, 700, 1.2, 33));
        positions.extend(grid_on_plane(Vector3::new(0.0, 1.0, 0.0), -3.0, 700, 1.2, 34));
        positions.extend(grid_on_plane(Vector3::new(0.0, 0.0, 1.0), 0.0, 700, 1.2, 35));
        positions.extend(grid_on_plane(Vector3::new(0.0, 0.0, 1.0), -2.5, 700, 1.2, 36));
        let truth: [(Vector3<f64>, f64); 6] = [
            (Vector3::new(1.0, 0.0, 0.0), 0.0),
            (Vector3::new(1.0, 0.0, 0.0), 4.0),
            (Vector3::new(0.0, 1.0, 0.0), 0.0),
            (Vector3::new(0.0, 1.0, 0.0), 3.0),
            (Vector3::new(0.0, 0.0, 1.0), 0.0),
            (Vector3::new(0.0, 0.0, 1.0), 2.5),
        ];
        let planes = extract_planes(&cloud_from(positions), &small_config());
        assert_eq!(planes.len(), 6);
        for plane in &planes {
            let matched = truth.iter().any(|(n, d)| {
                let angle = plane.normal.dot(n).abs().min(1.0).acos().to_degrees();
                angle <= 1.0 && (plane.d.abs() - d.abs()).abs() <= 0.02
            });
            assert!(
                matched,
                "plane n={:?} d={} has no ground-truth match",
                plane.normal, plane.d
            );
        }
    }

    #[test]
    fn single_precision_instantiation() {
        let mut positions = Vec::new();
        for i in 0..12 {
            for j in 0..12 {
                positions.push(nalgebra::Vector3::new(
                    i as f32 * 0.2 - 1.2,
                    j as f32 * 0.2 - 1.2,
                    2.0f32,
                ));
            }
        }
        let cloud = PointCloud::<f32>::from_points(
            positions
                .into_iter()
                .map(|position| Point {
                    position,
                    color: [0, 0, 0],
                })
                .collect(),
            FrameId::Camera,
        );
        let config = RansacConfig::<f32> {
            min_inliers: 50,
            ..RansacConfig::default()
        };
        let plane = fit_plane_ransac(&cloud, &config).unwrap();
        assert!((plane.normal.z + 1.0).abs() < 1e-4);
        assert!((plane.d - 2.0).abs() < 1e-4);
    }

    #[test]
    fn scaled_config_floors_at_fifty() {
        let config = RansacConfig::<f64>::default();
        assert_eq!(config.scaled_to(30_000).min_inliers, 200);
        assert_eq!(config.scaled_to(3_000).min_inliers, 50);
        assert_eq!(config.scaled_to(60_000).min_inliers, 400);
    }

    #[test]
    fn validate_rejects_zero_fields() {
        let config = RansacConfig::<f64> {
            max_iterations: 0,
            ..RansacConfig::default()
        };
        assert!(config.validate().is_err());
        let config = RansacConfig::<f64> {
            epsilon_inlier: 0.0,
            ..RansacConfig::default()
        };
        assert!(config.validate().is_err());
    }

    #[test]
    fn random_plane_oracle_equivalence() {
        // Noise-free oracle equivalence across random orientations.
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for trial in 0..5 {
            let axis = Vector3::new(
                rng.random::<f64>() - 0.5,
                rng.random::<f64>() - 0.5,
                rng.random::<f64>() + 0.2,
            );
            let d = -(1.0 + rng.random::<f64>() * 2.0);
            let positions = grid_on_plane(axis, d, 150, 1.5, 100 + trial);
            let oracle = svd_plane_oracle(&positions);
            let plane = fit_plane_ransac(&cloud_from(positions), &small_config()).unwrap();
            let angle = plane.normal.dot(&oracle.0).abs().min(1.0).acos();
            assert!(angle <= 1e-6);
            assert!((plane.d - oracle.1).abs() <= 1e-6);
        }
    }
}
