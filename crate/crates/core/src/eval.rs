//! Recognition metrics: greedy landmark-to-ground-truth matching and the
//! object-level precision/recall/F1 report.

use crate::graph::{LandmarkId, PlaneLandmark};
use crate::scalar::Real;
use crate::synth::ScenePlane;

/// Object-level recognition outcome. `precision = tp / (tp + fp)` and
/// `recall = tp / (tp + fn)` when the denominators are nonzero, else 0.
#[derive(Debug, Clone, PartialEq)]
pub struct RecognitionReport {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Matched landmark id and the index of its ground-truth plane.
    pub matches: Vec<(LandmarkId, usize)>,
}

/// Harmonic mean of precision and recall; 0 when both are 0.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

pub fn report_from_counts(
    true_positives: usize,
    false_positives: usize,
    false_negatives: usize,
    matches: Vec<(LandmarkId, usize)>,
) -> RecognitionReport {
    let ratio = |num: usize, den: usize| {
        if den == 0 {
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let precision = ratio(true_positives, true_positives + false_positives);
    let recall = ratio(true_positives, true_positives + false_negatives);
    RecognitionReport {
        true_positives,
        false_positives,
        false_negatives,
        precision,
        recall,
        f1: f1_score(precision, recall),
        matches,
    }
}

/// Greedy one-to-one matching by smallest combined error
/// (`angle/angle_tol + |delta d|/offset_tol`) among same-class pairs within
/// both tolerances. Matched landmarks are TPs, unmatched landmarks FPs
/// (spurious detections), unmatched ground-truth components FNs. Truth
/// entries that are not building components are ignored.
pub fn match_to_ground_truth<T: Real>(
    landmarks: &[&PlaneLandmark<T>],
    truth: &[ScenePlane<T>],
    angle_tol_deg: T,
    offset_tol: T,
) -> RecognitionReport {
    let truth_components: Vec<(usize, &ScenePlane<T>)> = truth
        .iter()
        .enumerate()
        .filter(|(_, p)| p.class.is_building_component())
        .collect();

    let angle_tol = angle_tol_deg.radians();
    let mut candidates: Vec<(f64, usize, usize)> = Vec::new(); // (error, landmark idx, truth idx)
    for (li, landmark) in landmarks.iter().enumerate() {
        for &(ti, gt) in &truth_components {
            if landmark.class != gt.class {
                continue;
            }
            // Orientation-agnostic: compare against the flipped plane when
            // the normals disagree in sign.
            let dot = landmark.normal.dot(&gt.normal);
            let angle = dot.abs().clampr(T::zero(), T::one()).acos();
            if angle > angle_tol {
                continue;
            }
            let delta_d = if dot >= T::zero() {
                (landmark.d - gt.d).abs()
            } else {
                (landmark.d + gt.d).abs()
            };
            if delta_d > offset_tol {
                continue;
            }
            let error = (angle / angle_tol + delta_d / offset_tol).as_f64();
            candidates.push((error, li, ti));
        }
    }
    candidates.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .expect("finite errors")
            .then(a.2.cmp(&b.2))
            .then(a.1.cmp(&b.1))
    });

    let mut used_landmark = vec![false; landmarks.len()];
    let mut used_truth = vec![false; truth.len()];
    let mut matches = Vec::new();
    for (_, li, ti) in candidates {
        if used_landmark[li] || used_truth[ti] {
            continue;
        }
        used_landmark[li] = true;
        used_truth[ti] = true;
        matches.push((landmarks[li].id, ti));
    }

    let tp = matches.len();
    let fp = landmarks.len() - tp;
    let fn_count = truth_components.len() - tp;
    report_from_counts(tp, fp, fn_count, matches)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plane::PlaneExtent;
    use crate::semantic::SemanticClass;
    use crate::synth::rect_plane;
    use nalgebra::{Unit, Vector3};

    fn landmark_from(id: u32, plane: &ScenePlane<f64>) -> PlaneLandmark<f64> {
        PlaneLandmark {
            id: LandmarkId(id),
            class: plane.class,
            normal: plane.normal,
            d: plane.d,
            support: 100,
            observations: vec![0.0],
            extent: plane.extent,
            stored_points: vec![],
        }
    }

    fn landmark_with(id: u32, class: SemanticClass, normal: Vector3<f64>, d: f64) -> PlaneLandmark<f64> {
        let n = Unit::new_normalize(normal);
        PlaneLandmark {
            id: LandmarkId(id),
            class,
            normal: n,
            d,
            support: 100,
            observations: vec![0.0],
            extent: PlaneExtent::from_rect(
                -n.into_inner() * d,
                Unit::new_normalize(crate::plane::plane_basis(&n).0),
                Unit::new_normalize(crate::plane::plane_basis(&n).1),
                [1.0, 1.0],
            ),
            stored_points: vec![],
        }
    }

    fn box_truth() -> Vec<ScenePlane<f64>> {
        crate::synth::box_room_scene::<f64>().ground_truth_components()
    }

    #[test]
    fn identical_detections_are_all_true_positives() {
        let truth = box_truth();
        let landmarks: Vec<PlaneLandmark<f64>> = truth
            .iter()
            .enumerate()
            .map(|(i, p)| landmark_from(i as u32, p))
            .collect();
        let refs: Vec<&PlaneLandmark<f64>> = landmarks.iter().collect();
        let report = match_to_ground_truth(&refs, &truth, 10.0, 0.2);
        assert_eq!(report.true_positives, truth.len());
        assert_eq!(report.false_positives, 0);
        assert_eq!(report.false_negatives, 0);
        assert_eq!(report.precision, 1.0);
        assert_eq!(report.recall, 1.0);
        assert_eq!(report.f1, 1.0);
    }

    #[test]
    fn four_matches_one_spurious_one_missed() {
        // 5 ground-truth components, 4 detected plus 1 spurious detection:
        // precision = recall = 0.80.
        let truth = box_truth();
        assert_eq!(truth.len(), 5);
        let mut landmarks: Vec<PlaneLandmark<f64>> = truth
            .iter()
            .take(4)
            .enumerate()
            .map(|(i, p)| landmark_from(i as u32, p))
            .collect();
        landmarks.push(landmark_with(
            99,
            SemanticClass::Wall,
            Vector3::new(1.0, 1.0, 0.0),
            -7.5,
        ));
        let refs: Vec<&PlaneLandmark<f64>> = landmarks.iter().collect();
        let report = match_to_ground_truth(&refs, &truth, 10.0, 0.2);
        assert_eq!(
            (report.true_positives, report.false_positives, report.false_negatives),
            (4, 1, 1)
        );
        assert!((report.precision - 0.80).abs() < 1e-12);
        assert!((report.recall - 0.80).abs() < 1e-12);
        assert!((report.f1 - 0.80).abs() < 1e-12);
    }

    #[test]
    fn flipped_normals_still_match() {
        let gt = rect_plane(
            SemanticClass::Wall,
            Vector3::x(),
            Vector3::new(0.0, 1.5, 1.25),
            Vector3::y(),
            Vector3::z(),
            [1.5, 1.25],
        );
        let mut flipped = landmark_from(0, &gt);
        flipped.normal = Unit::new_normalize(-gt.normal.into_inner());
        flipped.d = -gt.d;
        let landmarks = [&flipped];
        let report = match_to_ground_truth(&landmarks, &[gt], 10.0, 0.2);
        assert_eq!(report.true_positives, 1);
    }

    #[test]
    fn class_mismatch_does_not_match() {
        let truth = box_truth();
        let mut wrong = landmark_from(0, &truth[4]); // the ground plane
        wrong.class = SemanticClass::Wall;
        let landmarks = [&wrong];
        let report = match_to_ground_truth(&landmarks, &truth, 10.0, 0.2);
        assert_eq!(report.true_positives, 0);
        assert_eq!(report.false_positives, 1);
        assert_eq!(report.false_negatives, 5);
    }

    #[test]
    fn counts_are_conserved() {
        let truth = box_truth();
        let landmarks: Vec<PlaneLandmark<f64>> = truth
            .iter()
            .take(3)
            .enumerate()
            .map(|(i, p)| landmark_from(i as u32, p))
            .chain(std::iter::once(landmark_with(
                7,
                SemanticClass::Ground,
                Vector3::z(),
                -9.0,
            )))
            .collect();
        let refs: Vec<&PlaneLandmark<f64>> = landmarks.iter().collect();
        let report = match_to_ground_truth(&refs, &truth, 10.0, 0.2);
        assert_eq!(report.true_positives + report.false_positives, refs.len());
        assert_eq!(report.true_positives + report.false_negatives, truth.len());
    }

    #[test]
    fn f1_reference_values() {
        // Rows reported for the building-component recognition benchmark.
        let cases = [
            (1.00, 0.50, 0.67),
            (0.71, 0.71, 0.71),
            (0.86, 0.95, 0.90),
            (0.84, 0.89, 0.86),
            (1.00, 1.00, 1.00),
        ];
        for (p, r, expected) in cases {
            let f1 = (f1_score(p, r) * 100.0).round() / 100.0;
            assert_eq!(f1, expected, "f1({p}, {r})");
        }
    }

    #[test]
    fn f1_bounds() {
        assert_eq!(f1_score(0.0, 0.0), 0.0);
        for &(p, r) in &[(0.3, 0.9), (0.5, 0.5), (1.0, 0.2), (0.77, 0.41)] {
            let f1 = f1_score(p, r);
            assert!(f1 >= p * r - 1e-12);
            assert!(f1 <= (p + r) / 2.0 + 1e-12);
        }
        assert_eq!(f1_score(0.6, 0.6), 0.6);
    }
}
