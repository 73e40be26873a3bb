//! Synthetic scene generator: finite plane rectangles rendered through the
//! pinhole model into depth/rgb/label/confidence images. Serves as the
//! ground-truth oracle for the pipeline and the evaluation harness.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{Unit, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;

use crate::camera::{CameraIntrinsics, Pose, UnitVec3};
use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::image::{Image, Rgb};
use crate::plane::PlaneExtent;
use crate::scalar::Real;
use crate::semantic::{ClassTable, SemanticClass};

/// Label-image IDs written by the renderer (see the class table emitted next
/// to generated datasets).
pub const WALL_LABEL_ID: u16 = 1;
pub const GROUND_LABEL_ID: u16 = 2;
pub const OTHER_LABEL_ID: u16 = 3;

pub fn synthetic_class_table() -> ClassTable {
    [
        (WALL_LABEL_ID, SemanticClass::Wall),
        (GROUND_LABEL_ID, SemanticClass::Ground),
        (OTHER_LABEL_ID, SemanticClass::Other),
    ]
    .into_iter()
    .collect()
}

fn class_label_id(class: SemanticClass) -> u16 {
    match class {
        SemanticClass::Wall => WALL_LABEL_ID,
        SemanticClass::Ground => GROUND_LABEL_ID,
        SemanticClass::Other => OTHER_LABEL_ID,
    }
}

/// One finite rectangular plane of the scene, in the world frame.
#[derive(Debug, Clone)]
pub struct ScenePlane<T: Real> {
    pub class: SemanticClass,
    pub normal: UnitVec3<T>,
    pub d: T,
    pub extent: PlaneExtent<T>,
}

/// Sensor corruption model. Corrupted labels carry high uncertainty and clean
/// labels low uncertainty, mimicking a calibrated segmentation network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel<T: Real> {
    /// Gaussian depth noise sigma in meters (applied before quantization).
    pub depth_sigma: T,
    /// Probability that a labeled pixel flips to a random wrong class.
    pub label_corruption: T,
    /// Clean pixels draw lambda uniformly from [0, lambda_clean_max].
    pub lambda_clean_max: T,
    /// Corrupted pixels draw lambda uniformly from [lambda_corrupt_min, 1].
    pub lambda_corrupt_min: T,
}

impl<T: Real> Default for NoiseModel<T> {
    fn default() -> Self {
        NoiseModel {
            depth_sigma: T::zero(),
            label_corruption: T::zero(),
            lambda_clean_max: T::of(0.2),
            lambda_corrupt_min: T::of(0.6),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticScene<T: Real> {
    pub planes: Vec<ScenePlane<T>>,
    pub trajectory: Vec<Pose<T>>,
    pub intrinsics: CameraIntrinsics<T>,
    pub noise: NoiseModel<T>,
    pub seed: u64,
}

impl<T: Real> SyntheticScene<T> {
    /// Ground-truth building components: the wall/ground planes of the scene.
    pub fn ground_truth_components(&self) -> Vec<ScenePlane<T>> {
        self.planes
            .iter()
            .filter(|p| p.class.is_building_component())
            .cloned()
            .collect()
    }

    /// Renders one trajectory frame. Deterministic for a fixed scene seed and
    /// frame index; distinct frames may render concurrently.
    pub fn render_frame(&self, frame_index: usize) -> Frame<T> {
        assert!(frame_index < self.trajectory.len(), "frame index in range");
        let pose = self.trajectory[frame_index];
        let intr = &self.intrinsics;
        let (w, h) = (intr.width, intr.height);

        let mut depth = Image::new_filled(w, h, 0u16);
        let mut rgb = Image::new_filled(w, h, [0u8, 0, 0]);
        let mut labels = Image::new_filled(w, h, 0u16);
        let mut confidence = Image::new_filled(w, h, 0u8);

        let mut rng = ChaCha8Rng::seed_from_u64(
            self.seed ^ (frame_index as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15),
        );
        let sigma = self.noise.depth_sigma.as_f64();
        let gauss = (sigma > 0.0).then(|| rand_distr::Normal::new(0.0, sigma).unwrap());
        let corruption = self.noise.label_corruption.as_f64();
        let lambda_clean_max = self.noise.lambda_clean_max.as_f64();
        let lambda_corrupt_min = self.noise.lambda_corrupt_min.as_f64();

        let origin = pose.translation;
        let contains_tol = T::of(1e-9);
        let t_min = T::of(1e-4);

        for v in 0..h {
            for u in 0..w {
                // Ray through the pixel, scaled so camera z equals the ray
                // parameter (matches back-projection exactly).
                let dir_cam = Vector3::new(
                    (T::of(u as f64) - intr.cx) / intr.fx,
                    (T::of(v as f64) - intr.cy) / intr.fy,
                    T::one(),
                );
                let dir = pose.rotate(&dir_cam);

                let mut hit: Option<(T, usize)> = None;
                for (idx, plane) in self.planes.iter().enumerate() {
                    let denom = plane.normal.dot(&dir);
                    if denom.abs() <= T::of(1e-12) {
                        continue;
                    }
                    let t = -(plane.normal.dot(&origin) + plane.d) / denom;
                    if t <= t_min {
                        continue;
                    }
                    if hit.is_some_and(|(best, _)| t >= best) {
                        continue;
                    }
                    let point = origin + dir * t;
                    if plane.extent.contains(&point, contains_tol) {
                        hit = Some((t, idx));
                    }
                }

                let Some((z, idx)) = hit else {
                    continue;
                };
                let mut z_noisy = z.as_f64();
                if let Some(g) = &gauss {
                    z_noisy += g.sample(&mut rng);
                }
                let raw = (z_noisy * intr.depth_scale.as_f64()).round();
                let raw = if raw.is_finite() && raw > 0.0 && raw <= u16::MAX as f64 {
                    raw as u16
                } else {
                    0
                };
                depth.set(u, v, raw);
                rgb.set(u, v, plane_color(idx));

                let true_id = class_label_id(self.planes[idx].class);
                let corrupted = corruption > 0.0 && rng.random::<f64>() < corruption;
                let label_id = if corrupted {
                    // Uniform over the two wrong classes.
                    let wrong: [u16; 2] = match true_id {
                        WALL_LABEL_ID => [GROUND_LABEL_ID, OTHER_LABEL_ID],
                        GROUND_LABEL_ID => [WALL_LABEL_ID, OTHER_LABEL_ID],
                        _ => [WALL_LABEL_ID, GROUND_LABEL_ID],
                    };
                    wrong[rng.random_range(0..2)]
                } else {
                    true_id
                };
                labels.set(u, v, label_id);

                let lambda = if corrupted {
                    lambda_corrupt_min + rng.random::<f64>() * (1.0 - lambda_corrupt_min)
                } else {
                    rng.random::<f64>() * lambda_clean_max
                };
                confidence.set(u, v, (lambda * 255.0).round().clampr(0.0, 255.0) as u8);
            }
        }

        Frame {
            timestamp: pose.timestamp,
            depth,
            rgb,
            labels: Some(labels),
            confidence: Some(confidence),
            pose: Some(pose),
        }
    }
}

/// Fixed per-plane color (golden-ratio hue walk).
fn plane_color(index: usize) -> Rgb {
    let hue = (index as f64 * 0.618_033_988_749_895).fract();
    hsv_to_rgb(hue, 0.55, 0.9)
}

pub(crate) fn hsv_to_rgb(h: f64, s: f64, v: f64) -> Rgb {
    let i = (h * 6.0).floor();
    let f = h * 6.0 - i;
    let p = v * (1.0 - s);
    let q = v * (1.0 - f * s);
    let t = v * (1.0 - (1.0 - f) * s);
    let (r, g, b) = match (i as i64).rem_euclid(6) {
        0 => (v, t, p),
        1 => (q, v, p),
        2 => (p, v, t),
        3 => (p, q, v),
        4 => (t, p, v),
        _ => (v, p, q),
    };
    [
        (r * 255.0).round() as u8,
        (g * 255.0).round() as u8,
        (b * 255.0).round() as u8,
    ]
}

/// Axis-aligned rectangle helper: plane through `center` with `normal`,
/// spanned by `axis1`/`axis2` with the given half-lengths.
pub fn rect_plane<T: Real>(
    class: SemanticClass,
    normal: Vector3<T>,
    center: Vector3<T>,
    axis1: Vector3<T>,
    axis2: Vector3<T>,
    half_lengths: [T; 2],
) -> ScenePlane<T> {
    let normal = Unit::new_normalize(normal);
    let d = -normal.dot(&center);
    ScenePlane {
        class,
        normal,
        d,
        extent: PlaneExtent::from_rect(
            center,
            Unit::new_normalize(axis1),
            Unit::new_normalize(axis2),
            half_lengths,
        ),
    }
}

fn default_intrinsics<T: Real>() -> CameraIntrinsics<T> {
    CameraIntrinsics::new(
        T::of(525.0),
        T::of(525.0),
        T::of(319.5),
        T::of(239.5),
        640,
        480,
        T::of(1000.0),
    )
    .expect("valid intrinsics")
}

/// The standard evaluation scene: a 4 m x 3 m x 2.5 m room (4 walls + ground
/// as building components, ceiling and a table as distractors) observed by a
/// 30-frame in-place rotation with cycling pitch.
pub fn box_room_scene<T: Real>() -> SyntheticScene<T> {
    let x = Vector3::x();
    let y = Vector3::y();
    let z = Vector3::z();
    let planes = vec![
        rect_plane(
            SemanticClass::Wall,
            x,
            Vector3::new(T::zero(), T::of(1.5), T::of(1.25)),
            y,
            z,
            [T::of(1.5), T::of(1.25)],
        ),
        rect_plane(
            SemanticClass::Wall,
            -x,
            Vector3::new(T::of(4.0), T::of(1.5), T::of(1.25)),
            y,
            z,
            [T::of(1.5), T::of(1.25)],
        ),
        rect_plane(
            SemanticClass::Wall,
            y,
            Vector3::new(T::of(2.0), T::zero(), T::of(1.25)),
            x,
            z,
            [T::of(2.0), T::of(1.25)],
        ),
        rect_plane(
            SemanticClass::Wall,
            -y,
            Vector3::new(T::of(2.0), T::of(3.0), T::of(1.25)),
            x,
            z,
            [T::of(2.0), T::of(1.25)],
        ),
        rect_plane(
            SemanticClass::Ground,
            z,
            Vector3::new(T::of(2.0), T::of(1.5), T::zero()),
            x,
            y,
            [T::of(2.0), T::of(1.5)],
        ),
        // Distractors: ceiling and a table top, both planar but not
        // building components.
        rect_plane(
            SemanticClass::Other,
            -z,
            Vector3::new(T::of(2.0), T::of(1.5), T::of(2.5)),
            x,
            y,
            [T::of(2.0), T::of(1.5)],
        ),
        rect_plane(
            SemanticClass::Other,
            z,
            Vector3::new(T::of(2.8), T::of(1.0), T::of(0.75)),
            x,
            y,
            [T::of(0.6), T::of(0.4)],
        ),
    ];

    let eye = Vector3::new(T::of(2.0), T::of(1.5), T::of(1.3));
    let mut trajectory = Vec::new();
    for i in 0..30 {
        let yaw = (i as f64) * 12f64.to_radians();
        let pitch = match i % 3 {
            0 => (-20f64).to_radians(), // down
            1 => 0.0,
            _ => 20f64.to_radians(), // up
        };
        let forward = Vector3::new(
            T::of(pitch.cos() * yaw.cos()),
            T::of(pitch.cos() * yaw.sin()),
            T::of(pitch.sin()),
        );
        trajectory.push(
            Pose::looking_at(eye, forward, Vector3::z(), i as f64 * 0.1)
                .expect("non-degenerate view"),
        );
    }

    SyntheticScene {
        planes,
        trajectory,
        intrinsics: default_intrinsics(),
        noise: NoiseModel {
            depth_sigma: T::of(0.005),
            label_corruption: T::of(0.05),
            ..NoiseModel::default()
        },
        seed: 42,
    }
}

/// A straight 8 m corridor, 2 m wide: two opposing walls plus the ground,
/// traversed lengthwise.
pub fn corridor_scene<T: Real>() -> SyntheticScene<T> {
    let x = Vector3::x();
    let y = Vector3::y();
    let z = Vector3::z();
    let planes = vec![
        rect_plane(
            SemanticClass::Wall,
            y,
            Vector3::new(T::of(4.0), T::zero(), T::of(1.25)),
            x,
            z,
            [T::of(4.0), T::of(1.25)],
        ),
        rect_plane(
            SemanticClass::Wall,
            -y,
            Vector3::new(T::of(4.0), T::of(2.0), T::of(1.25)),
            x,
            z,
            [T::of(4.0), T::of(1.25)],
        ),
        rect_plane(
            SemanticClass::Ground,
            z,
            Vector3::new(T::of(4.0), T::of(1.0), T::zero()),
            x,
            y,
            [T::of(4.0), T::of(1.0)],
        ),
    ];

    let mut trajectory = Vec::new();
    for i in 0..20 {
        let s = i as f64 / 19.0;
        let eye = Vector3::new(T::of(0.4 + s * 5.6), T::of(1.0), T::of(1.3));
        let pitch = if i % 2 == 0 { (-18f64).to_radians() } else { 0.0 };
        let forward = Vector3::new(T::of(pitch.cos()), T::zero(), T::of(pitch.sin()));
        trajectory.push(
            Pose::looking_at(eye, forward, Vector3::z(), i as f64 * 0.1)
                .expect("non-degenerate view"),
        );
    }

    SyntheticScene {
        planes,
        trajectory,
        intrinsics: default_intrinsics(),
        noise: NoiseModel {
            depth_sigma: T::of(0.005),
            label_corruption: T::of(0.05),
            ..NoiseModel::default()
        },
        seed: 43,
    }
}

// --- scene file format -----------------------------------------------------
//
// Line-oriented text; `#` starts a comment. Records:
//   intrinsics <fx> <fy> <cx> <cy> <width> <height> <depth_scale>
//   seed <u64>
//   noise <depth_sigma> <label_corruption> <lambda_clean_max> <lambda_corrupt_min>
//   plane <class> <nx> <ny> <nz> <d> <12 corner coords (4 corners, xyz each)>
//   pose <timestamp> <tx> <ty> <tz> <qx> <qy> <qz> <qw>
//
// The same `plane` records serve as the ground-truth file for evaluation.

pub fn write_scene_string<T: Real>(scene: &SyntheticScene<T>) -> String {
    let mut out = String::new();
    let intr = &scene.intrinsics;
    writeln!(
        out,
        "intrinsics {} {} {} {} {} {} {}",
        intr.fx.as_f64(),
        intr.fy.as_f64(),
        intr.cx.as_f64(),
        intr.cy.as_f64(),
        intr.width,
        intr.height,
        intr.depth_scale.as_f64()
    )
    .unwrap();
    writeln!(out, "seed {}", scene.seed).unwrap();
    writeln!(
        out,
        "noise {} {} {} {}",
        scene.noise.depth_sigma.as_f64(),
        scene.noise.label_corruption.as_f64(),
        scene.noise.lambda_clean_max.as_f64(),
        scene.noise.lambda_corrupt_min.as_f64()
    )
    .unwrap();
    for plane in &scene.planes {
        out.push_str(&plane_record(plane));
        out.push('\n');
    }
    for pose in &scene.trajectory {
        let t = pose.translation;
        let q = pose.rotation.into_inner();
        writeln!(
            out,
            "pose {} {} {} {} {} {} {} {}",
            pose.timestamp,
            t.x.as_f64(),
            t.y.as_f64(),
            t.z.as_f64(),
            q.i.as_f64(),
            q.j.as_f64(),
            q.k.as_f64(),
            q.w.as_f64()
        )
        .unwrap();
    }
    out
}

pub fn plane_record<T: Real>(plane: &ScenePlane<T>) -> String {
    let n = plane.normal.into_inner();
    let mut line = format!(
        "plane {} {} {} {} {}",
        plane.class,
        n.x.as_f64(),
        n.y.as_f64(),
        n.z.as_f64(),
        plane.d.as_f64()
    );
    for corner in plane.extent.corners() {
        write!(
            line,
            " {} {} {}",
            corner.x.as_f64(),
            corner.y.as_f64(),
            corner.z.as_f64()
        )
        .unwrap();
    }
    line
}

pub fn write_scene_file<T: Real>(scene: &SyntheticScene<T>, path: &Path) -> Result<()> {
    std::fs::write(path, write_scene_string(scene)).map_err(|e| Error::io(path, e))
}

fn parse_floats(path: &Path, line_no: usize, parts: &[&str], expect: usize) -> Result<Vec<f64>> {
    if parts.len() != expect {
        return Err(Error::parse(
            path,
            line_no,
            format!("expected {expect} fields, found {}", parts.len()),
        ));
    }
    parts
        .iter()
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| Error::parse(path, line_no, format!("bad number '{s}'")))
        })
        .collect()
}

/// Parses one `plane` record payload (everything after the keyword).
pub fn parse_plane_record<T: Real>(
    path: &Path,
    line_no: usize,
    parts: &[&str],
) -> Result<ScenePlane<T>> {
    if parts.len() != 17 {
        return Err(Error::parse(
            path,
            line_no,
            format!("plane record needs 17 fields, found {}", parts.len()),
        ));
    }
    let class = SemanticClass::parse(parts[0])?;
    let nums = parse_floats(path, line_no, &parts[1..], 16)?;
    let normal = Vector3::new(T::of(nums[0]), T::of(nums[1]), T::of(nums[2]));
    let normal = Unit::try_new(normal, T::of(1e-6))
        .ok_or_else(|| Error::parse(path, line_no, "plane normal is not unit length"))?;
    let d = T::of(nums[3]);
    let corners: Vec<Vector3<T>> = (0..4)
        .map(|k| {
            Vector3::new(
                T::of(nums[4 + 3 * k]),
                T::of(nums[5 + 3 * k]),
                T::of(nums[6 + 3 * k]),
            )
        })
        .collect();
    // corners() layout: [c+a+b, c+a-b, c-a-b, c-a+b]
    let center = (corners[0] + corners[1] + corners[2] + corners[3]) / T::of(4.0);
    let axis2_raw = (corners[0] - corners[1]) / T::of(2.0);
    let axis1_raw = (corners[1] - corners[2]) / T::of(2.0);
    let half_lengths = [axis1_raw.norm(), axis2_raw.norm()];
    if !(half_lengths[0] > T::zero() && half_lengths[1] > T::zero()) {
        return Err(Error::parse(path, line_no, "degenerate plane rectangle"));
    }
    let axis1 = Unit::new_normalize(axis1_raw);
    let axis2 = Unit::new_normalize(axis2_raw);
    if axis1.dot(&axis2).abs() > T::of(1e-3) || axis1.dot(&normal).abs() > T::of(1e-3) {
        return Err(Error::parse(path, line_no, "rectangle is not orthogonal"));
    }
    Ok(ScenePlane {
        class,
        normal,
        d,
        extent: PlaneExtent::from_rect(center, axis1, axis2, half_lengths),
    })
}

pub fn read_scene_file<T: Real>(path: &Path) -> Result<SyntheticScene<T>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut intrinsics: Option<CameraIntrinsics<T>> = None;
    let mut noise = NoiseModel::default();
    let mut seed = 0u64;
    let mut planes = Vec::new();
    let mut trajectory = Vec::new();

    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let keyword = parts.next().unwrap();
        let rest: Vec<&str> = parts.collect();
        match keyword {
            "intrinsics" => {
                let nums = parse_floats(path, line_no, &rest, 7)?;
                intrinsics = Some(CameraIntrinsics::new(
                    T::of(nums[0]),
                    T::of(nums[1]),
                    T::of(nums[2]),
                    T::of(nums[3]),
                    nums[4] as usize,
                    nums[5] as usize,
                    T::of(nums[6]),
                )?);
            }
            "seed" => {
                if rest.len() != 1 {
                    return Err(Error::parse(path, line_no, "seed takes one value"));
                }
                seed = rest[0]
                    .parse()
                    .map_err(|_| Error::parse(path, line_no, "bad seed"))?;
            }
            "noise" => {
                let nums = parse_floats(path, line_no, &rest, 4)?;
                noise = NoiseModel {
                    depth_sigma: T::of(nums[0]),
                    label_corruption: T::of(nums[1]),
                    lambda_clean_max: T::of(nums[2]),
                    lambda_corrupt_min: T::of(nums[3]),
                };
            }
            "plane" => planes.push(parse_plane_record(path, line_no, &rest)?),
            "pose" => {
                let nums = parse_floats(path, line_no, &rest, 8)?;
                trajectory.push(Pose::from_parts(
                    Vector3::new(T::of(nums[1]), T::of(nums[2]), T::of(nums[3])),
                    [T::of(nums[4]), T::of(nums[5]), T::of(nums[6]), T::of(nums[7])],
                    nums[0],
                )?);
            }
            other => {
                return Err(Error::parse(
                    path,
                    line_no,
                    format!("unknown record '{other}'"),
                ));
            }
        }
    }

    let intrinsics = intrinsics
        .ok_or_else(|| Error::Dataset(format!("{}: missing intrinsics record", path.display())))?;
    Ok(SyntheticScene {
        planes,
        trajectory,
        intrinsics,
        noise,
        seed,
    })
}

/// Reads ground-truth plane records (the `plane` lines of a scene file or a
/// ground-truth file written next to a generated dataset).
pub fn read_ground_truth_file<T: Real>(path: &Path) -> Result<Vec<ScenePlane<T>>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut planes = Vec::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line = raw_line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        if parts.next() != Some("plane") {
            continue;
        }
        let rest: Vec<&str> = parts.collect();
        planes.push(parse_plane_record(path, idx + 1, &rest)?);
    }
    Ok(planes)
}
