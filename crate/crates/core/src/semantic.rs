//! Label-map filtering to building-component classes and the second RANSAC
//! pass that turns labeled pixels into semantically tagged planes.

use std::collections::HashMap;

use nalgebra::Vector3;

use crate::camera::CameraIntrinsics;
use crate::cloud::{backproject_pixel, FrameId, Point, PointCloud};
use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::image::Image;
use crate::plane::Plane;
use crate::ransac::{extract_planes, RansacConfig};
use crate::scalar::Real;

/// Semantic category of a surface. Building components are `Wall` and
/// `Ground`; everything else collapses to `Other`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SemanticClass {
    Wall,
    Ground,
    Other,
}

impl SemanticClass {
    pub fn is_building_component(self) -> bool {
        matches!(self, SemanticClass::Wall | SemanticClass::Ground)
    }

    pub fn name(self) -> &'static str {
        match self {
            SemanticClass::Wall => "wall",
            SemanticClass::Ground => "ground",
            SemanticClass::Other => "other",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "wall" => Ok(SemanticClass::Wall),
            "ground" | "floor" => Ok(SemanticClass::Ground),
            "other" => Ok(SemanticClass::Other),
            other => Err(Error::Config(format!("unknown semantic class '{other}'"))),
        }
    }
}

impl std::fmt::Display for SemanticClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Maps raw segmentation IDs to semantic classes; unmapped IDs are `Other`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ClassTable {
    map: HashMap<u16, SemanticClass>,
}

impl ClassTable {
    pub fn new() -> Self {
        ClassTable::default()
    }

    pub fn insert(&mut self, id: u16, class: SemanticClass) {
        self.map.insert(id, class);
    }

    #[inline]
    pub fn classify(&self, id: u16) -> SemanticClass {
        self.map.get(&id).copied().unwrap_or(SemanticClass::Other)
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (u16, SemanticClass)> + '_ {
        let mut items: Vec<_> = self.map.iter().map(|(&k, &v)| (k, v)).collect();
        items.sort_by_key(|&(k, _)| k);
        items.into_iter()
    }
}

impl FromIterator<(u16, SemanticClass)> for ClassTable {
    fn from_iter<I: IntoIterator<Item = (u16, SemanticClass)>>(iter: I) -> Self {
        ClassTable {
            map: iter.into_iter().collect(),
        }
    }
}

/// Per-pixel building-component labels with classification uncertainty
/// lambda in [0, 1] (0 = fully confident).
#[derive(Debug, Clone)]
pub struct LabelMap<T: Real> {
    width: usize,
    height: usize,
    labels: Vec<Option<SemanticClass>>,
    lambda: Vec<T>,
}

impl<T: Real> LabelMap<T> {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn label(&self, x: usize, y: usize) -> Option<SemanticClass> {
        self.labels[y * self.width + x]
    }

    #[inline]
    pub fn lambda(&self, x: usize, y: usize) -> T {
        self.lambda[y * self.width + x]
    }

    pub fn labeled_count(&self) -> usize {
        self.labels.iter().filter(|l| l.is_some()).count()
    }
}

/// Keeps exactly the pixels whose mapped class is a building component; all
/// other pixels become null. Lambda is copied from the confidence image as
/// `v / 255`, or 0 (full confidence) when absent.
pub fn class_filter<T: Real>(
    raw_labels: &Image<u16>,
    table: &ClassTable,
    confidence: Option<&Image<u8>>,
) -> Result<LabelMap<T>> {
    if let Some(conf) = confidence {
        if !raw_labels.same_dims(conf) {
            return Err(Error::Config(format!(
                "confidence image is {}x{}, labels are {}x{}",
                conf.width(),
                conf.height(),
                raw_labels.width(),
                raw_labels.height()
            )));
        }
    }
    let n = raw_labels.width() * raw_labels.height();
    let mut labels = Vec::with_capacity(n);
    let mut lambda = Vec::with_capacity(n);
    let inv255 = T::of(1.0 / 255.0);
    for (i, &id) in raw_labels.as_slice().iter().enumerate() {
        let class = table.classify(id);
        labels.push(class.is_building_component().then_some(class));
        lambda.push(match confidence {
            Some(conf) => T::of(conf.as_slice()[i] as f64) * inv255,
            None => T::zero(),
        });
    }
    Ok(LabelMap {
        width: raw_labels.width(),
        height: raw_labels.height(),
        labels,
        lambda,
    })
}

/// A plane extracted from labeled pixels only: geometry, class, mean
/// uncertainty of its inlier pixels, and the inlier positions themselves
/// (kept so the fusion stage can score coverage without the source cloud).
#[derive(Debug, Clone)]
pub struct SemanticPlane<T: Real> {
    pub plane: Plane<T>,
    pub class: SemanticClass,
    pub mean_lambda: T,
    pub points: Vec<Vector3<T>>,
}

/// Back-projects the pixels of one class whose lambda passes the gate.
/// Returns the camera-frame cloud plus per-point lambdas.
pub fn class_cloud<T: Real>(
    frame: &Frame<T>,
    label_map: &LabelMap<T>,
    intrinsics: &CameraIntrinsics<T>,
    class: SemanticClass,
    lambda_max: T,
) -> (PointCloud<T>, Vec<T>) {
    let mut cloud = PointCloud::new(FrameId::Camera);
    let mut lambdas = Vec::new();
    let (w, h) = (
        label_map.width().min(frame.depth.width()),
        label_map.height().min(frame.depth.height()),
    );
    for v in 0..h {
        for u in 0..w {
            if label_map.label(u, v) != Some(class) {
                continue;
            }
            let lambda = label_map.lambda(u, v);
            if lambda > lambda_max {
                continue;
            }
            if let Some(position) = backproject_pixel(u, v, frame.depth.get(u, v), intrinsics) {
                cloud.points.push(Point {
                    position,
                    color: frame.rgb.get(u, v),
                });
                lambdas.push(lambda);
            }
        }
    }
    (cloud, lambdas)
}

/// Second RANSAC pass over the labeled pixels, run per class with the support
/// threshold dropped to a quarter (labeled data is sparser than the full
/// cloud). Planes are tagged with their class and mean inlier lambda.
pub fn extract_semantic_planes<T: Real>(
    frame: &Frame<T>,
    label_map: &LabelMap<T>,
    intrinsics: &CameraIntrinsics<T>,
    config: &RansacConfig<T>,
    lambda_max: T,
) -> Vec<SemanticPlane<T>> {
    let mut out = Vec::new();
    for class in [SemanticClass::Wall, SemanticClass::Ground] {
        let (cloud, lambdas) = class_cloud(frame, label_map, intrinsics, class, lambda_max);
        if cloud.len() < 3 {
            continue;
        }
        let pass = RansacConfig {
            min_inliers: (config.min_inliers / 4).max(3),
            random_seed: config.random_seed.wrapping_add(match class {
                SemanticClass::Wall => 0x5eed_0001,
                _ => 0x5eed_0002,
            }),
            ..*config
        };
        for plane in extract_planes(&cloud, &pass) {
            let mut lambda_sum = T::zero();
            let points: Vec<Vector3<T>> = plane
                .inliers
                .iter()
                .map(|&i| {
                    lambda_sum += lambdas[i];
                    *cloud.position(i)
                })
                .collect();
            let mean_lambda = lambda_sum / T::of(points.len() as f64);
            out.push(SemanticPlane {
                plane,
                class,
                mean_lambda,
                points,
            });
        }
    }
    out
}
