//! Point-cloud construction and the two-stage preprocessing (voxel
//! down-sampling, then distance filtration) that precedes plane fitting.

use std::collections::HashMap;

use nalgebra::Vector3;

use crate::camera::CameraIntrinsics;
use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::image::Rgb;
use crate::scalar::Real;

/// Colored 3D point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point<T: Real> {
    pub position: Vector3<T>,
    pub color: Rgb,
}

/// Reference frame a cloud or plane lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameId {
    Camera,
    World,
}

#[derive(Debug, Clone)]
pub struct PointCloud<T: Real> {
    pub points: Vec<Point<T>>,
    pub frame_id: FrameId,
}

impl<T: Real> PointCloud<T> {
    pub fn new(frame_id: FrameId) -> Self {
        PointCloud {
            points: Vec::new(),
            frame_id,
        }
    }

    pub fn from_points(points: Vec<Point<T>>, frame_id: FrameId) -> Self {
        debug_assert!(points.iter().all(|p| {
            p.position.x.is_finite() && p.position.y.is_finite() && p.position.z.is_finite()
        }));
        PointCloud { points, frame_id }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn position(&self, index: usize) -> &Vector3<T> {
        &self.points[index].position
    }
}

#[inline]
pub(crate) fn backproject_pixel<T: Real>(
    u: usize,
    v: usize,
    raw_depth: u16,
    intrinsics: &CameraIntrinsics<T>,
) -> Option<Vector3<T>> {
    if raw_depth == 0 {
        return None;
    }
    let z = T::of(raw_depth as f64) / intrinsics.depth_scale;
    let x = (T::of(u as f64) - intrinsics.cx) * z / intrinsics.fx;
    let y = (T::of(v as f64) - intrinsics.cy) * z / intrinsics.fy;
    Some(Vector3::new(x, y, z))
}

/// Back-projects the depth image into a camera-frame cloud. `stride`
/// subsamples the pixel grid; zero-depth pixels are omitted.
pub fn backproject<T: Real>(
    frame: &Frame<T>,
    intrinsics: &CameraIntrinsics<T>,
    stride: usize,
) -> PointCloud<T> {
    let stride = stride.max(1);
    let mut cloud = PointCloud::new(FrameId::Camera);
    let (w, h) = (frame.depth.width(), frame.depth.height());
    cloud.points.reserve(w * h / (stride * stride));
    for v in (0..h).step_by(stride) {
        for u in (0..w).step_by(stride) {
            if let Some(position) = backproject_pixel(u, v, frame.depth.get(u, v), intrinsics) {
                cloud.points.push(Point {
                    position,
                    color: frame.rgb.get(u, v),
                });
            }
        }
    }
    cloud
}

/// Buckets points by `floor(position / voxel_size)` per axis and replaces each
/// nonempty voxel with the centroid of its members (channel-wise mean color).
/// Output voxels appear in first-touch order, so the result is deterministic
/// for a given input order.
pub fn voxel_downsample<T: Real>(cloud: &PointCloud<T>, voxel_size: T) -> PointCloud<T> {
    assert!(voxel_size > T::zero(), "voxel_size must be positive");
    struct Accum<T: Real> {
        sum: Vector3<T>,
        color_sum: [u32; 3],
        count: u32,
    }

    let mut index: HashMap<[i64; 3], usize> = HashMap::with_capacity(cloud.len());
    let mut voxels: Vec<Accum<T>> = Vec::new();
    for p in &cloud.points {
        let key = [
            (p.position.x / voxel_size).floor().as_f64() as i64,
            (p.position.y / voxel_size).floor().as_f64() as i64,
            (p.position.z / voxel_size).floor().as_f64() as i64,
        ];
        let slot = *index.entry(key).or_insert_with(|| {
            voxels.push(Accum {
                sum: Vector3::zeros(),
                color_sum: [0; 3],
                count: 0,
            });
            voxels.len() - 1
        });
        let acc = &mut voxels[slot];
        acc.sum += p.position;
        for (sum, &channel) in acc.color_sum.iter_mut().zip(&p.color) {
            *sum += channel as u32;
        }
        acc.count += 1;
    }

    let points = voxels
        .into_iter()
        .map(|acc| {
            let n = T::of(acc.count as f64);
            let mut color = [0u8; 3];
            for (out, &sum) in color.iter_mut().zip(&acc.color_sum) {
                *out = ((sum + acc.count / 2) / acc.count) as u8;
            }
            Point {
                position: acc.sum / n,
                color,
            }
        })
        .collect();
    PointCloud {
        points,
        frame_id: cloud.frame_id,
    }
}

/// Keeps exactly the points whose Euclidean norm lies in
/// `[theta_min, theta_max]`, preserving order.
pub fn distance_filter<T: Real>(
    cloud: &PointCloud<T>,
    theta_min: T,
    theta_max: T,
) -> Result<PointCloud<T>> {
    if !(theta_min >= T::zero() && theta_min < theta_max) {
        return Err(Error::Config(format!(
            "invalid depth range [{}, {}]",
            theta_min.as_f64(),
            theta_max.as_f64()
        )));
    }
    let points = cloud
        .points
        .iter()
        .copied()
        .filter(|p| {
            let r = p.position.norm();
            r >= theta_min && r <= theta_max
        })
        .collect();
    Ok(PointCloud {
        points,
        frame_id: cloud.frame_id,
    })
}
