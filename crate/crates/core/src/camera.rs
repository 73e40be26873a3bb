use nalgebra::{Matrix3, Quaternion, Rotation3, Unit, UnitQuaternion, Vector3};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Pinhole intrinsics plus the raw-depth-to-meter divisor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics<T: Real> {
    pub fx: T,
    pub fy: T,
    pub cx: T,
    pub cy: T,
    pub width: usize,
    pub height: usize,
    /// Raw depth units per meter (1000 for millimeter PNGs).
    pub depth_scale: T,
}

impl<T: Real> CameraIntrinsics<T> {
    pub fn new(
        fx: T,
        fy: T,
        cx: T,
        cy: T,
        width: usize,
        height: usize,
        depth_scale: T,
    ) -> Result<Self> {
        let intr = CameraIntrinsics {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
            depth_scale,
        };
        intr.validate()?;
        Ok(intr)
    }

    // Negated comparisons so NaN inputs fail validation.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        if !(self.fx > T::zero() && self.fy > T::zero()) {
            return Err(Error::Config("focal lengths must be positive".into()));
        }
        if self.cx < T::zero() || self.cx >= T::of(self.width as f64) {
            return Err(Error::Config("cx outside [0, width)".into()));
        }
        if self.cy < T::zero() || self.cy >= T::of(self.height as f64) {
            return Err(Error::Config("cy outside [0, height)".into()));
        }
        if !(self.depth_scale > T::zero()) {
            return Err(Error::Config("depth_scale must be positive".into()));
        }
        Ok(())
    }
}

/// Camera-to-world rigid transform stamped with the frame time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose<T: Real> {
    pub rotation: UnitQuaternion<T>,
    pub translation: Vector3<T>,
    pub timestamp: f64,
}

impl<T: Real> Pose<T> {
    pub fn identity(timestamp: f64) -> Self {
        Pose {
            rotation: UnitQuaternion::identity(),
            translation: Vector3::zeros(),
            timestamp,
        }
    }

    /// Builds a pose from raw `(qx, qy, qz, qw)` components. The quaternion is
    /// renormalized; a norm off unity by more than 1e-3 is rejected as invalid.
    pub fn from_parts(
        translation: Vector3<T>,
        quat_xyzw: [T; 4],
        timestamp: f64,
    ) -> Result<Self> {
        let [qx, qy, qz, qw] = quat_xyzw;
        let raw = Quaternion::new(qw, qx, qy, qz);
        let norm = raw.norm();
        if (norm - T::one()).abs() > T::of(1e-3) {
            return Err(Error::Config(format!(
                "quaternion norm {} too far from 1",
                norm.as_f64()
            )));
        }
        Ok(Pose {
            rotation: UnitQuaternion::from_quaternion(raw),
            translation,
            timestamp,
        })
    }

    /// Camera point to world point: `R p + t`.
    #[inline]
    pub fn transform_point(&self, p: &Vector3<T>) -> Vector3<T> {
        self.rotation * p + self.translation
    }

    /// Camera direction to world direction: `R v`.
    #[inline]
    pub fn rotate(&self, v: &Vector3<T>) -> Vector3<T> {
        self.rotation * v
    }

    /// Camera pose at `eye` looking along `forward` with image-down aligned to
    /// `-up` (z forward, x right, y down). Fails when `forward` and `up` are
    /// parallel.
    pub fn looking_at(
        eye: Vector3<T>,
        forward: Vector3<T>,
        up: Vector3<T>,
        timestamp: f64,
    ) -> Result<Self> {
        let z = forward
            .try_normalize(T::of(1e-9))
            .ok_or_else(|| Error::Config("zero forward direction".into()))?;
        let x = z
            .cross(&up)
            .try_normalize(T::of(1e-9))
            .ok_or_else(|| Error::Config("forward parallel to up".into()))?;
        let y = z.cross(&x);
        let rot = Rotation3::from_matrix_unchecked(Matrix3::from_columns(&[x, y, z]));
        Ok(Pose {
            rotation: UnitQuaternion::from_rotation_matrix(&rot),
            translation: eye,
            timestamp,
        })
    }
}

/// Unit 3-vector shorthand used for normals and gravity.
pub type UnitVec3<T> = Unit<Vector3<T>>;
