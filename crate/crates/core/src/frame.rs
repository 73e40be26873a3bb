use crate::camera::{CameraIntrinsics, Pose};
use crate::error::{Error, Result};
use crate::image::{Image, Rgb};
use crate::scalar::Real;

/// One RGB-D observation: depth plus color, optionally a semantic label map,
/// a per-pixel confidence channel and a camera pose. Immutable after load so
/// it can be shared across concurrent pipeline stages.
#[derive(Debug, Clone)]
pub struct Frame<T: Real> {
    pub timestamp: f64,
    /// Raw depth units (see `CameraIntrinsics::depth_scale`); 0 = no return.
    pub depth: Image<u16>,
    pub rgb: Image<Rgb>,
    /// Raw class IDs; mapped to semantic classes by a `ClassTable`.
    pub labels: Option<Image<u16>>,
    /// Uncertainty bytes; pixel value v maps to lambda = v / 255.
    pub confidence: Option<Image<u8>>,
    pub pose: Option<Pose<T>>,
}

impl<T: Real> Frame<T> {
    /// All present channels must share the intrinsics' dimensions.
    pub fn validate_dims(&self, intrinsics: &CameraIntrinsics<T>) -> Result<()> {
        let (w, h) = (intrinsics.width, intrinsics.height);
        let check = |name: &str, iw: usize, ih: usize| {
            if iw == w && ih == h {
                Ok(())
            } else {
                Err(Error::Dataset(format!(
                    "{name} image is {iw}x{ih}, expected {w}x{h}"
                )))
            }
        };
        check("depth", self.depth.width(), self.depth.height())?;
        check("rgb", self.rgb.width(), self.rgb.height())?;
        if let Some(l) = &self.labels {
            check("label", l.width(), l.height())?;
        }
        if let Some(c) = &self.confidence {
            check("confidence", c.width(), c.height())?;
        }
        Ok(())
    }
}
