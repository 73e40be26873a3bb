//! Pipeline configuration: defaults, validation, and the plain-text
//! `key = value` config file (CLI flags override file values).

use std::path::{Path, PathBuf};

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::fusion::FusionConfig;
use crate::graph::AssociationConfig;
use crate::ply::PlyMode;
use crate::ransac::RansacConfig;
use crate::scalar::Real;
use crate::semantic::{ClassTable, SemanticClass};
use crate::structures::StructureConfig;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CloudConfig<T: Real> {
    /// Pixel grid stride for back-projection.
    pub pixel_stride: usize,
    pub voxel_size: T,
    pub depth_min: T,
    pub depth_max: T,
}

impl<T: Real> Default for CloudConfig<T> {
    fn default() -> Self {
        CloudConfig {
            pixel_stride: 2,
            voxel_size: T::of(0.05),
            depth_min: T::of(0.3),
            depth_max: T::of(5.0),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineConfig<T: Real> {
    pub cloud: CloudConfig<T>,
    pub ransac: RansacConfig<T>,
    pub fusion: FusionConfig<T>,
    pub association: AssociationConfig<T>,
    pub structure: StructureConfig<T>,
    /// Pixels with uncertainty above this are excluded from the semantic pass.
    pub lambda_max: T,
    /// Raw label id to class mapping; falls back to the dataset's
    /// `classes.txt` when empty.
    pub class_table: ClassTable,
    /// Process every k-th frame.
    pub frame_stride: usize,
    pub gravity_up: Vector3<T>,
    /// Run the geometric and semantic stages on separate threads.
    pub parallel: bool,
    pub eval_angle_tol_deg: T,
    pub eval_offset_tol: T,
    pub ground_truth: Option<PathBuf>,
    pub export_graph: Option<PathBuf>,
    pub export_ply: Option<PathBuf>,
    pub ply_mode: PlyMode,
}

impl<T: Real> Default for PipelineConfig<T> {
    fn default() -> Self {
        PipelineConfig {
            cloud: CloudConfig::default(),
            ransac: RansacConfig::default(),
            fusion: FusionConfig::default(),
            association: AssociationConfig::default(),
            structure: StructureConfig::default(),
            lambda_max: T::of(0.5),
            class_table: ClassTable::new(),
            frame_stride: 1,
            gravity_up: Vector3::z(),
            parallel: true,
            eval_angle_tol_deg: T::of(10.0),
            eval_offset_tol: T::of(0.2),
            ground_truth: None,
            export_graph: None,
            export_ply: None,
            ply_mode: PlyMode::ColorCoded,
        }
    }
}

impl<T: Real> PipelineConfig<T> {
    // Negated comparisons so NaN inputs fail validation.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        self.ransac.validate()?;
        self.fusion.validate()?;
        if self.frame_stride == 0 {
            return Err(Error::Config("frame_stride must be >= 1".into()));
        }
        if self.cloud.pixel_stride == 0 {
            return Err(Error::Config("pixel_stride must be >= 1".into()));
        }
        if !(self.cloud.voxel_size > T::zero()) {
            return Err(Error::Config("voxel_size must be positive".into()));
        }
        if !(self.cloud.depth_min >= T::zero() && self.cloud.depth_min < self.cloud.depth_max) {
            return Err(Error::Config("need 0 <= depth_min < depth_max".into()));
        }
        if !(self.lambda_max >= T::zero() && self.lambda_max <= T::one()) {
            return Err(Error::Config("lambda_max must be in [0, 1]".into()));
        }
        if self.gravity_up.norm() <= T::of(1e-9) {
            return Err(Error::Config("gravity_up must be nonzero".into()));
        }
        Ok(())
    }

    /// Applies `key = value` lines from a config file. `#` starts a comment;
    /// unknown keys are rejected.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(path, line_no, "expected key = value"))?;
            self.apply_entry(key.trim(), value.trim())
                .map_err(|e| match e {
                    Error::Config(msg) => Error::parse(path, line_no, msg),
                    other => other,
                })?;
        }
        Ok(())
    }

    pub fn apply_entry(&mut self, key: &str, value: &str) -> Result<()> {
        let scalar = |v: &str| -> Result<T> {
            v.parse::<f64>()
                .map(T::of)
                .map_err(|_| Error::Config(format!("bad number '{v}'")))
        };
        let integer = |v: &str| -> Result<usize> {
            v.parse::<usize>()
                .map_err(|_| Error::Config(format!("bad integer '{v}'")))
        };
        if let Some(id) = key.strip_prefix("class.") {
            let id: u16 = id
                .parse()
                .map_err(|_| Error::Config(format!("bad class id '{id}'")))?;
            self.class_table.insert(id, SemanticClass::parse(value)?);
            return Ok(());
        }
        match key {
            "frame_stride" => self.frame_stride = integer(value)?,
            "pixel_stride" => self.cloud.pixel_stride = integer(value)?,
            "voxel_size" => self.cloud.voxel_size = scalar(value)?,
            "depth_min" => self.cloud.depth_min = scalar(value)?,
            "depth_max" => self.cloud.depth_max = scalar(value)?,
            "ransac_iters" => self.ransac.max_iterations = integer(value)?,
            "inlier_threshold" => self.ransac.epsilon_inlier = scalar(value)?,
            "min_inliers" => self.ransac.min_inliers = integer(value)?,
            "max_planes" => self.ransac.max_planes = integer(value)?,
            "seed" => {
                self.ransac.random_seed = value
                    .parse()
                    .map_err(|_| Error::Config(format!("bad seed '{value}'")))?;
            }
            "match_threshold" => self.fusion.epsilon_match = scalar(value)?,
            "tau_dist" => self.fusion.tau_dist = scalar(value)?,
            "theta_normal" => self.fusion.theta_normal_deg = scalar(value)?,
            "min_area" => self.fusion.min_area = scalar(value)?,
            "vertical_tol" => self.fusion.vertical_tol_deg = scalar(value)?,
            "horizontal_tol" => self.fusion.horizontal_tol_deg = scalar(value)?,
            "lambda_max" => self.lambda_max = scalar(value)?,
            "assoc_angle_tol" => self.association.angle_tol_deg = scalar(value)?,
            "assoc_offset_tol" => self.association.offset_tol = scalar(value)?,
            "extent_gap_max" => self.association.extent_gap_max = scalar(value)?,
            "eval_angle_tol" => self.eval_angle_tol_deg = scalar(value)?,
            "eval_offset_tol" => self.eval_offset_tol = scalar(value)?,
            "parallel" => {
                self.parallel = match value {
                    "true" | "1" | "yes" => true,
                    "false" | "0" | "no" => false,
                    other => return Err(Error::Config(format!("bad bool '{other}'"))),
                };
            }
            "gravity_up" => {
                let parts: Vec<&str> = value.split_whitespace().collect();
                if parts.len() != 3 {
                    return Err(Error::Config("gravity_up needs 3 components".into()));
                }
                self.gravity_up =
                    Vector3::new(scalar(parts[0])?, scalar(parts[1])?, scalar(parts[2])?);
            }
            other => return Err(Error::Config(format!("unknown config key '{other}'"))),
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        PipelineConfig::<f64>::default().validate().unwrap();
        PipelineConfig::<f32>::default().validate().unwrap();
    }

    #[test]
    fn config_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pipeline.cfg");
        std::fs::write(
            &path,
            "# comment\n\
             voxel_size = 0.1\n\
             frame_stride = 3\n\
             theta_normal = 20\n\
             gravity_up = 0 1 0\n\
             parallel = false\n\
             class.5 = wall\n\
             class.9 = ground\n",
        )
        .unwrap();
        let mut config = PipelineConfig::<f64>::default();
        config.apply_file(&path).unwrap();
        assert_eq!(config.cloud.voxel_size, 0.1);
        assert_eq!(config.frame_stride, 3);
        assert_eq!(config.fusion.theta_normal_deg, 20.0);
        assert_eq!(config.gravity_up, Vector3::new(0.0, 1.0, 0.0));
        assert!(!config.parallel);
        assert_eq!(config.class_table.classify(5), SemanticClass::Wall);
        assert_eq!(config.class_table.classify(9), SemanticClass::Ground);
        assert_eq!(config.class_table.classify(1), SemanticClass::Other);
        config.validate().unwrap();
    }

    #[test]
    fn unknown_key_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.cfg");
        std::fs::write(&path, "voxel_sise = 0.1\n").unwrap();
        let mut config = PipelineConfig::<f64>::default();
        assert!(config.apply_file(&path).is_err());
    }

    #[test]
    fn invalid_values_fail_validation() {
        let config = PipelineConfig::<f64> {
            frame_stride: 0,
            ..PipelineConfig::default()
        };
        assert!(config.validate().is_err());
        let mut config = PipelineConfig::<f64>::default();
        config.cloud.depth_min = 6.0;
        assert!(config.validate().is_err());
        let config = PipelineConfig::<f64> {
            lambda_max: 1.5,
            ..PipelineConfig::default()
        };
        assert!(config.validate().is_err());
    }
}
