//! End-to-end driver: per frame, the geometric estimator and the semantic
//! validator run under a concurrency contract that allows them to execute on
//! separate threads; fusion joins them at a strict per-frame barrier, and the
//! scene graph consumes the results in timestamp order. Parallel and
//! sequential execution produce identical graphs.

use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::Unit;

use crate::camera::Pose;
use crate::cloud::{backproject, distance_filter, voxel_downsample, PointCloud};
use crate::config::PipelineConfig;
use crate::dataset::{
    create_dataset_dirs, load_dataset, write_class_table, write_frame_images, write_intrinsics,
    write_poses,
};
use crate::error::{Error, Result};
use crate::eval::{match_to_ground_truth, RecognitionReport};
use crate::frame::Frame;
use crate::fusion::{fuse_frame, remove_dangling, structural_validate, FusionConfig};
use crate::graph::SceneGraph;
use crate::plane::Plane;
use crate::ply::export_ply;
use crate::ransac::{extract_planes, RansacConfig};
use crate::scalar::Real;
use crate::semantic::{class_filter, extract_semantic_planes, ClassTable, SemanticPlane};
use crate::structures::infer_structures_with;
use crate::synth::{
    plane_record, read_ground_truth_file, read_scene_file, synthetic_class_table, SyntheticScene,
};

/// Wall-clock statistics for one pipeline stage across processed frames.
#[derive(Debug, Clone, PartialEq)]
pub struct StageStats {
    pub name: &'static str,
    pub mean_ms: f64,
    pub max_ms: f64,
    pub frames: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TimingReport {
    pub stages: Vec<StageStats>,
    pub frame_mean_ms: f64,
    pub frame_max_ms: f64,
    pub frames: usize,
}

impl TimingReport {
    pub fn lines(&self) -> Vec<String> {
        let mut out = Vec::new();
        for s in &self.stages {
            out.push(format!(
                "stage {}: mean {:.2} ms, max {:.2} ms ({} frames)",
                s.name, s.mean_ms, s.max_ms, s.frames
            ));
        }
        out.push(format!(
            "per-frame total: mean {:.2} ms, max {:.2} ms ({} frames)",
            self.frame_mean_ms, self.frame_max_ms, self.frames
        ));
        out
    }
}

#[derive(Default)]
struct TimingAccum {
    samples: Vec<(&'static str, Vec<f64>)>,
    frame_totals: Vec<f64>,
}

impl TimingAccum {
    fn record(&mut self, stage: &'static str, ms: f64) {
        match self.samples.iter_mut().find(|(name, _)| *name == stage) {
            Some((_, v)) => v.push(ms),
            None => self.samples.push((stage, vec![ms])),
        }
    }

    fn finish(self) -> TimingReport {
        let stat = |v: &[f64]| {
            let mean = if v.is_empty() {
                0.0
            } else {
                v.iter().sum::<f64>() / v.len() as f64
            };
            let max = v.iter().copied().fold(0.0f64, f64::max);
            (mean, max)
        };
        let stages = self
            .samples
            .iter()
            .map(|(name, v)| {
                let (mean_ms, max_ms) = stat(v);
                StageStats {
                    name,
                    mean_ms,
                    max_ms,
                    frames: v.len(),
                }
            })
            .collect();
        let (frame_mean_ms, frame_max_ms) = stat(&self.frame_totals);
        TimingReport {
            stages,
            frame_mean_ms,
            frame_max_ms,
            frames: self.frame_totals.len(),
        }
    }
}

#[derive(Debug)]
pub struct PipelineOutput<T: Real> {
    pub graph: SceneGraph<T>,
    pub recognition: Option<RecognitionReport>,
    pub timing: TimingReport,
    pub frames_processed: usize,
    /// Frames skipped by the loader plus frames that failed a stage.
    pub frames_skipped: usize,
    pub warnings: Vec<String>,
}

/// Extracted planes, the filtered cloud they index into, the per-frame
/// scaled RANSAC config, and the stage wall time in milliseconds.
type GeometricStageOutput<T> = (Vec<Plane<T>>, PointCloud<T>, RansacConfig<T>, f64);

fn geometric_stage<T: Real>(
    frame: &Frame<T>,
    intrinsics: &crate::camera::CameraIntrinsics<T>,
    config: &PipelineConfig<T>,
    ransac: &RansacConfig<T>,
) -> Result<GeometricStageOutput<T>> {
    let start = Instant::now();
    let cloud = backproject(frame, intrinsics, config.cloud.pixel_stride);
    let down = voxel_downsample(&cloud, config.cloud.voxel_size);
    let filtered = distance_filter(&down, config.cloud.depth_min, config.cloud.depth_max)?;
    let scaled = ransac.scaled_to(filtered.len());
    let planes = extract_planes(&filtered, &scaled);
    Ok((planes, filtered, scaled, start.elapsed().as_secs_f64() * 1e3))
}

fn semantic_stage<T: Real>(
    frame: &Frame<T>,
    intrinsics: &crate::camera::CameraIntrinsics<T>,
    table: &ClassTable,
    config: &PipelineConfig<T>,
    ransac: &RansacConfig<T>,
) -> Result<(Vec<SemanticPlane<T>>, f64)> {
    let start = Instant::now();
    let Some(labels) = &frame.labels else {
        return Ok((Vec::new(), start.elapsed().as_secs_f64() * 1e3));
    };
    if table.is_empty() {
        return Ok((Vec::new(), start.elapsed().as_secs_f64() * 1e3));
    }
    let label_map = class_filter::<T>(labels, table, frame.confidence.as_ref())?;
    let planes = extract_semantic_planes(frame, &label_map, intrinsics, ransac, config.lambda_max);
    Ok((planes, start.elapsed().as_secs_f64() * 1e3))
}

/// Runs the full pipeline over a dataset directory: per stride-selected frame,
/// geometric and semantic stages (parallel when configured), fusion, then
/// scene-graph association in timestamp order. Exports and evaluation are
/// driven by the paths in the config.
pub fn run_pipeline<T: Real>(
    dataset_dir: &Path,
    config: &PipelineConfig<T>,
) -> Result<PipelineOutput<T>> {
    config.validate()?;
    let dataset = load_dataset::<T>(dataset_dir)?;
    let mut warnings = dataset.warnings.clone();
    let mut frames_skipped = dataset.skipped_frames;

    let class_table = if !config.class_table.is_empty() {
        config.class_table.clone()
    } else if let Some(table) = &dataset.class_table {
        table.clone()
    } else {
        ClassTable::new()
    };
    if class_table.is_empty() {
        warnings.push(
            "no class table configured and no classes.txt in the dataset; \
             the semantic stage will produce nothing"
                .into(),
        );
    }

    let gravity = Unit::new_normalize(config.gravity_up);
    let intrinsics = dataset.intrinsics;
    let mut graph = SceneGraph::new();
    let mut timing = TimingAccum::default();
    let mut frames_processed = 0usize;
    let mut warned_missing_pose = false;

    for (index, frame) in dataset
        .frames
        .iter()
        .enumerate()
        .step_by(config.frame_stride.max(1))
    {
        let frame_start = Instant::now();
        // Decorrelated per-frame, per-stage seeds keep parallel and
        // sequential runs identical.
        let geo_cfg = RansacConfig {
            random_seed: config.ransac.random_seed.wrapping_add(index as u64 * 2),
            ..config.ransac
        };
        let sem_cfg = RansacConfig {
            random_seed: config.ransac.random_seed.wrapping_add(index as u64 * 2 + 1),
            ..config.ransac
        };

        let run_geo = || geometric_stage(frame, &intrinsics, config, &geo_cfg);
        let run_sem = || semantic_stage(frame, &intrinsics, &class_table, config, &sem_cfg);
        let (geo_result, sem_result) = if config.parallel {
            std::thread::scope(|scope| {
                let geo_handle = scope.spawn(run_geo);
                let sem = run_sem();
                (geo_handle.join().expect("geometric stage panicked"), sem)
            })
        } else {
            (run_geo(), run_sem())
        };

        let (planes, filtered, scaled_cfg, geo_ms) = match geo_result {
            Ok(v) => v,
            Err(err) => {
                warnings.push(format!("frame {}: geometric stage failed: {err}", frame.timestamp));
                frames_skipped += 1;
                continue;
            }
        };
        let (semantic, sem_ms) = match sem_result {
            Ok(v) => v,
            Err(err) => {
                warnings.push(format!("frame {}: semantic stage failed: {err}", frame.timestamp));
                frames_skipped += 1;
                continue;
            }
        };
        timing.record("geometric", geo_ms);
        timing.record("semantic", sem_ms);

        // Fusion joins both stages at a per-frame barrier.
        let fusion_start = Instant::now();
        let fusion_cfg = FusionConfig {
            min_support: (scaled_cfg.min_inliers / 4).max(3),
            ..config.fusion
        };
        let pose = frame.pose.unwrap_or_else(|| {
            if !warned_missing_pose {
                warned_missing_pose = true;
            }
            Pose::identity(frame.timestamp)
        });
        let fused = fuse_frame(&planes, &filtered, &semantic, &fusion_cfg, frame.timestamp);
        let kept = remove_dangling(fused, &fusion_cfg);
        let validated = structural_validate(kept, &gravity, frame.pose.as_ref(), &fusion_cfg);
        timing.record("fusion", fusion_start.elapsed().as_secs_f64() * 1e3);

        let graph_start = Instant::now();
        for component in &validated {
            graph.associate(component, &pose, &config.association);
        }
        timing.record("graph", graph_start.elapsed().as_secs_f64() * 1e3);

        timing
            .frame_totals
            .push(frame_start.elapsed().as_secs_f64() * 1e3);
        frames_processed += 1;
    }
    if warned_missing_pose {
        warnings.push(
            "frames without poses were processed with the identity pose \
             (camera frame treated as world frame)"
                .into(),
        );
    }

    let structures = infer_structures_with(&graph, &gravity, &config.structure);
    graph.set_structures(structures);

    if let Some(path) = &config.export_graph {
        graph.export_to_file(path)?;
    }
    if let Some(path) = &config.export_ply {
        let landmarks: Vec<_> = graph.landmarks().collect();
        export_ply(&landmarks, path, config.ply_mode)?;
    }

    let recognition = match &config.ground_truth {
        Some(path) => {
            let truth = read_ground_truth_file::<T>(path)?;
            let landmarks: Vec<_> = graph.landmarks().collect();
            Some(match_to_ground_truth(
                &landmarks,
                &truth,
                config.eval_angle_tol_deg,
                config.eval_offset_tol,
            ))
        }
        None => None,
    };

    Ok(PipelineOutput {
        graph,
        recognition,
        timing: timing.finish(),
        frames_processed,
        frames_skipped,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenerateSummary {
    pub frames_written: usize,
    pub out_dir: PathBuf,
}

/// Renders every trajectory frame of the scene into a dataset directory,
/// together with intrinsics, poses, the class table and the ground-truth
/// building-component file.
pub fn write_dataset<T: Real>(scene: &SyntheticScene<T>, out_dir: &Path) -> Result<GenerateSummary> {
    create_dataset_dirs(out_dir)?;
    write_intrinsics(&out_dir.join("intrinsics.txt"), &scene.intrinsics)?;
    write_poses(&out_dir.join("poses.txt"), &scene.trajectory)?;
    write_class_table(&out_dir.join("classes.txt"), &synthetic_class_table())?;

    let mut gt = String::from("# ground-truth building components\n");
    for plane in scene.ground_truth_components() {
        gt.push_str(&plane_record(&plane));
        gt.push('\n');
    }
    let gt_path = out_dir.join("ground_truth.txt");
    std::fs::write(&gt_path, gt).map_err(|e| Error::io(gt_path, e))?;

    for index in 0..scene.trajectory.len() {
        let frame = scene.render_frame(index);
        write_frame_images(out_dir, &frame)?;
    }
    Ok(GenerateSummary {
        frames_written: scene.trajectory.len(),
        out_dir: out_dir.to_path_buf(),
    })
}

/// Parses a scene file and materializes it as a dataset directory.
pub fn generate_dataset<T: Real>(scene_file: &Path, out_dir: &Path) -> Result<GenerateSummary> {
    let scene = read_scene_file::<T>(scene_file)?;
    write_dataset(&scene, out_dir)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{box_room_scene, corridor_scene};

    #[test]
    fn generate_writes_expected_counts() {
        let dir = tempfile::tempdir().unwrap();
        let mut scene = corridor_scene::<f64>();
        scene.trajectory.truncate(3);
        let summary = write_dataset(&scene, dir.path()).unwrap();
        assert_eq!(summary.frames_written, 3);
        for sub in ["depth", "rgb", "label", "conf"] {
            let count = std::fs::read_dir(dir.path().join(sub)).unwrap().count();
            assert_eq!(count, 3, "{sub} count");
        }
        assert!(dir.path().join("intrinsics.txt").is_file());
        assert!(dir.path().join("poses.txt").is_file());
        assert!(dir.path().join("ground_truth.txt").is_file());
        assert!(dir.path().join("classes.txt").is_file());
    }

    #[test]
    fn empty_trajectory_writes_valid_skeleton() {
        let dir = tempfile::tempdir().unwrap();
        let mut scene = box_room_scene::<f64>();
        scene.trajectory.clear();
        let summary = write_dataset(&scene, dir.path()).unwrap();
        assert_eq!(summary.frames_written, 0);
        assert!(dir.path().join("intrinsics.txt").is_file());
        let ds = load_dataset::<f64>(dir.path()).unwrap();
        assert!(ds.frames.is_empty());
    }

    #[test]
    fn dataset_round_trip_depth_is_bit_identical() {
        let dir = tempfile::tempdir().unwrap();
        let mut scene = box_room_scene::<f64>();
        scene.trajectory.truncate(2);
        write_dataset(&scene, dir.path()).unwrap();
        let ds = load_dataset::<f64>(dir.path()).unwrap();
        assert_eq!(ds.frames.len(), 2);
        for (index, frame) in ds.frames.iter().enumerate() {
            let rendered = scene.render_frame(index);
            assert_eq!(frame.depth, rendered.depth, "frame {index} depth");
            assert_eq!(frame.rgb, rendered.rgb, "frame {index} rgb");
            assert_eq!(frame.labels, rendered.labels, "frame {index} labels");
            assert_eq!(
                frame.confidence, rendered.confidence,
                "frame {index} confidence"
            );
        }
    }

    #[test]
    fn generate_from_scene_file() {
        let dir = tempfile::tempdir().unwrap();
        let scene_path = dir.path().join("scene.txt");
        let mut scene = corridor_scene::<f64>();
        scene.trajectory.truncate(2);
        crate::synth::write_scene_file(&scene, &scene_path).unwrap();
        let out = dir.path().join("out");
        let summary = generate_dataset::<f64>(&scene_path, &out).unwrap();
        assert_eq!(summary.frames_written, 2);
        assert!(out.join("depth").is_dir());
    }
}
