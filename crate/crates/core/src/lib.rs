//! Detection, semantic validation and global mapping of building components
//! (wall and ground planes) from RGB-D data.
//!
//! The pipeline per frame: back-project the depth image, down-sample and
//! distance-filter the cloud, extract planes with iterative RANSAC
//! ([`ransac`]); in parallel, filter the semantic label map to wall/ground
//! pixels and extract labeled planes with a second RANSAC pass
//! ([`semantic`]); fuse both sets into validated components ([`fusion`]);
//! associate validated components across frames into plane landmarks and
//! infer rooms/corridors ([`graph`], [`structures`]). A synthetic scene
//! renderer ([`synth`]) provides ground truth for the recognition metrics
//! ([`eval`]).
//!
//! All geometry is generic over the scalar type via [`scalar::Real`];
//! concrete `f32`/`f64` aliases live at the crate root. The binaries use the
//! `f64` variants.

pub mod camera;
pub mod cloud;
pub mod config;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod frame;
pub mod fusion;
pub mod geom2d;
pub mod graph;
pub mod image;
pub mod pipeline;
pub mod plane;
pub mod ply;
pub mod ransac;
pub mod scalar;
pub mod semantic;
pub mod structures;
pub mod synth;

pub use error::{Error, Result};
pub use scalar::Real;

/// Single-precision aliases.
pub type CameraIntrinsics32 = camera::CameraIntrinsics<f32>;
pub type Pose32 = camera::Pose<f32>;
pub type PointCloud32 = cloud::PointCloud<f32>;
pub type Plane32 = plane::Plane<f32>;
pub type SemanticPlane32 = semantic::SemanticPlane<f32>;
pub type ValidatedComponent32 = fusion::ValidatedComponent<f32>;
pub type PlaneLandmark32 = graph::PlaneLandmark<f32>;
pub type SceneGraph32 = graph::SceneGraph<f32>;
pub type SyntheticScene32 = synth::SyntheticScene<f32>;
pub type PipelineConfig32 = config::PipelineConfig<f32>;

/// Double-precision aliases (used by the CLI and the acceptance suite).
pub type CameraIntrinsics64 = camera::CameraIntrinsics<f64>;
pub type Pose64 = camera::Pose<f64>;
pub type PointCloud64 = cloud::PointCloud<f64>;
pub type Plane64 = plane::Plane<f64>;
pub type SemanticPlane64 = semantic::SemanticPlane<f64>;
pub type ValidatedComponent64 = fusion::ValidatedComponent<f64>;
pub type PlaneLandmark64 = graph::PlaneLandmark<f64>;
pub type SceneGraph64 = graph::SceneGraph<f64>;
pub type SyntheticScene64 = synth::SyntheticScene<f64>;
pub type PipelineConfig64 = config::PipelineConfig<f64>;
