use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use planegraph::config::PipelineConfig;
use planegraph::pipeline::{generate_dataset, run_pipeline};
use planegraph::ply::PlyMode;
use planegraph::semantic::SemanticClass;
use planegraph::structures::StructureKind;
use planegraph::synth::{box_room_scene, corridor_scene, write_scene_file};

#[derive(Parser)]
#[command(
    name = "planegraph",
    version,
    about = "Detects wall and ground planes in RGB-D datasets, validates them \
             semantically and maps them into a 3D scene graph"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the detection pipeline over a dataset directory.
    Run(Box<RunArgs>),
    /// Render a synthetic scene description into a dataset directory.
    Generate {
        /// Scene description file.
        #[arg(long)]
        scene: PathBuf,
        /// Output dataset directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a built-in example scene description.
    ExampleScene {
        /// One of: box-room, corridor.
        #[arg(long)]
        name: String,
        /// Output scene file.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Dataset directory (TUM-style layout).
    #[arg(long)]
    dataset: PathBuf,
    /// Key/value config file; command-line flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Process every k-th frame.
    #[arg(long)]
    frame_stride: Option<usize>,
    /// Voxel edge length for down-sampling, meters.
    #[arg(long)]
    voxel_size: Option<f64>,
    /// Minimum kept point range, meters.
    #[arg(long)]
    depth_min: Option<f64>,
    /// Maximum kept point range, meters.
    #[arg(long)]
    depth_max: Option<f64>,
    /// RANSAC iteration budget per plane.
    #[arg(long)]
    ransac_iters: Option<usize>,
    /// RANSAC inlier threshold, meters.
    #[arg(long)]
    inlier_threshold: Option<f64>,
    /// Minimum geometric/semantic match score in [0, 1].
    #[arg(long)]
    match_threshold: Option<f64>,
    /// RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Write the reconstructed map as ASCII PLY.
    #[arg(long)]
    export_ply: Option<PathBuf>,
    /// PLY coloring: color-coded | rgb-textured.
    #[arg(long, default_value = "color-coded")]
    ply_mode: String,
    /// Write the scene-graph export.
    #[arg(long)]
    export_graph: Option<PathBuf>,
    /// Ground-truth plane file; enables the recognition report.
    #[arg(long)]
    eval_gt: Option<PathBuf>,
    /// Force the geometric and semantic stages onto one thread.
    #[arg(long)]
    sequential: bool,
}

fn run(args: RunArgs) -> Result<()> {
    let mut config = PipelineConfig::<f64>::default();
    if let Some(path) = &args.config {
        config
            .apply_file(path)
            .with_context(|| format!("loading config {}", path.display()))?;
    }
    if let Some(v) = args.frame_stride {
        config.frame_stride = v;
    }
    if let Some(v) = args.voxel_size {
        config.cloud.voxel_size = v;
    }
    if let Some(v) = args.depth_min {
        config.cloud.depth_min = v;
    }
    if let Some(v) = args.depth_max {
        config.cloud.depth_max = v;
    }
    if let Some(v) = args.ransac_iters {
        config.ransac.max_iterations = v;
    }
    if let Some(v) = args.inlier_threshold {
        config.ransac.epsilon_inlier = v;
    }
    if let Some(v) = args.match_threshold {
        config.fusion.epsilon_match = v;
    }
    if let Some(v) = args.seed {
        config.ransac.random_seed = v;
    }
    if args.sequential {
        config.parallel = false;
    }
    config.ply_mode = PlyMode::parse(&args.ply_mode)?;
    config.export_ply = args.export_ply;
    config.export_graph = args.export_graph;
    config.ground_truth = args.eval_gt;

    let out = run_pipeline(&args.dataset, &config)
        .with_context(|| format!("running pipeline on {}", args.dataset.display()))?;

    println!(
        "frames: {} processed, {} skipped",
        out.frames_processed, out.frames_skipped
    );
    let count = |class: SemanticClass| {
        out.graph
            .landmarks()
            .filter(|l| l.class == class)
            .count()
    };
    println!(
        "landmarks: {} (wall {}, ground {})",
        out.graph.landmark_count(),
        count(SemanticClass::Wall),
        count(SemanticClass::Ground)
    );
    let kind_count = |kind: StructureKind| {
        out.graph
            .structures
            .iter()
            .filter(|s| s.kind == kind)
            .count()
    };
    println!(
        "structures: {} (room {}, corridor {})",
        out.graph.structures.len(),
        kind_count(StructureKind::Room),
        kind_count(StructureKind::Corridor)
    );
    for landmark in out.graph.landmarks() {
        let n = landmark.normal;
        println!(
            "landmark {} {} n=({:.4} {:.4} {:.4}) d={:.4} support={} observations={}",
            landmark.id,
            landmark.class,
            n.x,
            n.y,
            n.z,
            landmark.d,
            landmark.support,
            landmark.observations.len()
        );
    }
    for line in out.timing.lines() {
        println!("{line}");
    }
    if let Some(report) = &out.recognition {
        println!(
            "recognition: tp {} fp {} fn {}",
            report.true_positives, report.false_positives, report.false_negatives
        );
        println!(
            "precision {:.3} recall {:.3} f1 {:.3}",
            report.precision, report.recall, report.f1
        );
    }
    for warning in &out.warnings {
        eprintln!("warning: {warning}");
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run(args) => run(*args)?,
        Command::Generate { scene, out } => {
            let summary = generate_dataset::<f64>(&scene, &out)
                .with_context(|| format!("generating dataset from {}", scene.display()))?;
            println!(
                "wrote {} frames to {}",
                summary.frames_written,
                summary.out_dir.display()
            );
        }
        Command::ExampleScene { name, out } => {
            let scene = match name.as_str() {
                "box-room" => box_room_scene::<f64>(),
                "corridor" => corridor_scene::<f64>(),
                other => bail!("unknown example scene '{other}' (use box-room or corridor)"),
            };
            write_scene_file(&scene, &out)
                .with_context(|| format!("writing scene to {}", out.display()))?;
            println!("wrote scene '{name}' to {}", out.display());
        }
    }
    Ok(())
}
