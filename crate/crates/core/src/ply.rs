//! ASCII PLY export of the reconstructed map: one vertex per stored landmark
//! inlier point, either with a fixed color per landmark (class + id) or the
//! original RGB textures.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::{LandmarkId, PlaneLandmark};
use crate::image::Rgb;
use crate::scalar::Real;
use crate::semantic::SemanticClass;
use crate::synth::hsv_to_rgb;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlyMode {
    /// One fixed color per landmark class + id.
    ColorCoded,
    /// Original per-point RGB.
    RgbTextured,
}

impl PlyMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "color" | "color-coded" => Ok(PlyMode::ColorCoded),
            "rgb" | "rgb-textured" => Ok(PlyMode::RgbTextured),
            other => Err(Error::Config(format!("unknown ply mode '{other}'"))),
        }
    }
}

/// Deterministic palette: hue from a golden-ratio walk over the id, tone from
/// the class.
pub fn landmark_color(class: SemanticClass, id: LandmarkId) -> Rgb {
    let hue = (id.0 as f64 * 0.618_033_988_749_895 + 0.15).fract();
    match class {
        SemanticClass::Wall => hsv_to_rgb(hue, 0.75, 0.95),
        SemanticClass::Ground => hsv_to_rgb(hue, 0.45, 0.65),
        SemanticClass::Other => hsv_to_rgb(hue, 0.10, 0.55),
    }
}

pub fn write_ply<T: Real, W: Write>(
    landmarks: &[&PlaneLandmark<T>],
    mode: PlyMode,
    mut w: W,
) -> std::io::Result<()> {
    let vertex_count: usize = landmarks.iter().map(|l| l.stored_points.len()).sum();
    writeln!(w, "ply")?;
    writeln!(w, "format ascii 1.0")?;
    writeln!(w, "comment planegraph reconstructed building components")?;
    writeln!(w, "element vertex {vertex_count}")?;
    writeln!(w, "property float x")?;
    writeln!(w, "property float y")?;
    writeln!(w, "property float z")?;
    writeln!(w, "property uchar red")?;
    writeln!(w, "property uchar green")?;
    writeln!(w, "property uchar blue")?;
    writeln!(w, "end_header")?;
    for landmark in landmarks {
        let fixed = landmark_color(landmark.class, landmark.id);
        for point in &landmark.stored_points {
            let [r, g, b] = match mode {
                PlyMode::ColorCoded => fixed,
                PlyMode::RgbTextured => point.color,
            };
            writeln!(
                w,
                "{:.4} {:.4} {:.4} {} {} {}",
                point.position.x.as_f64(),
                point.position.y.as_f64(),
                point.position.z.as_f64(),
                r,
                g,
                b
            )?;
        }
    }
    Ok(())
}

pub fn export_ply<T: Real>(
    landmarks: &[&PlaneLandmark<T>],
    path: &Path,
    mode: PlyMode,
) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_ply(landmarks, mode, std::io::BufWriter::new(file)).map_err(|e| Error::io(path, e))
}
