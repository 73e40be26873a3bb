//! TUM-style dataset directory ingestion and the matching writer used by the
//! synthetic generator.
//!
//! Layout:
//! ```text
//! root/
//!   intrinsics.txt   fx fy cx cy width height depth_scale (one line)
//!   poses.txt        timestamp tx ty tz qx qy qz qw (optional)
//!   classes.txt      <id>=<wall|ground|other> (optional)
//!   depth/<timestamp>.png   16-bit grayscale, raw depth units
//!   rgb/<timestamp>.png     8-bit color
//!   label/<timestamp>.png   16-bit class ids (optional)
//!   conf/<timestamp>.png    8-bit lambda * 255 (optional)
//! ```
//! Streams are associated to the depth timestamps by greedy one-to-one
//! nearest-neighbor matching within [`ASSOCIATION_WINDOW_SECS`].

use std::path::{Path, PathBuf};

use nalgebra::Vector3;

use crate::camera::{CameraIntrinsics, Pose};
use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::image::{Image, Rgb};
use crate::scalar::Real;
use crate::semantic::{ClassTable, SemanticClass};

pub const ASSOCIATION_WINDOW_SECS: f64 = 0.02;

#[derive(Debug, Clone)]
pub struct Dataset<T: Real> {
    pub intrinsics: CameraIntrinsics<T>,
    /// Frames sorted by timestamp; every frame has depth and rgb.
    pub frames: Vec<Frame<T>>,
    /// Class table from `classes.txt`, when present.
    pub class_table: Option<ClassTable>,
    pub warnings: Vec<String>,
    pub skipped_frames: usize,
}

pub fn timestamp_filename(timestamp: f64) -> String {
    format!("{timestamp:.6}.png")
}

fn list_stream(dir: &Path, warnings: &mut Vec<String>) -> Vec<(f64, PathBuf)> {
    let mut entries = Vec::new();
    let Ok(read_dir) = std::fs::read_dir(dir) else {
        return entries;
    };
    for entry in read_dir.flatten() {
        let path = entry.path();
        if path.extension().and_then(|e| e.to_str()) != Some("png") {
            continue;
        }
        match path
            .file_stem()
            .and_then(|s| s.to_str())
            .and_then(|s| s.parse::<f64>().ok())
        {
            Some(ts) if ts.is_finite() => entries.push((ts, path)),
            _ => warnings.push(format!("unparseable timestamp in {}", path.display())),
        }
    }
    entries.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite timestamps"));
    entries
}

/// Greedy one-to-one association of `b` entries to `a` entries by smallest
/// time difference within the window. Returns `b` index per `a` index.
fn associate(a: &[f64], b: &[f64], window: f64) -> Vec<Option<usize>> {
    let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
    let mut start = 0usize;
    for (ai, &ta) in a.iter().enumerate() {
        while start < b.len() && b[start] < ta - window {
            start += 1;
        }
        let mut bi = start;
        while bi < b.len() && b[bi] <= ta + window {
            candidates.push(((b[bi] - ta).abs(), ai, bi));
            bi += 1;
        }
    }
    candidates.sort_by(|x, y| {
        x.0.partial_cmp(&y.0)
            .expect("finite dt")
            .then(x.1.cmp(&y.1))
            .then(x.2.cmp(&y.2))
    });
    let mut a_match = vec![None; a.len()];
    let mut b_used = vec![false; b.len()];
    for (_, ai, bi) in candidates {
        if a_match[ai].is_some() || b_used[bi] {
            continue;
        }
        a_match[ai] = Some(bi);
        b_used[bi] = true;
    }
    a_match
}

fn read_intrinsics<T: Real>(path: &Path) -> Result<CameraIntrinsics<T>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let line = text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('#'))
        .ok_or_else(|| Error::parse(path, 1, "empty intrinsics file"))?;
    let nums: Vec<f64> = line
        .split_whitespace()
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| Error::parse(path, 1, format!("bad number '{s}'")))
        })
        .collect::<Result<_>>()?;
    if nums.len() != 7 {
        return Err(Error::parse(
            path,
            1,
            format!("expected 7 intrinsics fields, found {}", nums.len()),
        ));
    }
    CameraIntrinsics::new(
        T::of(nums[0]),
        T::of(nums[1]),
        T::of(nums[2]),
        T::of(nums[3]),
        nums[4] as usize,
        nums[5] as usize,
        T::of(nums[6]),
    )
}

fn read_poses<T: Real>(path: &Path) -> Result<Vec<Pose<T>>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut poses = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let nums: Vec<f64> = line
            .split_whitespace()
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| Error::parse(path, idx + 1, format!("bad number '{s}'")))
            })
            .collect::<Result<_>>()?;
        if nums.len() != 8 {
            return Err(Error::parse(
                path,
                idx + 1,
                format!("expected 8 pose fields, found {}", nums.len()),
            ));
        }
        poses.push(Pose::from_parts(
            Vector3::new(T::of(nums[1]), T::of(nums[2]), T::of(nums[3])),
            [T::of(nums[4]), T::of(nums[5]), T::of(nums[6]), T::of(nums[7])],
            nums[0],
        )?);
    }
    poses.sort_by(|a, b| a.timestamp.partial_cmp(&b.timestamp).expect("finite ts"));
    Ok(poses)
}

pub fn read_class_table(path: &Path) -> Result<ClassTable> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut table = ClassTable::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (id, class) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(path, idx + 1, "expected <id>=<class>"))?;
        let id: u16 = id
            .trim()
            .parse()
            .map_err(|_| Error::parse(path, idx + 1, format!("bad class id '{id}'")))?;
        table.insert(id, SemanticClass::parse(class)?);
    }
    Ok(table)
}

pub fn write_class_table(path: &Path, table: &ClassTable) -> Result<()> {
    let mut out = String::new();
    for (id, class) in table.entries() {
        out.push_str(&format!("{id}={class}\n"));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

fn decode_luma16(path: &Path) -> Result<Image<u16>> {
    let img = image::open(path).map_err(|e| Error::Image {
        path: path.into(),
        source: e,
    })?;
    let luma = img.to_luma16();
    let (w, h) = (luma.width() as usize, luma.height() as usize);
    Ok(Image::from_vec(w, h, luma.into_raw()))
}

fn decode_luma8(path: &Path) -> Result<Image<u8>> {
    let img = image::open(path).map_err(|e| Error::Image {
        path: path.into(),
        source: e,
    })?;
    let luma = img.to_luma8();
    let (w, h) = (luma.width() as usize, luma.height() as usize);
    Ok(Image::from_vec(w, h, luma.into_raw()))
}

fn decode_rgb(path: &Path) -> Result<Image<Rgb>> {
    let img = image::open(path).map_err(|e| Error::Image {
        path: path.into(),
        source: e,
    })?;
    let rgb = img.to_rgb8();
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    let data: Vec<Rgb> = rgb.into_raw().chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
    Ok(Image::from_vec(w, h, data))
}

/// Loads a dataset directory. Frames are depth-driven: a depth image without
/// an rgb partner inside the association window is skipped (and counted);
/// label, confidence and pose attach the same way but are optional.
pub fn load_dataset<T: Real>(root: &Path) -> Result<Dataset<T>> {
    let intrinsics_path = root.join("intrinsics.txt");
    if !intrinsics_path.is_file() {
        return Err(Error::Dataset(format!(
            "missing intrinsics file {}",
            intrinsics_path.display()
        )));
    }
    let intrinsics = read_intrinsics::<T>(&intrinsics_path)?;

    let mut warnings = Vec::new();
    let depth_entries = list_stream(&root.join("depth"), &mut warnings);
    let rgb_entries = list_stream(&root.join("rgb"), &mut warnings);
    let label_entries = list_stream(&root.join("label"), &mut warnings);
    let conf_entries = list_stream(&root.join("conf"), &mut warnings);
    if depth_entries.is_empty() {
        warnings.push(format!("no depth images under {}", root.display()));
    }

    let poses = {
        let path = root.join("poses.txt");
        if path.is_file() {
            read_poses::<T>(&path)?
        } else {
            Vec::new()
        }
    };
    let class_table = {
        let path = root.join("classes.txt");
        if path.is_file() {
            Some(read_class_table(&path)?)
        } else {
            None
        }
    };

    let depth_ts: Vec<f64> = depth_entries.iter().map(|e| e.0).collect();
    let ts_of = |entries: &[(f64, PathBuf)]| entries.iter().map(|e| e.0).collect::<Vec<f64>>();
    let rgb_match = associate(&depth_ts, &ts_of(&rgb_entries), ASSOCIATION_WINDOW_SECS);
    let label_match = associate(&depth_ts, &ts_of(&label_entries), ASSOCIATION_WINDOW_SECS);
    let conf_match = associate(&depth_ts, &ts_of(&conf_entries), ASSOCIATION_WINDOW_SECS);
    let pose_ts: Vec<f64> = poses.iter().map(|p| p.timestamp).collect();
    let pose_match = associate(&depth_ts, &pose_ts, ASSOCIATION_WINDOW_SECS);

    let mut frames = Vec::new();
    let mut skipped_frames = 0usize;
    for (i, (timestamp, depth_path)) in depth_entries.iter().enumerate() {
        let Some(rgb_idx) = rgb_match[i] else {
            warnings.push(format!(
                "depth {} has no rgb within {ASSOCIATION_WINDOW_SECS} s",
                depth_path.display()
            ));
            skipped_frames += 1;
            continue;
        };
        let loaded = (|| -> Result<Frame<T>> {
            let depth = decode_luma16(depth_path)?;
            let rgb = decode_rgb(&rgb_entries[rgb_idx].1)?;
            let labels = match label_match[i] {
                Some(k) => Some(decode_luma16(&label_entries[k].1)?),
                None => None,
            };
            let confidence = match conf_match[i] {
                Some(k) => Some(decode_luma8(&conf_entries[k].1)?),
                None => None,
            };
            let frame = Frame {
                timestamp: *timestamp,
                depth,
                rgb,
                labels,
                confidence,
                pose: pose_match[i].map(|k| poses[k]),
            };
            frame.validate_dims(&intrinsics)?;
            Ok(frame)
        })();
        match loaded {
            Ok(frame) => frames.push(frame),
            Err(err) => {
                warnings.push(format!("skipping frame at {timestamp}: {err}"));
                skipped_frames += 1;
            }
        }
    }

    Ok(Dataset {
        intrinsics,
        frames,
        class_table,
        warnings,
        skipped_frames,
    })
}

// --- writer side -------------------------------------------------------------

fn image_error(path: &Path, e: image::ImageError) -> Error {
    Error::Image {
        path: path.into(),
        source: e,
    }
}

pub fn save_luma16(path: &Path, img: &Image<u16>) -> Result<()> {
    let buf: image::ImageBuffer<image::Luma<u16>, Vec<u16>> = image::ImageBuffer::from_raw(
        img.width() as u32,
        img.height() as u32,
        img.as_slice().to_vec(),
    )
    .expect("buffer matches dimensions");
    buf.save(path).map_err(|e| image_error(path, e))
}

pub fn save_luma8(path: &Path, img: &Image<u8>) -> Result<()> {
    let buf: image::ImageBuffer<image::Luma<u8>, Vec<u8>> = image::ImageBuffer::from_raw(
        img.width() as u32,
        img.height() as u32,
        img.as_slice().to_vec(),
    )
    .expect("buffer matches dimensions");
    buf.save(path).map_err(|e| image_error(path, e))
}

pub fn save_rgb(path: &Path, img: &Image<Rgb>) -> Result<()> {
    let data: Vec<u8> = img.as_slice().iter().flatten().copied().collect();
    let buf: image::ImageBuffer<image::Rgb<u8>, Vec<u8>> =
        image::ImageBuffer::from_raw(img.width() as u32, img.height() as u32, data)
            .expect("buffer matches dimensions");
    buf.save(path).map_err(|e| image_error(path, e))
}

pub fn write_intrinsics<T: Real>(path: &Path, intrinsics: &CameraIntrinsics<T>) -> Result<()> {
    let line = format!(
        "{} {} {} {} {} {} {}\n",
        intrinsics.fx.as_f64(),
        intrinsics.fy.as_f64(),
        intrinsics.cx.as_f64(),
        intrinsics.cy.as_f64(),
        intrinsics.width,
        intrinsics.height,
        intrinsics.depth_scale.as_f64()
    );
    std::fs::write(path, line).map_err(|e| Error::io(path, e))
}

pub fn write_poses<T: Real>(path: &Path, poses: &[Pose<T>]) -> Result<()> {
    let mut out = String::new();
    for pose in poses {
        let t = pose.translation;
        let q = pose.rotation.into_inner();
        out.push_str(&format!(
            "{} {} {} {} {} {} {} {}\n",
            pose.timestamp,
            t.x.as_f64(),
            t.y.as_f64(),
            t.z.as_f64(),
            q.i.as_f64(),
            q.j.as_f64(),
            q.k.as_f64(),
            q.w.as_f64()
        ));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Writes one frame's image channels into the stream subdirectories.
pub fn write_frame_images<T: Real>(root: &Path, frame: &Frame<T>) -> Result<()> {
    let name = timestamp_filename(frame.timestamp);
    save_luma16(&root.join("depth").join(&name), &frame.depth)?;
    save_rgb(&root.join("rgb").join(&name), &frame.rgb)?;
    if let Some(labels) = &frame.labels {
        save_luma16(&root.join("label").join(&name), labels)?;
    }
    if let Some(conf) = &frame.confidence {
        save_luma8(&root.join("conf").join(&name), conf)?;
    }
    Ok(())
}

pub fn create_dataset_dirs(root: &Path) -> Result<()> {
    for sub in ["depth", "rgb", "label", "conf"] {
        std::fs::create_dir_all(root.join(sub)).map_err(|e| Error::io(root.join(sub), e))?;
    }
    Ok(())
}
