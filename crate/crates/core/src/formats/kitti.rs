//! Minimal KITTI-style 3D label text.
//!
//! Each line is `name x y z dx dy dz yaw`, optionally followed by a score
//! for detections. Whitespace inside class names is written as `_`.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::model::{Annotation, Box3D, ClassCatalog, Dataset, Frame, Geometry};

fn encode_name(name: &str) -> String {
    name.split_whitespace().collect::<Vec<_>>().join("_")
}

fn decode_name(token: &str) -> String {
    token.replace('_', " ")
}

pub fn kitti_line(name: &str, b: &Box3D, score: Option<f64>) -> String {
    let mut line = format!(
        "{} {} {} {} {} {} {} {}",
        encode_name(name),
        b.x,
        b.y,
        b.z,
        b.dx,
        b.dy,
        b.dz,
        b.yaw
    );
    if let Some(s) = score {
        line.push_str(&format!(" {s}"));
    }
    line
}

/// One line per 3D box, LF terminated. Fails on any 2D geometry.
pub fn write_kitti(frame: &Frame, catalog: &ClassCatalog) -> Result<String> {
    let mut out = String::new();
    for (i, ann) in frame.annotations.iter().enumerate() {
        let b = ann
            .geometry
            .as_3d()
            .ok_or_else(|| Error::record(i, format!("frame {:?}: KITTI labels need 3D boxes", frame.id)))?;
        out.push_str(&kitti_line(catalog.name(ann.class_id)?, b, ann.score));
        out.push('\n');
    }
    Ok(out)
}

pub fn parse_kitti(text: &str, catalog: &ClassCatalog) -> Result<Vec<Annotation>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() != 8 && fields.len() != 9 {
            return Err(Error::record(i, format!("expected 8 or 9 fields, found {}", fields.len())));
        }
        let class_id = catalog
            .lookup(&decode_name(fields[0]))
            .map_err(|e| Error::record(i, e.to_string()))?;
        let nums = fields[1..]
            .iter()
            .map(|f| f.parse::<f64>().map_err(|_| Error::record(i, format!("bad number {f:?}"))))
            .collect::<Result<Vec<_>>>()?;
        let b = Box3D::new(nums[0], nums[1], nums[2], nums[3], nums[4], nums[5], nums[6])
            .map_err(|e| Error::record(i, e.to_string()))?;
        let score = nums.get(7).copied();
        if let Some(s) = score {
            if !(0.0..=1.0).contains(&s) {
                return Err(Error::record(i, format!("score {s} outside [0, 1]")));
            }
        }
        out.push(Annotation {
            class_id,
            geometry: Geometry::ThreeD(b),
            score,
        });
    }
    Ok(out)
}

/// Writes `<frame id>.txt` per frame, including empty files for frames
/// without boxes.
pub fn write_kitti_dir(dataset: &Dataset, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for frame in &dataset.frames {
        let path = dir.join(format!("{}.txt", frame.id));
        let text = write_kitti(frame, &dataset.catalog).map_err(|e| e.in_file(&path))?;
        fs::write(&path, text).map_err(|e| Error::from(e).in_file(&path))?;
        written.push(path);
    }
    Ok(written)
}

/// Reads every label file in `dir` as one frame (sorted by id).
pub fn read_kitti_dir(dir: &Path, catalog: ClassCatalog) -> Result<Dataset> {
    let mut frames = Vec::new();
    for id in super::yolo::list_label_ids(dir)? {
        let path = dir.join(format!("{id}.txt"));
        let text = fs::read_to_string(&path).map_err(|e| Error::from(e).in_file(&path))?;
        let mut frame = Frame::new(id, 1, 1);
        frame.annotations = parse_kitti(&text, &catalog).map_err(|e| e.in_file(&path))?;
        frames.push(frame);
    }
    Dataset::new(catalog, frames)
}
