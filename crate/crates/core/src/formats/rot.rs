//! Oriented-box label text: `class cx cy w h theta` in pixels and radians,
//! optionally followed by a score. The class token is a numeric id.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::model::{Annotation, BoxRot, ClassCatalog, Dataset, Frame, Geometry};

pub fn rot_line(class_id: u32, b: &BoxRot, score: Option<f64>) -> String {
    let mut line = format!("{} {} {} {} {} {}", class_id, b.cx, b.cy, b.w, b.h, b.theta);
    if let Some(s) = score {
        line.push_str(&format!(" {s}"));
    }
    line
}

pub fn write_rot(frame: &Frame) -> Result<String> {
    let mut out = String::new();
    for (i, ann) in frame.annotations.iter().enumerate() {
        let Geometry::Rot(b) = &ann.geometry else {
            return Err(Error::record(i, format!("frame {:?}: expected a rotated box", frame.id)));
        };
        out.push_str(&rot_line(ann.class_id, b, ann.score));
        out.push('\n');
    }
    Ok(out)
}

pub fn parse_rot(text: &str, catalog: &ClassCatalog) -> Result<Vec<Annotation>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() != 6 && fields.len() != 7 {
            return Err(Error::record(i, format!("expected 6 or 7 fields, found {}", fields.len())));
        }
        let class_id: u32 = fields[0]
            .parse()
            .map_err(|_| Error::record(i, format!("bad class id {:?}", fields[0])))?;
        if !catalog.contains(class_id) {
            return Err(Error::record(i, format!("class id {class_id} not in catalog")));
        }
        let nums = fields[1..]
            .iter()
            .map(|f| f.parse::<f64>().map_err(|_| Error::record(i, format!("bad number {f:?}"))))
            .collect::<Result<Vec<_>>>()?;
        let b = BoxRot::new(nums[0], nums[1], nums[2], nums[3], nums[4]).map_err(|e| Error::record(i, e.to_string()))?;
        let score = nums.get(5).copied();
        if let Some(s) = score {
            if !(0.0..=1.0).contains(&s) {
                return Err(Error::record(i, format!("score {s} outside [0, 1]")));
            }
        }
        out.push(Annotation {
            class_id,
            geometry: Geometry::Rot(b),
            score,
        });
    }
    Ok(out)
}

pub fn write_rot_dir(dataset: &Dataset, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for frame in &dataset.frames {
        let path = dir.join(format!("{}.txt", frame.id));
        let text = write_rot(frame).map_err(|e| e.in_file(&path))?;
        fs::write(&path, text).map_err(|e| Error::from(e).in_file(&path))?;
        written.push(path);
    }
    Ok(written)
}

/// Reads every label file in `dir` as one 1×1 frame (sorted by id).
pub fn read_rot_dir(dir: &Path, catalog: ClassCatalog) -> Result<Dataset> {
    let mut frames = Vec::new();
    for id in super::yolo::list_label_ids(dir)? {
        let path = dir.join(format!("{id}.txt"));
        let text = fs::read_to_string(&path).map_err(|e| Error::from(e).in_file(&path))?;
        let mut frame = Frame::new(id, 1, 1);
        frame.annotations = parse_rot(&text, &catalog).map_err(|e| e.in_file(&path))?;
        frames.push(frame);
    }
    Dataset::new(catalog, frames)
}
