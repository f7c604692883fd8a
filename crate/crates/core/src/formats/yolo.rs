//! YOLO label text: one `class cx cy w h` line per box, coordinates
//! normalized by the image size. Detection files may carry a sixth
//! confidence column.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::model::{Annotation, BoxAA, ClassCatalog, Dataset, Frame, Geometry};

/// Formats a normalized value with six decimals, dropping trailing zeros
/// but keeping at least one fractional digit (`0.5`, `1.0`, `0.123457`).
pub fn format_normalized(v: f64) -> String {
    let mut s = format!("{v:.6}");
    while s.ends_with('0') && !s.ends_with(".0") {
        s.pop();
    }
    if s == "-0.0" {
        s.remove(0);
    }
    s
}

pub fn yolo_line(class_id: u32, b: &BoxAA, width: u32, height: u32, score: Option<f64>) -> Result<String> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidValue("image dimensions unknown".into()));
    }
    let (w, h) = (f64::from(width), f64::from(height));
    let (cx, cy) = b.center();
    let mut line = format!(
        "{} {} {} {} {}",
        class_id,
        format_normalized(cx / w),
        format_normalized(cy / h),
        format_normalized(b.width() / w),
        format_normalized(b.height() / h)
    );
    if let Some(s) = score {
        line.push(' ');
        line.push_str(&format_normalized(s));
    }
    Ok(line)
}

/// Serializes one frame's boxes. Every line ends with LF.
pub fn frame_to_yolo(frame: &Frame) -> Result<String> {
    let mut out = String::new();
    for ann in &frame.annotations {
        let b = ann.geometry.as_aa().ok_or_else(|| {
            Error::InvalidValue(format!("frame {:?}: YOLO labels need axis-aligned boxes", frame.id))
        })?;
        out.push_str(&yolo_line(ann.class_id, b, frame.width, frame.height, ann.score)?);
        out.push('\n');
    }
    Ok(out)
}

/// Parses label text for an image of the given size. Class ids are checked
/// against `catalog`.
pub fn parse_yolo(text: &str, width: u32, height: u32, catalog: &ClassCatalog) -> Result<Vec<Annotation>> {
    let (w, h) = (f64::from(width), f64::from(height));
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 5 && fields.len() != 6 {
            return Err(Error::record(i, format!("expected 5 or 6 fields, found {}", fields.len())));
        }
        let class_id: u32 = fields[0]
            .parse()
            .map_err(|_| Error::record(i, format!("bad class id {:?}", fields[0])))?;
        if !catalog.contains(class_id) {
            return Err(Error::record(i, format!("class id {class_id} not in catalog")));
        }
        let mut vals = [0.0; 5];
        for (slot, field) in vals.iter_mut().zip(&fields[1..]) {
            let v: f64 = field
                .parse()
                .map_err(|_| Error::record(i, format!("bad number {field:?}")))?;
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::record(i, format!("value {v} outside [0, 1]")));
            }
            *slot = v;
        }
        let [cx, cy, bw, bh, score] = vals;
        let bbox = BoxAA::from_center(cx * w, cy * h, bw * w, bh * h)
            .map_err(|e| Error::record(i, e.to_string()))?
            .clamp(w, h);
        out.push(Annotation {
            class_id,
            geometry: Geometry::Aa(bbox),
            score: (fields.len() == 6).then_some(score),
        });
    }
    Ok(out)
}

pub fn label_path(dir: &Path, frame_id: &str) -> PathBuf {
    dir.join(format!("{frame_id}.txt"))
}

/// Writes `<frame id>.txt` for every frame and returns the paths written.
pub fn write_yolo_dir(dataset: &Dataset, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::with_capacity(dataset.frames.len());
    for frame in &dataset.frames {
        let path = label_path(dir, &frame.id);
        let text = frame_to_yolo(frame).map_err(|e| e.in_file(&path))?;
        fs::write(&path, text).map_err(|e| Error::from(e).in_file(&path))?;
        written.push(path);
    }
    Ok(written)
}

/// Reads one label file per frame. `frames` supplies ids, sizes and sources;
/// their existing annotations are replaced.
pub fn read_yolo_dir(dir: &Path, catalog: ClassCatalog, frames: Vec<Frame>) -> Result<Dataset> {
    let mut out = Vec::with_capacity(frames.len());
    for mut frame in frames {
        let path = label_path(dir, &frame.id);
        let text = fs::read_to_string(&path).map_err(|e| Error::from(e).in_file(&path))?;
        frame.annotations =
            parse_yolo(&text, frame.width, frame.height, &catalog).map_err(|e| e.in_file(&path))?;
        out.push(frame);
    }
    Dataset::new(catalog, out)
}

/// Reads every `*.txt` label file in `dir` (except `classes.txt`) without
/// image sizes: frames are 1×1 and boxes stay normalized. Axis-aligned IoU
/// is invariant under per-axis scaling, so this is sufficient for scoring.
pub fn read_yolo_dir_normalized(dir: &Path, catalog: ClassCatalog) -> Result<Dataset> {
    let mut frames = Vec::new();
    for id in list_label_ids(dir)? {
        frames.push(Frame::new(id, 1, 1));
    }
    read_yolo_dir(dir, catalog, frames)
}

/// Sorted frame ids of the `*.txt` files in a directory.
pub fn list_label_ids(dir: &Path) -> Result<Vec<String>> {
    let mut ids = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::from(e).in_file(dir))? {
        let path = entry?.path();
        if path.extension().is_some_and(|e| e == "txt") {
            if let Some(stem) = path.file_stem() {
                let stem = stem.to_string_lossy();
                if stem != "classes" {
                    ids.push(stem.into_owned());
                }
            }
        }
    }
    ids.sort();
    Ok(ids)
}

/// Parses a `classes.txt` style catalog: one name per non-empty line.
pub fn parse_class_names(text: &str) -> Result<ClassCatalog> {
    ClassCatalog::new(text.lines().map(str::trim).filter(|l| !l.is_empty()))
}

pub fn class_names_text(catalog: &ClassCatalog) -> String {
    catalog.names().iter().map(|n| format!("{n}\n")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(w: u32, h: u32, class_id: u32, b: BoxAA) -> Frame {
        let mut f = Frame::new("f", w, h);
        f.annotations.push(Annotation::ground_truth(class_id, Geometry::Aa(b)));
        f
    }

    #[test]
    fn number_formatting() {
        assert_eq!(format_normalized(0.5), "0.5");
        assert_eq!(format_normalized(1.0), "1.0");
        assert_eq!(format_normalized(0.0), "0.0");
        assert_eq!(format_normalized(0.1234567), "0.123457");
        assert_eq!(format_normalized(0.2), "0.2");
    }

    #[test]
    fn full_image_box() {
        let f = frame(640, 640, 4, BoxAA::new(0.0, 0.0, 640.0, 640.0).unwrap());
        assert_eq!(frame_to_yolo(&f).unwrap(), "4 0.5 0.5 1.0 1.0\n");
    }

    #[test]
    fn off_center_box() {
        let f = frame(100, 200, 0, BoxAA::new(10.0, 20.0, 40.0, 60.0).unwrap());
        assert_eq!(frame_to_yolo(&f).unwrap(), "0 0.25 0.2 0.3 0.2\n");
    }

    #[test]
    fn parse_inverts_write() {
        let b = BoxAA::new(13.7, 21.1, 99.9, 187.3).unwrap();
        let f = frame(100, 200, 3, b);
        let text = frame_to_yolo(&f).unwrap();
        let anns = parse_yolo(&text, 100, 200, &ClassCatalog::endoscope()).unwrap();
        let back = anns[0].geometry.as_aa().unwrap();
        assert!((back.x_min - b.x_min).abs() < 1e-3);
        assert!((back.y_max - b.y_max).abs() < 1e-3);
        assert_eq!(anns[0].score, None);
    }

    #[test]
    fn score_column() {
        let anns = parse_yolo("1 0.5 0.5 0.2 0.2 0.75\n", 10, 10, &ClassCatalog::endoscope()).unwrap();
        assert_eq!(anns[0].score, Some(0.75));
    }

    #[test]
    fn rejects_bad_lines() {
        let cat = ClassCatalog::endoscope();
        assert!(matches!(parse_yolo("0 1.5 0.5 0.1 0.1", 10, 10, &cat), Err(Error::Record { record: 0, .. })));
        assert!(matches!(parse_yolo("\n0 0.5 0.5 0.1", 10, 10, &cat), Err(Error::Record { record: 1, .. })));
        assert!(parse_yolo("9 0.5 0.5 0.1 0.1", 10, 10, &cat).is_err());
        assert!(parse_yolo("x 0.5 0.5 0.1 0.1", 10, 10, &cat).is_err());
        assert!(parse_yolo("0 nan 0.5 0.1 0.1", 10, 10, &cat).is_err());
    }

    #[test]
    fn missing_dimensions_on_write() {
        let b = BoxAA::new(0.0, 0.0, 1.0, 1.0).unwrap();
        assert!(yolo_line(0, &b, 0, 10, None).is_err());
    }

    #[test]
    fn directory_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut f = frame(100, 200, 0, BoxAA::new(10.0, 20.0, 40.0, 60.0).unwrap());
        f.id = "img_7".into();
        let ds = Dataset::new(ClassCatalog::endoscope(), vec![f.clone(), Frame::new("empty", 5, 5)]).unwrap();
        let written = write_yolo_dir(&ds, dir.path()).unwrap();
        assert_eq!(written.len(), 2);
        assert_eq!(fs::read_to_string(&written[1]).unwrap(), "");
        let stubs = ds.frames.iter().map(|f| Frame { annotations: vec![], ..f.clone() }).collect();
        let back = read_yolo_dir(dir.path(), ClassCatalog::endoscope(), stubs).unwrap();
        let (a, b) = (ds.frames[0].annotations[0].geometry.as_aa().unwrap(), back.frames[0].annotations[0].geometry.as_aa().unwrap());
        assert!((a.x_min - b.x_min).abs() < 1e-6 && (a.y_max - b.y_max).abs() < 1e-6);
        assert_eq!(list_label_ids(dir.path()).unwrap(), ["empty", "img_7"]);
    }

    #[test]
    fn missing_label_file_names_path() {
        let dir = tempfile::tempdir().unwrap();
        let err = read_yolo_dir(dir.path(), ClassCatalog::endoscope(), vec![Frame::new("nope", 1, 1)]).unwrap_err();
        assert!(err.is_io());
        assert!(err.to_string().contains("nope.txt"));
    }
}
