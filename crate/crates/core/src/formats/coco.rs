//! COCO-style detection JSON.
//!
//! Only the parts needed for box annotations are read. Segmentation and
//! any other unknown fields are ignored.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Annotation, BoxAA, ClassCatalog, Dataset, Frame, Geometry};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CocoImage {
    pub id: i64,
    pub file_name: String,
    pub width: u32,
    pub height: u32,
    /// Acquisition tag such as a pilot or session name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CocoAnnotation {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<i64>,
    pub image_id: i64,
    pub category_id: i64,
    /// `[x_topleft, y_topleft, width, height]` in pixels.
    pub bbox: [f64; 4],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CocoCategory {
    pub id: i64,
    pub name: String,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct CocoDocument {
    pub images: Vec<CocoImage>,
    #[serde(default)]
    pub annotations: Vec<CocoAnnotation>,
    pub categories: Vec<CocoCategory>,
}

/// A parsed COCO document together with the category-id remapping that
/// was applied to make class ids contiguous.
#[derive(Clone, Debug)]
pub struct CocoImport {
    pub dataset: Dataset,
    /// Original category id to contiguous class id.
    pub category_map: BTreeMap<i64, u32>,
}

/// Frame id for an image: the file name without directories or extension.
pub fn frame_id_for(file_name: &str) -> String {
    let path = Path::new(file_name);
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| file_name.to_owned())
}

pub fn parse_coco(bytes: &[u8]) -> Result<CocoImport> {
    let doc: CocoDocument =
        serde_json::from_slice(bytes).map_err(|e| Error::Malformed(e.to_string()))?;
    import_coco(&doc)
}

pub fn import_coco(doc: &CocoDocument) -> Result<CocoImport> {
    let mut categories: Vec<&CocoCategory> = doc.categories.iter().collect();
    categories.sort_by_key(|c| c.id);
    let mut category_map = BTreeMap::new();
    for (new_id, cat) in categories.iter().enumerate() {
        if category_map.insert(cat.id, new_id as u32).is_some() {
            return Err(Error::Malformed(format!("duplicate category id {}", cat.id)));
        }
    }
    let catalog = ClassCatalog::new(categories.iter().map(|c| c.name.clone()))?;

    let mut frames = Vec::with_capacity(doc.images.len());
    let mut frame_index = HashMap::new();
    let mut seen_ids = HashSet::new();
    for (i, img) in doc.images.iter().enumerate() {
        if img.width == 0 || img.height == 0 {
            return Err(Error::record(i, format!("image {} has zero size", img.id)));
        }
        let frame = Frame {
            id: frame_id_for(&img.file_name),
            width: img.width,
            height: img.height,
            source: img.source.clone().unwrap_or_default(),
            annotations: Vec::new(),
        };
        if !seen_ids.insert(frame.id.clone()) {
            return Err(Error::record(i, format!("duplicate frame id {:?}", frame.id)));
        }
        if frame_index.insert(img.id, frames.len()).is_some() {
            return Err(Error::record(i, format!("duplicate image id {}", img.id)));
        }
        frames.push(frame);
    }

    for (i, ann) in doc.annotations.iter().enumerate() {
        let &fi = frame_index.get(&ann.image_id).ok_or(Error::DanglingReference {
            record: i,
            kind: "image",
            id: ann.image_id,
        })?;
        let &class_id = category_map.get(&ann.category_id).ok_or(Error::DanglingReference {
            record: i,
            kind: "category",
            id: ann.category_id,
        })?;
        let [x, y, w, h] = ann.bbox;
        if w < 0.0 || h < 0.0 {
            return Err(Error::record(i, format!("negative bbox size {w}x{h}")));
        }
        let frame = &mut frames[fi];
        let bbox = BoxAA::from_xywh(x, y, w, h)
            .map_err(|e| Error::record(i, e.to_string()))?
            .clamp(f64::from(frame.width), f64::from(frame.height));
        if let Some(s) = ann.score {
            if !(0.0..=1.0).contains(&s) {
                return Err(Error::record(i, format!("score {s} outside [0, 1]")));
            }
        }
        frame.annotations.push(Annotation {
            class_id,
            geometry: Geometry::Aa(bbox),
            score: ann.score,
        });
    }

    Ok(CocoImport {
        dataset: Dataset { catalog, frames },
        category_map,
    })
}

/// Exports an axis-aligned dataset as a COCO document. Image ids and
/// category ids are assigned sequentially from 1 and 0 respectively;
/// file names are `<frame id>.jpg`.
pub fn export_coco(dataset: &Dataset) -> Result<CocoDocument> {
    let categories = dataset
        .catalog
        .iter()
        .map(|e| CocoCategory {
            id: i64::from(e.id),
            name: e.name.to_owned(),
        })
        .collect();
    let mut images = Vec::with_capacity(dataset.frames.len());
    let mut annotations = Vec::new();
    for (i, frame) in dataset.frames.iter().enumerate() {
        let image_id = i as i64 + 1;
        images.push(CocoImage {
            id: image_id,
            file_name: format!("{}.jpg", frame.id),
            width: frame.width,
            height: frame.height,
            source: (!frame.source.is_empty()).then(|| frame.source.clone()),
        });
        for ann in &frame.annotations {
            let b = ann.geometry.as_aa().ok_or_else(|| {
                Error::record(i, format!("frame {:?}: COCO export needs axis-aligned boxes", frame.id))
            })?;
            annotations.push(CocoAnnotation {
                id: Some(annotations.len() as i64 + 1),
                image_id,
                category_id: i64::from(ann.class_id),
                bbox: [b.x_min, b.y_min, b.width(), b.height()],
                score: ann.score,
            });
        }
    }
    Ok(CocoDocument {
        images,
        annotations,
        categories,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SINGLE: &str = r#"{
        "images": [{"id": 1, "file_name": "frames/f001.jpg", "width": 100, "height": 200}],
        "annotations": [{"id": 1, "image_id": 1, "category_id": 4, "bbox": [10, 20, 30, 40],
                         "segmentation": [[10, 20, 40, 20, 40, 60]], "area": 1200, "iscrowd": 0}],
        "categories": [{"id": 4, "name": "clipper"}]
    }"#;

    #[test]
    fn single_box() {
        let import = parse_coco(SINGLE.as_bytes()).unwrap();
        let frame = &import.dataset.frames[0];
        assert_eq!(frame.id, "f001");
        assert_eq!(
            frame.annotations[0].geometry,
            Geometry::Aa(BoxAA::new(10.0, 20.0, 40.0, 60.0).unwrap())
        );
        assert_eq!(frame.annotations[0].class_id, 0);
        assert_eq!(import.category_map[&4], 0);
        assert_eq!(import.dataset.catalog.name(0).unwrap(), "clipper");
    }

    #[test]
    fn sparse_category_ids_are_remapped_in_id_order() {
        let doc = r#"{"images": [], "annotations": [],
            "categories": [{"id": 9, "name": "b"}, {"id": 2, "name": "a"}, {"id": 5, "name": "c"}]}"#;
        let import = parse_coco(doc.as_bytes()).unwrap();
        assert_eq!(import.dataset.catalog.names(), ["a", "c", "b"]);
        assert_eq!(import.category_map.into_iter().collect::<Vec<_>>(), [(2, 0), (5, 1), (9, 2)]);
    }

    #[test]
    fn empty_annotations() {
        let doc = r#"{"images": [{"id": 1, "file_name": "a.png", "width": 5, "height": 5}],
            "annotations": [], "categories": [{"id": 0, "name": "x"}]}"#;
        let import = parse_coco(doc.as_bytes()).unwrap();
        assert_eq!(import.dataset.frames.len(), 1);
        assert!(import.dataset.frames[0].annotations.is_empty());
    }

    #[test]
    fn dangling_image() {
        let doc = SINGLE.replace("\"image_id\": 1", "\"image_id\": 99");
        match parse_coco(doc.as_bytes()) {
            Err(Error::DanglingReference { record: 0, kind: "image", id: 99 }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn dangling_category_and_negative_size() {
        let doc = SINGLE.replace("\"category_id\": 4", "\"category_id\": 3");
        assert!(matches!(parse_coco(doc.as_bytes()), Err(Error::DanglingReference { kind: "category", .. })));
        let doc = SINGLE.replace("[10, 20, 30, 40]", "[10, 20, -30, 40]");
        assert!(matches!(parse_coco(doc.as_bytes()), Err(Error::Record { record: 0, .. })));
    }

    #[test]
    fn malformed_never_panics() {
        for junk in ["", "{", "[]", r#"{"images": 3}"#, "\u{0}\u{1}"] {
            assert!(parse_coco(junk.as_bytes()).is_err());
        }
    }

    #[test]
    fn export_then_import() {
        let import = parse_coco(SINGLE.as_bytes()).unwrap();
        let doc = export_coco(&import.dataset).unwrap();
        let again = import_coco(&doc).unwrap();
        assert_eq!(again.dataset, import.dataset);
    }
}
