//! Optional TOML defaults. Every key is optional; unknown keys are rejected
//! so typos do not silently fall back to defaults.
//!
//! ```toml
//! seed = 1
//! catalog = "classes.txt"   # relative to this file
//!
//! [split]
//! ratio = 0.7
//! per_source = false
//!
//! [eval]
//! geometry = "aa"           # aa | rot | 3d
//! iou = 0.5
//! interp = "coco101"        # coco101 | allpoints
//! strict = false
//!
//! [anchors]
//! per_level = 3
//! levels = 3
//! img_size = 640
//! ratio_threshold = 4.0
//!
//! [pcl]
//! voxel = 0.05
//! range = "-3,3,-3,3,0,3"
//! max_points = 32
//!
//! [tubes]
//! iou = 0.3
//! max_gap = 2
//! association = "greedy"    # greedy | hungarian
//!
//! [graphs]
//! topology = ["fully_connected", "scene", "scene_same_label"]
//! window = [12, 18, 24, 30]
//! stride = 12
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::failure::Failure;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub catalog: Option<PathBuf>,
    pub split: SplitSection,
    pub eval: EvalSection,
    pub anchors: AnchorsSection,
    pub pcl: PclSection,
    pub tubes: TubesSection,
    pub graphs: GraphsSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitSection {
    pub ratio: Option<f64>,
    pub per_source: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalSection {
    pub geometry: Option<String>,
    pub iou: Option<f64>,
    pub interp: Option<String>,
    pub strict: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnchorsSection {
    pub per_level: Option<usize>,
    pub levels: Option<usize>,
    pub img_size: Option<u32>,
    pub ratio_threshold: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PclSection {
    pub voxel: Option<f64>,
    pub range: Option<String>,
    pub max_points: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TubesSection {
    pub iou: Option<f64>,
    pub max_gap: Option<usize>,
    pub association: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GraphsSection {
    pub topology: Option<Vec<String>>,
    pub window: Option<Vec<usize>>,
    pub stride: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = fs::read_to_string(path).map_err(|e| Failure::io(format!("{}: {e}", path.display())))?;
        let mut cfg: FileConfig =
            toml::from_str(&text).map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))?;
        if let Some(catalog) = cfg.catalog.take() {
            let base = path.parent().unwrap_or(Path::new(""));
            cfg.catalog = Some(base.join(catalog));
        }
        Ok(cfg)
    }
}
