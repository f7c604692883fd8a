//! Readers and writers for the annotation and point-cloud formats the
//! toolkit consumes and produces.

pub mod bin;
pub mod coco;
pub mod kitti;
pub mod ply;
pub mod pcd;
pub mod rot;
pub mod yolo;

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ClassCatalog, Dataset, Frame};
use crate::pointcloud::PointCloud;

pub use coco::{export_coco, import_coco, parse_coco, CocoDocument, CocoImport};
pub use kitti::{parse_kitti, read_kitti_dir, write_kitti, write_kitti_dir};
pub use rot::{parse_rot, read_rot_dir, write_rot, write_rot_dir};
pub use yolo::{frame_to_yolo, parse_yolo, read_yolo_dir, read_yolo_dir_normalized, write_yolo_dir};

/// Schema tag for native dataset documents.
pub const DATASET_SCHEMA: &str = "ortk.dataset/v1";
pub const CONVERSION_REPORT_SCHEMA: &str = "ortk.conversion-report/v1";

/// Body encoding for formats that have both text and binary variants.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Encoding {
    #[default]
    Ascii,
    Binary,
}

impl FromStr for Encoding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ascii" => Ok(Encoding::Ascii),
            "binary" => Ok(Encoding::Binary),
            other => Err(Error::InvalidValue(format!("unknown encoding {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CloudFormat {
    Ply,
    Pcd,
    Bin,
}

impl CloudFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        let ext = path
            .extension()
            .map(|e| e.to_string_lossy().to_lowercase())
            .unwrap_or_default();
        ext.parse().map_err(|_| {
            Error::InvalidValue(format!("cannot infer point-cloud format from {}", path.display()))
        })
    }
}

impl FromStr for CloudFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ply" => Ok(CloudFormat::Ply),
            "pcd" => Ok(CloudFormat::Pcd),
            "bin" => Ok(CloudFormat::Bin),
            other => Err(Error::InvalidValue(format!("unknown point-cloud format {other:?}"))),
        }
    }
}

impl fmt::Display for CloudFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CloudFormat::Ply => "ply",
            CloudFormat::Pcd => "pcd",
            CloudFormat::Bin => "bin",
        })
    }
}

pub fn parse_cloud(bytes: &[u8], format: CloudFormat, source_id: impl Into<String>) -> Result<PointCloud> {
    let points = match format {
        CloudFormat::Ply => ply::parse_ply(bytes)?,
        CloudFormat::Pcd => pcd::parse_pcd(bytes)?,
        CloudFormat::Bin => bin::parse_bin(bytes)?,
    };
    let cloud = PointCloud::new(source_id, points);
    cloud.validate()?;
    Ok(cloud)
}

/// Serializes a cloud. `encoding` is ignored for the bin format.
pub fn encode_cloud(cloud: &PointCloud, format: CloudFormat, encoding: Encoding) -> Vec<u8> {
    match format {
        CloudFormat::Ply => ply::write_ply(cloud, encoding),
        CloudFormat::Pcd => pcd::write_pcd(cloud, encoding),
        CloudFormat::Bin => bin::write_bin(cloud),
    }
}

/// Reads a cloud, inferring the format from the extension unless given.
/// The source id is the file stem.
pub fn read_cloud(path: &Path, format: Option<CloudFormat>) -> Result<PointCloud> {
    let wrap = |e: Error| e.in_file(path);
    let format = match format {
        Some(f) => f,
        None => CloudFormat::from_path(path).map_err(wrap)?,
    };
    let bytes = fs::read(path).map_err(|e| wrap(e.into()))?;
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_cloud(&bytes, format, stem).map_err(wrap)
}

pub fn write_cloud(cloud: &PointCloud, path: &Path, format: Option<CloudFormat>, encoding: Encoding) -> Result<()> {
    let wrap = |e: Error| e.in_file(path);
    let format = match format {
        Some(f) => f,
        None => CloudFormat::from_path(path).map_err(wrap)?,
    };
    fs::write(path, encode_cloud(cloud, format, encoding)).map_err(|e| wrap(e.into()))
}

/// Native JSON form of a [`Dataset`], tagged with [`DATASET_SCHEMA`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DatasetDocument {
    pub schema: String,
    pub catalog: ClassCatalog,
    pub frames: Vec<Frame>,
}

impl From<&Dataset> for DatasetDocument {
    fn from(ds: &Dataset) -> Self {
        Self {
            schema: DATASET_SCHEMA.to_owned(),
            catalog: ds.catalog.clone(),
            frames: ds.frames.clone(),
        }
    }
}

pub fn dataset_to_json(ds: &Dataset) -> String {
    serde_json::to_string_pretty(&DatasetDocument::from(ds)).expect("dataset serializes")
}

/// Parses either a native dataset document or a COCO document.
pub fn parse_dataset_json(bytes: &[u8]) -> Result<Dataset> {
    let value: serde_json::Value =
        serde_json::from_slice(bytes).map_err(|e| Error::Malformed(e.to_string()))?;
    match value.get("schema").and_then(|s| s.as_str()) {
        Some(DATASET_SCHEMA) => {
            let doc: DatasetDocument =
                serde_json::from_value(value).map_err(|e| Error::Malformed(e.to_string()))?;
            Dataset::new(doc.catalog, doc.frames)
        }
        Some(other) => Err(Error::Malformed(format!("unsupported schema {other:?}"))),
        None if value.get("images").is_some() => {
            let doc: CocoDocument =
                serde_json::from_value(value).map_err(|e| Error::Malformed(e.to_string()))?;
            Ok(import_coco(&doc)?.dataset)
        }
        None => Err(Error::Malformed("neither a dataset document nor COCO JSON".into())),
    }
}

pub fn read_dataset_json(path: &Path) -> Result<Dataset> {
    let bytes = fs::read(path).map_err(|e| Error::from(e).in_file(path))?;
    parse_dataset_json(&bytes).map_err(|e| e.in_file(path))
}

/// Machine-readable summary of a conversion run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConversionReport {
    pub schema: String,
    pub conversion: String,
    pub frames: usize,
    pub annotations_per_class: BTreeMap<String, usize>,
    /// Source category id to output class id, when ids were remapped.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub id_remap: BTreeMap<String, u32>,
    pub files_written: Vec<PathBuf>,
}

impl ConversionReport {
    pub fn new(conversion: impl Into<String>, dataset: Option<&Dataset>) -> Self {
        let mut report = Self {
            schema: CONVERSION_REPORT_SCHEMA.to_owned(),
            conversion: conversion.into(),
            ..Self::default()
        };
        if let Some(ds) = dataset {
            report.frames = ds.frames.len();
            for entry in ds.catalog.iter() {
                report.annotations_per_class.insert(entry.name.to_owned(), 0);
            }
            for ann in ds.frames.iter().flat_map(|f| &f.annotations) {
                if let Ok(name) = ds.catalog.name(ann.class_id) {
                    *report.annotations_per_class.entry(name.to_owned()).or_default() += 1;
                }
            }
        }
        report
    }
}
