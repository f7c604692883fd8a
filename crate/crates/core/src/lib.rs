//! Non-neural tooling for operating-room perception data: annotation format
//! conversion, box geometry, detection scoring, auto-anchors, point-cloud
//! preprocessing and action-tube graphs.

pub mod anchors;
pub mod dataset_ops;
pub mod error;
pub mod eval;
pub mod formats;
pub mod geometry;
pub mod model;
pub mod pointcloud;
pub mod tubes;

pub use error::{Error, Result};
pub use model::{Annotation, Box3D, BoxAA, BoxRot, ClassCatalog, Dataset, Frame, Geometry, GeometryKind};
