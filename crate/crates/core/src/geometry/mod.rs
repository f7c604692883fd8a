//! IoU kernels for axis-aligned, oriented and 3D boxes, plus the letterbox
//! resize used to bring frames to the training resolution.

mod iou;
mod letterbox;
mod polygon;

pub use iou::{intersection_aa, intersection_rot, iou, iou_3d, iou_aa, iou_bev, iou_rot, rot_polygon};
pub use letterbox::{letterbox, LetterboxTransform, DEFAULT_TARGET};
pub use polygon::{ConvexPolygon, CLIP_EPS, MIN_AREA};
