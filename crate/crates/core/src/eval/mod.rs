//! Detection scoring: greedy matching, precision/recall/F1, interpolated
//! average precision and the per-class report, generic over the IoU kernel
//! so the same code scores axis-aligned, rotated and 3D boxes.

mod matching;
mod metrics;
mod report;

pub use matching::{confidence_order, match_detections, MatchResult};
pub use metrics::{average_precision, f1, prf1, Interpolation, PRCurve};
pub use report::{coco_thresholds, evaluate, mean_average_precision, ClassRow, EvalOptions, EvalReport, EVAL_REPORT_SCHEMA};
