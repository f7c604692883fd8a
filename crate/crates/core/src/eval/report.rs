use std::collections::HashMap;
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{normalize_class_name, Annotation, Dataset, Geometry};

use super::matching::{confidence_order, detection_scores, greedy_match};
use super::metrics::{average_precision, f1, Interpolation, PRCurve};

pub const EVAL_REPORT_SCHEMA: &str = "ortk.eval-report/v1";

/// IoU thresholds 0.50, 0.55, ..., 0.95.
pub fn coco_thresholds() -> Vec<f64> {
    (0..10).map(|i| (50 + 5 * i) as f64 / 100.0).collect()
}

/// Mean of per-class average precisions; 0 for an empty slice.
pub fn mean_average_precision(aps: &[f64]) -> f64 {
    if aps.is_empty() {
        0.0
    } else {
        aps.iter().sum::<f64>() / aps.len() as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    /// Threshold for the per-class rows, `map_50` and F1.
    pub iou_threshold: f64,
    /// Thresholds averaged into `map_50_95`.
    pub sweep: Vec<f64>,
    pub interpolation: Interpolation,
    /// Count classes without ground truth as AP 0 in the means.
    pub strict: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            iou_threshold: 0.5,
            sweep: coco_thresholds(),
            interpolation: Interpolation::Coco101,
            strict: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassRow {
    pub class_id: u32,
    pub name: String,
    pub gts: usize,
    pub dets: usize,
    pub true_positives: usize,
    pub recall: f64,
    pub ap: f64,
    pub ap_50_95: f64,
    /// True when the class has no ground truth; such rows are left out of
    /// the means unless evaluation is strict.
    pub no_gt: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema: String,
    pub iou_threshold: f64,
    pub interpolation: Interpolation,
    pub rows: Vec<ClassRow>,
    /// mAP at `iou_threshold` (0.5 unless overridden).
    pub map_50: f64,
    pub map_50_95: f64,
    /// Best micro-averaged F1 over confidence cuts.
    pub f1: f64,
    pub f1_confidence: f64,
    pub f1_precision: f64,
    pub f1_recall: f64,
}

/// Per-class ranked detections across all frames, with one TP flag vector
/// per threshold.
struct ClassRanking {
    gts: usize,
    scores: Vec<f64>,
    flags: Vec<Vec<bool>>,
}

fn check_compatible(gt: &Dataset, det: &Dataset) -> Result<()> {
    gt.validate().map_err(|e| Error::Evaluation(format!("ground truth: {e}")))?;
    det.validate().map_err(|e| Error::Evaluation(format!("detections: {e}")))?;
    let same = gt.catalog.len() == det.catalog.len()
        && gt
            .catalog
            .names()
            .iter()
            .zip(det.catalog.names())
            .all(|(a, b)| normalize_class_name(a) == normalize_class_name(b));
    if !same {
        return Err(Error::Evaluation("ground truth and detections use different class catalogs".into()));
    }
    for frame in &det.frames {
        if gt.frame(&frame.id).is_none() {
            return Err(Error::Evaluation(format!("detection frame {:?} has no ground truth", frame.id)));
        }
        if let Some(i) = frame.annotations.iter().position(|a| a.score.is_none()) {
            return Err(Error::Evaluation(format!("frame {:?}: detection {i} has no score", frame.id)));
        }
    }
    Ok(())
}

/// Scores `det` against `gt` with the given IoU kernel.
///
/// Frames are processed in frame-id order and ties in confidence are broken
/// by that order, so the result does not depend on how frames are listed.
pub fn evaluate<F>(gt: &Dataset, det: &Dataset, iou_fn: F, options: &EvalOptions) -> Result<EvalReport>
where
    F: Fn(&Geometry, &Geometry) -> f64,
{
    check_compatible(gt, det)?;
    for &t in std::iter::once(&options.iou_threshold).chain(&options.sweep) {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::InvalidValue(format!("IoU threshold {t} outside [0, 1]")));
        }
    }
    let mut thresholds = vec![options.iou_threshold];
    thresholds.extend(options.sweep.iter().copied());

    let n_classes = gt.catalog.len();
    let det_by_id: HashMap<&str, &[Annotation]> =
        det.frames.iter().map(|f| (f.id.as_str(), f.annotations.as_slice())).collect();
    let mut frames: Vec<_> = gt.frames.iter().collect();
    frames.sort_by(|a, b| a.id.cmp(&b.id));

    let mut rankings: Vec<ClassRanking> = (0..n_classes)
        .map(|_| ClassRanking {
            gts: 0,
            scores: Vec::new(),
            flags: vec![Vec::new(); thresholds.len()],
        })
        .collect();

    for frame in frames {
        let dets = det_by_id.get(frame.id.as_str()).copied().unwrap_or(&[]);
        for (class, ranking) in rankings.iter_mut().enumerate() {
            let class = class as u32;
            let g: Vec<&Annotation> = frame.annotations.iter().filter(|a| a.class_id == class).collect();
            let d: Vec<Annotation> = dets.iter().filter(|a| a.class_id == class).copied().collect();
            ranking.gts += g.len();
            if d.is_empty() {
                continue;
            }
            let scores = detection_scores(&d)?;
            let ious: Vec<Vec<f64>> = d
                .iter()
                .map(|dd| g.iter().map(|gg| iou_fn(&dd.geometry, &gg.geometry)).collect())
                .collect();
            let order = confidence_order(&scores);
            ranking.scores.extend(order.iter().map(|&i| scores[i]));
            for (t, &thr) in thresholds.iter().enumerate() {
                let (tp, _) = greedy_match(&ious, g.len(), &order, thr);
                ranking.flags[t].extend(tp);
            }
        }
    }

    let mut rows = Vec::with_capacity(n_classes);
    let mut pooled: Vec<(f64, bool)> = Vec::new();
    let mut per_threshold_aps: Vec<Vec<f64>> = vec![Vec::new(); thresholds.len()];
    for (class, ranking) in rankings.iter().enumerate() {
        // Stable sort keeps frame order for equal scores.
        let order = confidence_order(&ranking.scores);
        let ranked_flags: Vec<Vec<bool>> = ranking
            .flags
            .iter()
            .map(|f| order.iter().map(|&i| f[i]).collect())
            .collect();
        let aps: Vec<f64> = ranked_flags
            .iter()
            .map(|f| average_precision(&PRCurve::from_flags(f, ranking.gts), options.interpolation))
            .collect();
        let no_gt = ranking.gts == 0;
        if !no_gt || options.strict {
            for (t, ap) in aps.iter().enumerate() {
                per_threshold_aps[t].push(*ap);
            }
        }
        let tp = ranked_flags[0].iter().filter(|&&b| b).count();
        pooled.extend(order.iter().map(|&i| ranking.scores[i]).zip(ranked_flags[0].iter().copied()));
        rows.push(ClassRow {
            class_id: class as u32,
            name: gt.catalog.name(class as u32)?.to_owned(),
            gts: ranking.gts,
            dets: ranking.scores.len(),
            true_positives: tp,
            recall: if no_gt { 0.0 } else { tp as f64 / ranking.gts as f64 },
            ap: aps[0],
            ap_50_95: mean_average_precision(&aps[1..]),
            no_gt,
        });
    }

    let map_50 = mean_average_precision(&per_threshold_aps[0]);
    let sweep_maps: Vec<f64> = per_threshold_aps[1..].iter().map(|aps| mean_average_precision(aps)).collect();
    let map_50_95 = mean_average_precision(&sweep_maps);
    let total_gt: usize = rankings.iter().map(|r| r.gts).sum();
    let best = best_f1(&mut pooled, total_gt);

    Ok(EvalReport {
        schema: EVAL_REPORT_SCHEMA.to_owned(),
        iou_threshold: options.iou_threshold,
        interpolation: options.interpolation,
        rows,
        map_50,
        map_50_95,
        f1: best.f1,
        f1_confidence: best.confidence,
        f1_precision: best.precision,
        f1_recall: best.recall,
    })
}

struct BestF1 {
    f1: f64,
    confidence: f64,
    precision: f64,
    recall: f64,
}

/// Scans confidence cuts between distinct scores and keeps the cut with the
/// highest F1. Detections sharing a score are always kept together.
fn best_f1(pooled: &mut [(f64, bool)], total_gt: usize) -> BestF1 {
    pooled.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut best = BestF1 {
        f1: 0.0,
        confidence: 1.0,
        precision: 0.0,
        recall: 0.0,
    };
    let mut tp = 0usize;
    for i in 0..pooled.len() {
        tp += usize::from(pooled[i].1);
        let last_of_score = i + 1 == pooled.len() || pooled[i + 1].0 != pooled[i].0;
        if !last_of_score {
            continue;
        }
        let precision = tp as f64 / (i + 1) as f64;
        let recall = if total_gt == 0 { 0.0 } else { tp as f64 / total_gt as f64 };
        let score = f1(precision, recall);
        if score > best.f1 {
            best = BestF1 {
                f1: score,
                confidence: pooled[i].0,
                precision,
                recall,
            };
        }
    }
    best
}

impl EvalReport {
    /// Aligned text table with one row per class and a final mAP row.
    pub fn to_table(&self, per_class: bool) -> String {
        let width = self
            .rows
            .iter()
            .map(|r| r.name.len())
            .chain(std::iter::once("Classes".len()))
            .max()
            .unwrap_or(7);
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<width$}  {:>6}  {:>6}  {:>7}  {:>17}",
            "Classes", "Gts", "Dets", "Recall", "Average Precision"
        );
        if per_class {
            for r in &self.rows {
                let ap = if r.no_gt { "no gt".to_owned() } else { format!("{:.3}", r.ap) };
                let _ = writeln!(
                    out,
                    "{:<width$}  {:>6}  {:>6}  {:>7.3}  {:>17}",
                    r.name, r.gts, r.dets, r.recall, ap
                );
            }
        }
        let _ = writeln!(out, "{:<width$}  {:>6}  {:>6}  {:>7}  {:>17.3}", "mAP", "", "", "", self.map_50);
        let _ = writeln!(
            out,
            "{:<width$}  {:>6}  {:>6}  {:>7}  {:>17.3}",
            "mAP@0.5:0.95", "", "", "", self.map_50_95
        );
        let _ = writeln!(
            out,
            "F1 {:.3} at confidence {:.3} (P {:.3}, R {:.3}); IoU {}, {}",
            self.f1, self.f1_confidence, self.f1_precision, self.f1_recall, self.iou_threshold, self.interpolation
        );
        out
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_table(true))
    }
}
