use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Annotation, Geometry};

/// Outcome of matching one frame's detections of one class against its
/// ground truth at a single IoU threshold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    /// Detection scores, descending.
    pub scores: Vec<f64>,
    /// True-positive flag per detection, aligned with `scores`.
    pub tp: Vec<bool>,
    /// Index into the input detection slice, aligned with `scores`.
    pub det_index: Vec<usize>,
    /// Ground truths left unmatched.
    pub false_negatives: usize,
    pub iou_threshold: f64,
}

impl MatchResult {
    pub fn true_positives(&self) -> usize {
        self.tp.iter().filter(|&&t| t).count()
    }

    pub fn false_positives(&self) -> usize {
        self.tp.len() - self.true_positives()
    }
}

/// Detection order used everywhere: score descending, input order on ties.
pub fn confidence_order(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    order
}

pub(crate) fn detection_scores(dets: &[Annotation]) -> Result<Vec<f64>> {
    dets.iter()
        .enumerate()
        .map(|(i, d)| {
            d.score
                .ok_or_else(|| Error::Evaluation(format!("detection {i} has no score")))
        })
        .collect()
}

/// Greedy matching over a precomputed IoU matrix (`ious[d][g]`).
///
/// Detections are visited in `order`; each takes the unmatched ground
/// truth of highest IoU, provided it reaches `threshold`. Equal IoUs go to
/// the earlier ground truth.
pub(crate) fn greedy_match(ious: &[Vec<f64>], n_gt: usize, order: &[usize], threshold: f64) -> (Vec<bool>, usize) {
    let mut taken = vec![false; n_gt];
    let mut tp = Vec::with_capacity(order.len());
    for &d in order {
        let mut best: Option<(usize, f64)> = None;
        for (g, &iou) in ious[d].iter().enumerate() {
            if taken[g] || iou < threshold {
                continue;
            }
            if best.is_none_or(|(_, b)| iou > b) {
                best = Some((g, iou));
            }
        }
        match best {
            Some((g, _)) => {
                taken[g] = true;
                tp.push(true);
            }
            None => tp.push(false),
        }
    }
    let fn_count = taken.iter().filter(|&&t| !t).count();
    (tp, fn_count)
}

/// Matches detections against ground truth of one frame and class.
pub fn match_detections<F>(gts: &[Annotation], dets: &[Annotation], iou_fn: F, iou_threshold: f64) -> Result<MatchResult>
where
    F: Fn(&Geometry, &Geometry) -> f64,
{
    let scores = detection_scores(dets)?;
    let ious: Vec<Vec<f64>> = dets
        .iter()
        .map(|d| gts.iter().map(|g| iou_fn(&d.geometry, &g.geometry)).collect())
        .collect();
    let order = confidence_order(&scores);
    let (tp, false_negatives) = greedy_match(&ious, gts.len(), &order, iou_threshold);
    Ok(MatchResult {
        scores: order.iter().map(|&i| scores[i]).collect(),
        tp,
        det_index: order,
        false_negatives,
        iou_threshold,
    })
}
