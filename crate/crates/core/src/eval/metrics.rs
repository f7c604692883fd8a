use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Precision, recall and F1 from raw counts.
///
/// Precision is `tp / (tp + fp)` and recall `tp / (tp + fn)`. Note that
/// some write-ups print these two with FP and FN swapped; the standard
/// orientation is used here. Any `0 / 0` evaluates to 0.
pub fn prf1(tp: i64, fp: i64, fn_: i64) -> Result<(f64, f64, f64)> {
    if tp < 0 || fp < 0 || fn_ < 0 {
        return Err(Error::InvalidValue(format!("negative counts tp={tp} fp={fp} fn={fn_}")));
    }
    let div = |n: i64, d: i64| if d == 0 { 0.0 } else { n as f64 / d as f64 };
    let precision = div(tp, tp + fp);
    let recall = div(tp, tp + fn_);
    Ok((precision, recall, f1(precision, recall)))
}

pub fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Cumulative precision/recall after each confidence-ranked detection.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PRCurve {
    pub recall: Vec<f64>,
    pub precision: Vec<f64>,
    pub n_gt: usize,
}

impl PRCurve {
    /// `flags` are TP markers in descending-confidence order.
    pub fn from_flags(flags: &[bool], n_gt: usize) -> Self {
        let mut recall = Vec::with_capacity(flags.len());
        let mut precision = Vec::with_capacity(flags.len());
        let mut tp = 0usize;
        for (i, &hit) in flags.iter().enumerate() {
            tp += usize::from(hit);
            recall.push(if n_gt == 0 { 0.0 } else { tp as f64 / n_gt as f64 });
            precision.push(tp as f64 / (i + 1) as f64);
        }
        Self {
            recall,
            precision,
            n_gt,
        }
    }

    pub fn len(&self) -> usize {
        self.recall.len()
    }

    pub fn is_empty(&self) -> bool {
        self.recall.is_empty()
    }

    /// Final recall reached by all detections.
    pub fn max_recall(&self) -> f64 {
        self.recall.last().copied().unwrap_or(0.0)
    }
}

/// Precision-recall integration rule.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interpolation {
    /// Envelope sampled at recall 0.00, 0.01, ..., 1.00 (COCO style).
    #[default]
    Coco101,
    /// Area under the full precision envelope (VOC 2010+ style).
    AllPoints,
}

impl FromStr for Interpolation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "coco101" => Ok(Interpolation::Coco101),
            "allpoints" => Ok(Interpolation::AllPoints),
            other => Err(Error::InvalidValue(format!("unknown interpolation {other:?}"))),
        }
    }
}

impl fmt::Display for Interpolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Interpolation::Coco101 => "coco101",
            Interpolation::AllPoints => "allpoints",
        })
    }
}

/// Running maximum from the right: `env[i] = max(precision[i..])`.
fn precision_envelope(precision: &[f64]) -> Vec<f64> {
    let mut env = precision.to_vec();
    for i in (0..env.len().saturating_sub(1)).rev() {
        env[i] = env[i].max(env[i + 1]);
    }
    env
}

pub fn average_precision(curve: &PRCurve, interp: Interpolation) -> f64 {
    if curve.n_gt == 0 || curve.is_empty() {
        return 0.0;
    }
    let env = precision_envelope(&curve.precision);
    match interp {
        Interpolation::Coco101 => {
            let mut sum = 0.0;
            for step in 0..=100 {
                let r = f64::from(step) / 100.0;
                let i = curve.recall.partition_point(|&x| x < r);
                if i < env.len() {
                    sum += env[i];
                }
            }
            sum / 101.0
        }
        Interpolation::AllPoints => {
            let mut ap = 0.0;
            let mut prev_recall = 0.0;
            for (r, p) in curve.recall.iter().zip(&env) {
                if *r > prev_recall {
                    ap += (r - prev_recall) * p;
                    prev_recall = *r;
                }
            }
            ap
        }
    }
}
