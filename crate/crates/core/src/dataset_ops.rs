//! Reproducible train/test splitting and per-source dataset statistics.
//!
//! Shuffles use `ChaCha8Rng::seed_from_u64(seed)` with the Fisher–Yates
//! shuffle from `rand` 0.8 (`SliceRandom::shuffle`). Per-source mode seeds
//! one generator and shuffles sources in sorted source-name order.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Dataset;

pub const STATS_SCHEMA: &str = "ortk.stats/v1";
pub const SPLIT_SCHEMA: &str = "ortk.split/v1";

/// Absorbs binary floating-point error in `ratio * n` (e.g. `0.57 * 100`).
const FLOOR_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_ratio: f64,
    pub seed: u64,
    /// Split each source separately instead of the pooled frame list.
    pub stratify_by_source: bool,
}

impl SplitSpec {
    pub fn new(train_ratio: f64, seed: u64) -> Result<Self> {
        if !(train_ratio > 0.0 && train_ratio < 1.0) {
            return Err(Error::InvalidValue(format!("train ratio {train_ratio} must be in (0, 1)")));
        }
        Ok(Self {
            train_ratio,
            seed,
            stratify_by_source: false,
        })
    }

    pub fn per_source(mut self, yes: bool) -> Self {
        self.stratify_by_source = yes;
        self
    }
}

/// `floor(ratio * n)`.
pub fn train_count(ratio: f64, n: usize) -> usize {
    ((ratio * n as f64) + FLOOR_EPS).floor() as usize
}

/// Frame indices of each side, both in original dataset order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

pub fn split_indices(dataset: &Dataset, spec: &SplitSpec) -> Result<SplitIndices> {
    SplitSpec::new(spec.train_ratio, spec.seed)?;
    let n = dataset.frames.len();
    if n < 2 {
        return Err(Error::InvalidValue(format!("splitting needs at least 2 frames, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let groups: Vec<Vec<usize>> = if spec.stratify_by_source {
        let mut by_source: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, f) in dataset.frames.iter().enumerate() {
            by_source.entry(f.source.as_str()).or_default().push(i);
        }
        by_source.into_values().collect()
    } else {
        vec![(0..n).collect()]
    };
    let mut train = Vec::new();
    let mut test = Vec::new();
    for mut group in groups {
        let k = train_count(spec.train_ratio, group.len());
        group.shuffle(&mut rng);
        train.extend_from_slice(&group[..k]);
        test.extend_from_slice(&group[k..]);
    }
    if train.is_empty() || test.is_empty() {
        return Err(Error::InvalidValue(format!(
            "ratio {} leaves one side of the split empty ({} train / {} test)",
            spec.train_ratio,
            train.len(),
            test.len()
        )));
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(SplitIndices { train, test })
}

pub fn split(dataset: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset)> {
    let idx = split_indices(dataset, spec)?;
    let take = |ids: &[usize]| Dataset {
        catalog: dataset.catalog.clone(),
        frames: ids.iter().map(|&i| dataset.frames[i].clone()).collect(),
    };
    Ok((take(&idx.train), take(&idx.test)))
}

/// Frame-id lists for each side of a split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub schema: String,
    pub spec: SplitSpec,
    pub train: Vec<String>,
    pub test: Vec<String>,
}

impl SplitManifest {
    pub fn new(spec: SplitSpec, train: &Dataset, test: &Dataset) -> Self {
        let ids = |d: &Dataset| d.frames.iter().map(|f| f.id.clone()).collect();
        Self {
            schema: SPLIT_SCHEMA.to_owned(),
            spec,
            train: ids(train),
            test: ids(test),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceStats {
    pub frames: usize,
    pub annotations: usize,
    /// Instance count per class id.
    pub per_class: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub schema: String,
    pub classes: Vec<String>,
    pub sources: BTreeMap<String, SourceStats>,
    pub total: SourceStats,
}

pub fn stats(dataset: &Dataset) -> DatasetStats {
    let n = dataset.catalog.len();
    let empty = || SourceStats {
        per_class: vec![0; n],
        ..SourceStats::default()
    };
    let mut sources: BTreeMap<String, SourceStats> = BTreeMap::new();
    let mut total = empty();
    for frame in &dataset.frames {
        let s = sources.entry(frame.source.clone()).or_insert_with(empty);
        s.frames += 1;
        total.frames += 1;
        for ann in &frame.annotations {
            if let Some(slot) = s.per_class.get_mut(ann.class_id as usize) {
                *slot += 1;
                total.per_class[ann.class_id as usize] += 1;
            }
            s.annotations += 1;
            total.annotations += 1;
        }
    }
    DatasetStats {
        schema: STATS_SCHEMA.to_owned(),
        classes: dataset.catalog.names().to_vec(),
        sources,
        total,
    }
}

impl DatasetStats {
    /// Text table: a frame-count section, then instances per class with one
    /// column per source and a total column.
    pub fn to_table(&self) -> String {
        let label = |s: &str| if s.is_empty() { "(none)".to_owned() } else { s.to_owned() };
        let names: Vec<String> = self.sources.keys().map(|s| label(s)).collect();
        let first = self
            .classes
            .iter()
            .map(String::len)
            .chain([5, 6])
            .max()
            .unwrap_or(6);
        let col = names.iter().map(String::len).chain([6]).max().unwrap_or(6);
        let mut out = String::new();
        let header = |out: &mut String, title: &str| {
            let _ = write!(out, "{title:<first$}");
            for n in &names {
                let _ = write!(out, "  {n:>col$}");
            }
            let _ = writeln!(out, "  {:>col$}", "total");
        };
        header(&mut out, "source");
        let _ = write!(out, "{:<first$}", "frames");
        for s in self.sources.values() {
            let _ = write!(out, "  {:>col$}", s.frames);
        }
        let _ = writeln!(out, "  {:>col$}", self.total.frames);
        out.push('\n');
        header(&mut out, "class");
        for (c, name) in self.classes.iter().enumerate() {
            let _ = write!(out, "{name:<first$}");
            for s in self.sources.values() {
                let _ = write!(out, "  {:>col$}", s.per_class[c]);
            }
            let _ = writeln!(out, "  {:>col$}", self.total.per_class[c]);
        }
        let _ = write!(out, "{:<first$}", "total");
        for s in self.sources.values() {
            let _ = write!(out, "  {:>col$}", s.annotations);
        }
        let _ = writeln!(out, "  {:>col$}", self.total.annotations);
        out
    }
}

/// Checks that two index lists partition `0..n`.
pub fn is_partition(split: &SplitIndices, n: usize) -> bool {
    let train: HashSet<_> = split.train.iter().collect();
    split.train.len() + split.test.len() == n
        && train.len() == split.train.len()
        && split.test.iter().all(|i| !train.contains(i) && *i < n)
        && split.train.iter().all(|&i| i < n)
}
