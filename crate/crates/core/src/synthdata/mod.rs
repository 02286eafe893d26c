//! Synthetic fine-grained datasets with base/novel splits and web-style label noise.
//!
//! Categories are grouped into superclusters: prototypes inside one supercluster
//! sit close together, which is what makes the task fine-grained.

mod generate;
mod io;
mod noise;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

pub use generate::{generate_dataset, DatasetSpec, PerCategory};
pub use io::{load_dataset, parse_dataset, save_dataset, write_dataset};
pub use noise::{inject_web_noise, NoiseSpec};

use crate::error::{Error, Result};
use crate::numcore::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Split {
    BaseTrain,
    BaseTest,
    NovelTrain,
    NovelTest,
}

impl Split {
    pub const ALL: [Split; 4] = [Split::BaseTrain, Split::BaseTest, Split::NovelTrain, Split::NovelTest];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::BaseTrain => "base_train",
            Split::BaseTest => "base_test",
            Split::NovelTrain => "novel_train",
            Split::NovelTest => "novel_test",
        }
    }

    pub fn is_base(self) -> bool {
        matches!(self, Split::BaseTrain | Split::BaseTest)
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Split::ALL
            .into_iter()
            .find(|sp| sp.as_str() == s)
            .ok_or_else(|| format!("unknown split {s:?}"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NoiseKind {
    None,
    Flip,
    Outlier,
}

impl NoiseKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NoiseKind::None => "none",
            NoiseKind::Flip => "flip",
            NoiseKind::Outlier => "outlier",
        }
    }
}

impl FromStr for NoiseKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "none" => Ok(NoiseKind::None),
            "flip" => Ok(NoiseKind::Flip),
            "outlier" => Ok(NoiseKind::Outlier),
            _ => Err(format!("unknown noise kind {s:?}")),
        }
    }
}

/// One image: a feature vector plus its (possibly noisy) label.
///
/// `true_label` and `noise_kind` are ground truth for diagnostics only. For an
/// outlier the content belongs to no category, so `true_label` keeps the label
/// and `noise_kind` carries the information.
#[derive(Clone, Debug, PartialEq)]
pub struct Record {
    pub feature: Vec<f64>,
    pub label: usize,
    pub true_label: usize,
    pub split: Split,
    pub noise_kind: NoiseKind,
}

impl Record {
    pub fn is_noisy(&self) -> bool {
        self.label != self.true_label || self.noise_kind == NoiseKind::Outlier
    }
}

/// Generator geometry retained for noise injection. Not persisted to disk.
#[derive(Clone, Debug, PartialEq)]
pub struct Geometry {
    /// Prototype per category id.
    pub prototypes: Vec<Vec<f64>>,
    pub intra_category_std: f64,
    pub inter_category_std: f64,
}

impl Geometry {
    /// Per-coordinate `(low, high)` bounds of all prototypes, inflated by 3·inter std.
    pub fn outlier_box(&self) -> Vec<(f64, f64)> {
        let dim = self.prototypes.first().map_or(0, Vec::len);
        let pad = 3.0 * self.inter_category_std;
        (0..dim)
            .map(|d| {
                let (lo, hi) = self
                    .prototypes
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p[d]), hi.max(p[d])));
                (lo - pad, hi + pad)
            })
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct Dataset {
    dim: usize,
    records: Vec<Record>,
    geometry: Option<Geometry>,
}

/// Equality covers the persisted content (dimension and records).
impl PartialEq for Dataset {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.records == other.records
    }
}

impl Dataset {
    pub fn new(dim: usize, records: Vec<Record>) -> Result<Self> {
        for (i, r) in records.iter().enumerate() {
            if r.feature.len() != dim {
                return Err(Error::shape(
                    "Dataset::new",
                    format!("feature dim {dim}"),
                    format!("{} in record {i}", r.feature.len()),
                ));
            }
            if r.split != Split::NovelTrain && r.is_noisy() {
                return Err(Error::Config(format!("record {i} in {} is marked noisy", r.split)));
            }
        }
        Ok(Dataset {
            dim,
            records,
            geometry: None,
        })
    }

    pub(crate) fn with_geometry(mut self, geometry: Geometry) -> Self {
        self.geometry = Some(geometry);
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn geometry(&self) -> Option<&Geometry> {
        self.geometry.as_ref()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Sorted distinct labels appearing in `split`.
    pub fn categories(&self, split: Split) -> Vec<usize> {
        let mut c: Vec<usize> = self.records.iter().filter(|r| r.split == split).map(|r| r.label).collect();
        c.sort_unstable();
        c.dedup();
        c
    }

    /// Features and labels of one split; the only view training code receives.
    pub fn view(&self, split: Split) -> LabeledView {
        let recs: Vec<&Record> = self.records.iter().filter(|r| r.split == split).collect();
        let rows: Vec<&[f64]> = recs.iter().map(|r| r.feature.as_slice()).collect();
        let features = if rows.is_empty() {
            Matrix::zeros(0, self.dim)
        } else {
            Matrix::from_rows(&rows).expect("dataset rows share dim")
        };
        LabeledView {
            features,
            labels: recs.iter().map(|r| r.label).collect(),
        }
    }

    /// Ground truth aligned with `view(split)` rows. Diagnostics and oracles only.
    pub fn ground_truth(&self, split: Split) -> Vec<GroundTruth> {
        self.records
            .iter()
            .filter(|r| r.split == split)
            .map(|r| GroundTruth {
                true_label: r.true_label,
                noise_kind: r.noise_kind,
            })
            .collect()
    }

    /// Copy keeping only base categories in `keep` and at most `per_category`
    /// base-train images per kept category (first ones in record order).
    pub fn restrict_base(&self, keep: &[usize], per_category: Option<usize>) -> Dataset {
        let mut taken: BTreeMap<usize, usize> = BTreeMap::new();
        let records = self
            .records
            .iter()
            .filter(|r| {
                if !r.split.is_base() {
                    return true;
                }
                if !keep.contains(&r.label) {
                    return false;
                }
                if r.split == Split::BaseTrain {
                    if let Some(limit) = per_category {
                        let n = taken.entry(r.label).or_default();
                        *n += 1;
                        return *n <= limit;
                    }
                }
                true
            })
            .cloned()
            .collect();
        Dataset {
            dim: self.dim,
            records,
            geometry: self.geometry.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GroundTruth {
    pub true_label: usize,
    pub noise_kind: NoiseKind,
}

impl GroundTruth {
    pub fn is_noisy(&self, label: usize) -> bool {
        label != self.true_label || self.noise_kind == NoiseKind::Outlier
    }

    /// Identity of the content: `None` for outliers, which match no category.
    pub fn content_category(&self) -> Option<usize> {
        match self.noise_kind {
            NoiseKind::Outlier => None,
            _ => Some(self.true_label),
        }
    }
}

/// Feature matrix with category labels. Exposes nothing about noise.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledView {
    features: Matrix,
    labels: Vec<usize>,
}

impl LabeledView {
    pub fn new(features: Matrix, labels: Vec<usize>) -> Result<Self> {
        if features.rows() != labels.len() {
            return Err(Error::shape("LabeledView::new", features.rows(), labels.len()));
        }
        Ok(LabeledView { features, labels })
    }

    pub fn empty(dim: usize) -> Self {
        LabeledView {
            features: Matrix::zeros(0, dim),
            labels: Vec::new(),
        }
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn categories(&self) -> Vec<usize> {
        let mut c = self.labels.clone();
        c.sort_unstable();
        c.dedup();
        c
    }

    /// Row indices grouped by label, in ascending label order.
    pub fn indices_by_category(&self) -> BTreeMap<usize, Vec<usize>> {
        let mut map: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, &l) in self.labels.iter().enumerate() {
            map.entry(l).or_default().push(i);
        }
        map
    }

    pub fn subset(&self, indices: &[usize]) -> LabeledView {
        LabeledView {
            features: self.features.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    /// Rows of `self` followed by rows of `other`.
    pub fn concat(&self, other: &LabeledView) -> Result<LabeledView> {
        let mut labels = self.labels.clone();
        labels.extend_from_slice(&other.labels);
        Ok(LabeledView {
            features: self.features.vstack(&other.features)?,
            labels,
        })
    }
}

/// Number of base categories used as pseudo-novel validation categories:
/// `⌊C_n·C_b / (C_b + C_n)⌋`. The first that many base ids are the validation set.
pub fn split_validation(n_base: usize, n_novel: usize) -> usize {
    if n_base + n_novel == 0 {
        return 0;
    }
    n_novel * n_base / (n_base + n_novel)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_split_formula() {
        assert_eq!(split_validation(150, 50), 37);
        assert_eq!(split_validation(10, 10), 5);
        assert_eq!(split_validation(10, 0), 0);
    }

    #[test]
    fn split_names_round_trip() {
        for s in Split::ALL {
            assert_eq!(s.as_str().parse::<Split>().unwrap(), s);
        }
        assert!("train".parse::<Split>().is_err());
    }

    #[test]
    fn noisy_base_records_rejected() {
        let r = Record {
            feature: vec![0.0],
            label: 0,
            true_label: 1,
            split: Split::BaseTrain,
            noise_kind: NoiseKind::Flip,
        };
        assert!(Dataset::new(1, vec![r]).is_err());
    }

    #[test]
    fn view_groups_by_category() {
        let recs = (0..6)
            .map(|i| Record {
                feature: vec![i as f64],
                label: i % 3,
                true_label: i % 3,
                split: Split::BaseTrain,
                noise_kind: NoiseKind::None,
            })
            .collect();
        let d = Dataset::new(1, recs).unwrap();
        let v = d.view(Split::BaseTrain);
        assert_eq!(v.categories(), vec![0, 1, 2]);
        assert_eq!(v.indices_by_category()[&1], vec![1, 4]);
        assert!(d.view(Split::NovelTest).is_empty());
    }
}
