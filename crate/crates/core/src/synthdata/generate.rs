use rand::Rng;
use rand_distr::StandardNormal;

use super::{Dataset, Geometry, NoiseKind, Record, Split};
use crate::error::{Error, Result};
use crate::rng::{substream, Stream};

/// Images per category in each split.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PerCategory {
    pub base_train: usize,
    pub base_test: usize,
    pub novel_train: usize,
    pub novel_test: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetSpec {
    pub n_base_categories: usize,
    pub n_novel_categories: usize,
    pub dim: usize,
    pub per_category: PerCategory,
    pub n_superclusters: usize,
    pub intra_category_std: f64,
    pub inter_category_std: f64,
    pub supercluster_std: f64,
    pub seed: u64,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        DatasetSpec {
            n_base_categories: 15,
            n_novel_categories: 5,
            dim: 32,
            per_category: PerCategory {
                base_train: 30,
                base_test: 30,
                novel_train: 100,
                novel_test: 30,
            },
            n_superclusters: 3,
            intra_category_std: 1.0,
            inter_category_std: 1.05,
            supercluster_std: 2.0,
            seed: 0,
        }
    }
}

impl DatasetSpec {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.n_base_categories == 0 || self.n_novel_categories == 0 {
            return fail("need at least one base and one novel category".into());
        }
        if self.dim == 0 {
            return fail("feature dimension must be positive".into());
        }
        if self.n_superclusters == 0 {
            return fail("need at least one supercluster".into());
        }
        for (name, v) in [
            ("intra_category_std", self.intra_category_std),
            ("inter_category_std", self.inter_category_std),
            ("supercluster_std", self.supercluster_std),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return fail(format!("{name} must be finite and non-negative, got {v}"));
            }
        }
        if self.intra_category_std >= self.inter_category_std {
            return fail(format!(
                "intra_category_std ({}) must be smaller than inter_category_std ({})",
                self.intra_category_std, self.inter_category_std
            ));
        }
        Ok(())
    }

    pub fn n_categories(&self) -> usize {
        self.n_base_categories + self.n_novel_categories
    }

    /// Base ids are `0..C_b`, novel ids `C_b..C_b+C_n`.
    pub fn novel_ids(&self) -> std::ops::Range<usize> {
        self.n_base_categories..self.n_categories()
    }

    /// Supercluster of a category; base and novel sets are each dealt round-robin.
    pub fn supercluster_of(&self, category: usize) -> usize {
        if category < self.n_base_categories {
            category % self.n_superclusters
        } else {
            (category - self.n_base_categories) % self.n_superclusters
        }
    }
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R, center: &[f64], std: f64) -> Vec<f64> {
    center
        .iter()
        .map(|&c| {
            let z: f64 = rng.sample(StandardNormal);
            c + std * z
        })
        .collect()
}

pub(super) fn sample_image<R: Rng + ?Sized>(rng: &mut R, prototype: &[f64], std: f64) -> Vec<f64> {
    gaussian(rng, prototype, std)
}

/// Draws a clean dataset: supercluster centers, category prototypes, then images.
pub fn generate_dataset(spec: &DatasetSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = substream(spec.seed, Stream::Data);
    let origin = vec![0.0; spec.dim];
    let centers: Vec<Vec<f64>> = (0..spec.n_superclusters)
        .map(|_| gaussian(&mut rng, &origin, spec.supercluster_std))
        .collect();
    let prototypes: Vec<Vec<f64>> = (0..spec.n_categories())
        .map(|c| gaussian(&mut rng, &centers[spec.supercluster_of(c)], spec.inter_category_std))
        .collect();

    let pc = spec.per_category;
    let plan = [
        (Split::BaseTrain, 0..spec.n_base_categories, pc.base_train),
        (Split::BaseTest, 0..spec.n_base_categories, pc.base_test),
        (Split::NovelTrain, spec.novel_ids(), pc.novel_train),
        (Split::NovelTest, spec.novel_ids(), pc.novel_test),
    ];
    let mut records = Vec::new();
    for (split, ids, count) in plan {
        for c in ids {
            for _ in 0..count {
                records.push(Record {
                    feature: sample_image(&mut rng, &prototypes[c], spec.intra_category_std),
                    label: c,
                    true_label: c,
                    split,
                    noise_kind: NoiseKind::None,
                });
            }
        }
    }
    let geometry = Geometry {
        prototypes,
        intra_category_std: spec.intra_category_std,
        inter_category_std: spec.inter_category_std,
    };
    Ok(Dataset::new(spec.dim, records)?.with_geometry(geometry))
}
