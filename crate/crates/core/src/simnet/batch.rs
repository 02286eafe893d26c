use rand::seq::{index::sample, SliceRandom};
use rand::Rng;

use crate::error::{Error, Result};
use crate::numcore::Matrix;
use crate::synthdata::LabeledView;

/// A balanced mini-batch: `C_m` categories with `M / C_m` images each, shuffled.
#[derive(Clone, Debug, PartialEq)]
pub struct PairBatch {
    pub features: Matrix,
    pub labels: Vec<usize>,
    pub categories: Vec<usize>,
}

impl PairBatch {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn pair_labels(&self) -> PairLabelMatrix {
        PairLabelMatrix::from_labels(&self.labels)
    }
}

/// Number of categories and total images per balanced batch.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BatchShape {
    pub categories: usize,
    pub size: usize,
}

impl BatchShape {
    pub fn new(categories: usize, size: usize) -> Result<Self> {
        if categories == 0 || size == 0 || !size.is_multiple_of(categories) {
            return Err(Error::Config(format!(
                "batch of {size} images must split evenly over {categories} categories"
            )));
        }
        Ok(BatchShape { categories, size })
    }

    pub fn per_category(&self) -> usize {
        self.size / self.categories
    }

    /// Shrinks the requested shape until `view` can supply it: at most as many
    /// categories as the view has, and no more images per category than the
    /// smallest category holds.
    pub fn fit(view: &LabeledView, categories: usize, size: usize) -> Result<Self> {
        let groups = view.indices_by_category();
        let smallest = groups.values().map(Vec::len).min().unwrap_or(0);
        let cm = categories.min(groups.len());
        if cm == 0 || smallest == 0 {
            return Err(Error::Sampling("view has no labeled images".into()));
        }
        let per = (size / cm).min(smallest).max(1);
        BatchShape::new(cm, cm * per)
    }

    /// Fraction of off-diagonal ordered pairs that are similar: `(M/C_m − 1)/(M − 1)`.
    pub fn similar_fraction_off_diagonal(&self) -> f64 {
        if self.size < 2 {
            return 0.0;
        }
        (self.per_category() as f64 - 1.0) / (self.size as f64 - 1.0)
    }

    /// Fraction of all `M²` ordered pairs that are similar: `1 / C_m`.
    pub fn similar_fraction_with_diagonal(&self) -> f64 {
        1.0 / self.categories as f64
    }
}

/// Picks `C_m` categories uniformly without replacement, then `M/C_m` images
/// uniformly without replacement from each, and shuffles the result.
pub fn sample_balanced_batch<R: Rng + ?Sized>(view: &LabeledView, shape: BatchShape, rng: &mut R) -> Result<PairBatch> {
    let groups: Vec<(usize, Vec<usize>)> = view.indices_by_category().into_iter().collect();
    if groups.len() < shape.categories {
        return Err(Error::Sampling(format!(
            "need {} categories, split has {}",
            shape.categories,
            groups.len()
        )));
    }
    let per = shape.per_category();
    let chosen = sample(rng, groups.len(), shape.categories);
    let mut rows = Vec::with_capacity(shape.size);
    let mut categories = Vec::with_capacity(shape.categories);
    for g in chosen {
        let (cat, members) = &groups[g];
        if members.len() < per {
            return Err(Error::Sampling(format!(
                "category {cat} has {} images, need {per}",
                members.len()
            )));
        }
        categories.push(*cat);
        rows.extend(sample(rng, members.len(), per).into_iter().map(|k| members[k]));
    }
    rows.shuffle(rng);
    Ok(PairBatch {
        features: view.features().select_rows(&rows),
        labels: rows.iter().map(|&r| view.labels()[r]).collect(),
        categories,
    })
}

/// `c_{i,j}`: 1 when images `i` and `j` share a category.
#[derive(Clone, Debug, PartialEq)]
pub struct PairLabelMatrix(Matrix);

impl PairLabelMatrix {
    pub fn from_labels(labels: &[usize]) -> Self {
        let m = labels.len();
        let mut c = Matrix::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                if labels[i] == labels[j] {
                    c[(i, j)] = 1.0;
                }
            }
        }
        PairLabelMatrix(c)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn n(&self) -> usize {
        self.0.rows()
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.0[(i, j)] == 1.0
    }
}

/// Which ordered pairs enter a loss or a metric.
#[derive(Clone, Debug, PartialEq)]
pub struct PairMask {
    m: usize,
    keep: Vec<bool>,
}

impl PairMask {
    pub fn all(m: usize) -> Self {
        PairMask {
            m,
            keep: vec![true; m * m],
        }
    }

    pub fn off_diagonal(m: usize) -> Self {
        let mut mask = PairMask::all(m);
        for i in 0..m {
            mask.keep[i * m + i] = false;
        }
        mask
    }

    pub fn from_fn(m: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let keep = (0..m * m).map(|p| f(p / m, p % m)).collect();
        PairMask { m, keep }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.keep[i * self.m + j]
    }

    pub fn count(&self) -> usize {
        self.keep.iter().filter(|&&k| k).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn view(cats: usize, per: usize) -> LabeledView {
        let n = cats * per;
        let feats = Matrix::from_vec(n, 1, (0..n).map(|i| i as f64).collect()).unwrap();
        LabeledView::new(feats, (0..n).map(|i| i / per).collect()).unwrap()
    }

    #[test]
    fn ten_by_ten_batch() {
        let v = view(15, 30);
        let shape = BatchShape::new(10, 100).unwrap();
        let b = sample_balanced_batch(&v, shape, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(b.len(), 100);
        assert_eq!(b.categories.len(), 10);
        for c in &b.categories {
            assert_eq!(b.labels.iter().filter(|&&l| l == *c).count(), 10);
        }
        // rows are distinct images
        let mut ids: Vec<i64> = b.features.as_slice().iter().map(|&x| x as i64).collect();
        ids.sort_unstable();
        ids.dedup();
        assert_eq!(ids.len(), 100);
    }

    #[test]
    fn one_image_per_category_only_diagonal_similar() {
        let v = view(12, 3);
        let shape = BatchShape::new(8, 8).unwrap();
        let b = sample_balanced_batch(&v, shape, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let c = b.pair_labels();
        for i in 0..8 {
            for j in 0..8 {
                assert_eq!(c.get(i, j), i == j);
            }
        }
    }

    #[test]
    fn two_by_two_similar_pair_count() {
        let v = view(5, 4);
        let shape = BatchShape::new(2, 4).unwrap();
        let b = sample_balanced_batch(&v, shape, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let c = b.pair_labels();
        let off = PairMask::off_diagonal(4);
        let similar = (0..4)
            .flat_map(|i| (0..4).map(move |j| (i, j)))
            .filter(|&(i, j)| off.get(i, j) && c.get(i, j))
            .count();
        assert_eq!(similar, 4);
        assert_eq!(off.count(), 12);
    }

    #[test]
    fn sampling_errors() {
        let v = view(3, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(matches!(
            sample_balanced_batch(&v, BatchShape::new(4, 8).unwrap(), &mut rng),
            Err(Error::Sampling(_))
        ));
        assert!(matches!(
            sample_balanced_batch(&v, BatchShape::new(2, 10).unwrap(), &mut rng),
            Err(Error::Sampling(_))
        ));
        assert!(BatchShape::new(3, 10).is_err());
    }

    #[test]
    fn fit_shrinks_to_available() {
        let v = view(5, 30);
        assert_eq!(BatchShape::fit(&v, 10, 100).unwrap(), BatchShape { categories: 5, size: 100 });
        let v = view(5, 5);
        assert_eq!(BatchShape::fit(&v, 10, 100).unwrap(), BatchShape { categories: 5, size: 25 });
        let v = view(15, 30);
        assert_eq!(BatchShape::fit(&v, 10, 100).unwrap(), BatchShape { categories: 10, size: 100 });
    }

    #[test]
    fn base_rates() {
        let s = BatchShape::new(10, 100).unwrap();
        assert!((s.similar_fraction_off_diagonal() - 9.0 / 99.0).abs() < 1e-15);
        assert_eq!(s.similar_fraction_with_diagonal(), 0.1);
    }
}
