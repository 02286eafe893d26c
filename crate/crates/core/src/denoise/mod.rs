//! Transferred similarities: per-category similarity matrices, unit-mean
//! sample weights, and per-batch similarity for graph regularization.

mod similarity;
mod weights;

pub use similarity::{Provenance, SimilarityMatrix};
pub use weights::{
    compute_sample_weights, load_weights, parse_weights, save_weights, view_sample_weights, write_similarity,
    write_weights, SampleWeights, ViewWeights, WeightEntry,
};

use crate::error::{Error, Result};
use crate::numcore::{Matrix, MlpParams};
use crate::simnet::{baseline_similarity, BaselineKind, SimNetModel};

/// Pairs per tile when scoring large matrices.
pub const DEFAULT_TILE: usize = 64;

/// `S_c` for one category: `N` backbone passes, then `N²` relation-head passes
/// computed tile by tile. Tiling does not change any entry.
pub fn category_similarity_matrix(model: &SimNetModel, features: &Matrix, tile: usize) -> Result<SimilarityMatrix> {
    let n = features.rows();
    if n == 0 {
        return Err(Error::Config("similarity matrix needs at least one image".into()));
    }
    let tile = tile.max(1);
    let emb = model.embed(features)?;
    let proj = model.project(&emb)?;
    let mut s = Matrix::zeros(n, n);
    let mut rel = vec![0.0; model.relation_dim()];
    for i0 in (0..n).step_by(tile) {
        for j0 in (0..n).step_by(tile) {
            for i in i0..(i0 + tile).min(n) {
                for j in j0..(j0 + tile).min(n) {
                    proj.relation_into(i, j, &mut rel);
                    s[(i, j)] = proj.score(&rel);
                }
            }
        }
    }
    SimilarityMatrix::new(s, Provenance::SimNet)
}

/// `S̃` for a mixed-category mini-batch, with the similarity network frozen.
pub fn batch_similarity(model: &SimNetModel, features: &Matrix) -> Result<SimilarityMatrix> {
    if features.rows() < 2 {
        return Err(Error::Config("batch similarity needs at least two images".into()));
    }
    category_similarity_matrix(model, features, DEFAULT_TILE)
}

/// Ground-truth indicator: 1 iff both images have the same content category.
/// `None` marks content from no category (outliers), similar only to itself.
pub fn oracle_similarity(identities: &[Option<usize>]) -> SimilarityMatrix {
    let n = identities.len();
    let mut s = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let same = i == j || matches!((identities[i], identities[j]), (Some(a), Some(b)) if a == b);
            if same {
                s[(i, j)] = 1.0;
            }
        }
    }
    SimilarityMatrix::new(s, Provenance::Oracle).expect("indicator matrix is valid")
}

/// Source of pairwise similarities for rows of a training view.
///
/// `rows` are the row indices of `features` within the training view, which
/// lets sources that need per-image metadata (the oracle) look it up.
pub trait SimilaritySource {
    fn similarity(&self, features: &Matrix, rows: &[usize]) -> Result<SimilarityMatrix>;

    fn provenance(&self) -> Provenance;
}

impl SimilaritySource for SimNetModel {
    fn similarity(&self, features: &Matrix, _rows: &[usize]) -> Result<SimilarityMatrix> {
        category_similarity_matrix(self, features, DEFAULT_TILE)
    }

    fn provenance(&self) -> Provenance {
        Provenance::SimNet
    }
}

/// Euclidean or cosine similarity between embeddings of a fixed feature extractor.
#[derive(Clone, Debug)]
pub struct EmbeddingSimilarity {
    pub backbone: MlpParams,
    pub kind: BaselineKind,
}

impl SimilaritySource for EmbeddingSimilarity {
    fn similarity(&self, features: &Matrix, _rows: &[usize]) -> Result<SimilarityMatrix> {
        baseline_similarity(&self.backbone.predict(features)?, self.kind)
    }

    fn provenance(&self) -> Provenance {
        self.kind.provenance()
    }
}

/// Ground-truth similarity keyed by training-view row. Test oracle only.
#[derive(Clone, Debug)]
pub struct OracleSimilarity {
    pub identities: Vec<Option<usize>>,
}

impl SimilaritySource for OracleSimilarity {
    fn similarity(&self, _features: &Matrix, rows: &[usize]) -> Result<SimilarityMatrix> {
        let ids: Vec<Option<usize>> = rows.iter().map(|&r| self.identities[r]).collect();
        Ok(oracle_similarity(&ids))
    }

    fn provenance(&self) -> Provenance {
        Provenance::Oracle
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::Parameters;
    use crate::simnet::SimNetArch;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn model(seed: u64, dim: usize) -> SimNetModel {
        SimNetModel::new(&SimNetArch::for_input(dim), &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
    }

    fn random(rows: usize, cols: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap()
    }

    #[test]
    fn single_image() {
        let s = category_similarity_matrix(&model(0, 3), &random(1, 3, 1), 64).unwrap();
        assert_eq!(s.n(), 1);
    }

    #[test]
    fn zero_head_gives_half_everywhere() {
        let mut m = model(0, 3);
        for t in m.score_head.tensors_mut() {
            t.scale(0.0);
        }
        let s = category_similarity_matrix(&m, &random(6, 3, 1), 64).unwrap();
        assert!(s.entries().as_slice().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn tiling_is_invisible() {
        let m = model(4, 5);
        let x = random(50, 5, 2);
        let tiled = category_similarity_matrix(&m, &x, 16).unwrap();
        let whole = category_similarity_matrix(&m, &x, 50).unwrap();
        assert_eq!(tiled, whole);
    }

    #[test]
    fn matches_training_forward() {
        let m = model(5, 4);
        let x = random(9, 4, 3);
        let s = category_similarity_matrix(&m, &x, 4).unwrap();
        let fwd = crate::simnet::relation_forward(&m, &x).unwrap();
        assert_eq!(s.entries(), &fwd.scores);
    }

    #[test]
    fn batch_similarity_cases() {
        let m = model(6, 4);
        let row = random(1, 4, 4);
        let x = row.vstack(&row).unwrap();
        let s = batch_similarity(&m, &x).unwrap();
        assert_eq!(s.get(0, 1), s.get(1, 0));
        assert!(s.entries().as_slice().iter().all(|&v| v > 0.0 && v < 1.0));
        assert!(batch_similarity(&m, &row).is_err());
        let cat = random(12, 4, 5);
        assert_eq!(
            batch_similarity(&m, &cat).unwrap(),
            category_similarity_matrix(&m, &cat, DEFAULT_TILE).unwrap()
        );
    }

    #[test]
    fn oracle_shapes() {
        let same = oracle_similarity(&[Some(1), Some(1), Some(1)]);
        assert!(same.entries().as_slice().iter().all(|&v| v == 1.0));
        let distinct = oracle_similarity(&[Some(0), Some(1), None, None]);
        assert_eq!(distinct.entries(), &Matrix::identity(4));
    }
}
