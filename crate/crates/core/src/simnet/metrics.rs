use rand::Rng;

use super::batch::{sample_balanced_batch, BatchShape, PairBatch, PairMask};
use super::model::{relation_forward, SimNetModel};
use crate::error::{Error, Result};
use crate::numcore::Matrix;
use crate::rng::Rng as StreamRng;
use crate::synthdata::LabeledView;

/// Anything that produces an `M x M` similarity score matrix for a batch.
pub trait PairScorer {
    fn score_batch(&self, batch: &PairBatch, rng: &mut StreamRng) -> Result<Matrix>;
}

impl PairScorer for SimNetModel {
    fn score_batch(&self, batch: &PairBatch, _rng: &mut StreamRng) -> Result<Matrix> {
        Ok(relation_forward(self, &batch.features)?.scores)
    }
}

/// Uniform random scores in `[0, 1)`.
#[derive(Clone, Copy, Debug, Default)]
pub struct RandomScorer;

impl PairScorer for RandomScorer {
    fn score_batch(&self, batch: &PairBatch, rng: &mut StreamRng) -> Result<Matrix> {
        let m = batch.len();
        Matrix::from_vec(m, m, (0..m * m).map(|_| rng.random::<f64>()).collect())
    }
}

/// Ground-truth same-category indicator. Only meaningful on clean splits.
#[derive(Clone, Copy, Debug, Default)]
pub struct OracleScorer;

impl PairScorer for OracleScorer {
    fn score_batch(&self, batch: &PairBatch, _rng: &mut StreamRng) -> Result<Matrix> {
        Ok(batch.pair_labels().matrix().clone())
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ConstantScorer(pub f64);

impl PairScorer for ConstantScorer {
    fn score_batch(&self, batch: &PairBatch, _rng: &mut StreamRng) -> Result<Matrix> {
        Ok(Matrix::filled(batch.len(), batch.len(), self.0))
    }
}

/// Precision, recall and F1 in percent.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl ClassMetrics {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { 100.0 * a as f64 / b as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        ClassMetrics {
            precision,
            recall,
            f1: f1_score(precision, recall),
        }
    }
}

pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PairMetrics {
    pub similar: ClassMetrics,
    pub dissimilar: ClassMetrics,
}

impl PairMetrics {
    /// Metrics of one scored batch; `score >= threshold` predicts "similar".
    pub fn from_scores(scores: &Matrix, labels: &[usize], mask: &PairMask, threshold: f64) -> Result<Self> {
        let m = labels.len();
        if scores.shape() != (m, m) || mask.m() != m {
            return Err(Error::shape("PairMetrics", format!("{m}x{m}"), format!("{:?}", scores.shape())));
        }
        let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
        for i in 0..m {
            for j in 0..m {
                if !mask.get(i, j) {
                    continue;
                }
                let truth = labels[i] == labels[j];
                let pred = scores[(i, j)] >= threshold;
                match (pred, truth) {
                    (true, true) => tp += 1,
                    (true, false) => fp += 1,
                    (false, true) => fn_ += 1,
                    (false, false) => tn += 1,
                }
            }
        }
        Ok(PairMetrics {
            similar: ClassMetrics::from_counts(tp, fp, fn_),
            dissimilar: ClassMetrics::from_counts(tn, fn_, fp),
        })
    }

    fn accumulate(&mut self, other: &PairMetrics) {
        for (a, b) in [(&mut self.similar, &other.similar), (&mut self.dissimilar, &other.dissimilar)] {
            a.precision += b.precision;
            a.recall += b.recall;
            a.f1 += b.f1;
        }
    }

    fn divide(&mut self, n: f64) {
        for a in [&mut self.similar, &mut self.dissimilar] {
            a.precision /= n;
            a.recall /= n;
            a.f1 /= n;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalConfig {
    pub shape: BatchShape,
    /// Number of balanced batches averaged.
    pub batches: usize,
    /// Count self-pairs `(i, i)`; they are always similar.
    pub include_diagonal: bool,
    pub threshold: f64,
}

impl EvalConfig {
    pub fn new(shape: BatchShape) -> Self {
        EvalConfig {
            shape,
            batches: 50,
            include_diagonal: false,
            threshold: 0.5,
        }
    }
}

/// Pair-level precision/recall/F1 averaged over balanced test batches.
pub fn eval_pairs<S: PairScorer + ?Sized>(
    scorer: &S,
    test: &LabeledView,
    config: &EvalConfig,
    rng: &mut StreamRng,
) -> Result<PairMetrics> {
    if config.batches == 0 {
        return Err(Error::Config("need at least one evaluation batch".into()));
    }
    let m = config.shape.size;
    let mask = if config.include_diagonal {
        PairMask::all(m)
    } else {
        PairMask::off_diagonal(m)
    };
    let mut total = PairMetrics::default();
    for _ in 0..config.batches {
        let batch = sample_balanced_batch(test, config.shape, rng)?;
        let scores = scorer.score_batch(&batch, rng)?;
        let metrics = PairMetrics::from_scores(&scores, &batch.labels, &mask, config.threshold)?;
        total.accumulate(&metrics);
    }
    total.divide(config.batches as f64);
    Ok(total)
}

/// Expected metrics of a predictor that calls "similar" with probability ½,
/// given the similar-pair base rate.
pub fn random_guess_metrics(similar_rate: f64) -> PairMetrics {
    let p = 100.0 * similar_rate;
    let similar = ClassMetrics {
        precision: p,
        recall: 50.0,
        f1: f1_score(p, 50.0),
    };
    let dissimilar = ClassMetrics {
        precision: 100.0 - p,
        recall: 50.0,
        f1: f1_score(100.0 - p, 50.0),
    };
    PairMetrics { similar, dissimilar }
}
