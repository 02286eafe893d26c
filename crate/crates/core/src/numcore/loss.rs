use super::matrix::Matrix;
use crate::error::{Error, Result};

/// Scores are clamped into `[PROB_EPS, 1 - PROB_EPS]` before any logarithm.
pub const PROB_EPS: f64 = 1e-7;

pub fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_EPS, 1.0 - PROB_EPS)
}

/// Binary cross-entropy of a probability `score` against a 0/1 `label`.
///
/// Returns `(loss, dloss/dscore)`. Both are evaluated at the clamped score, so
/// the gradient stays informative when the score saturates.
pub fn binary_ce(score: f64, label: f64) -> (f64, f64) {
    let s = clamp_prob(score);
    let loss = -(label * s.ln() + (1.0 - label) * (1.0 - s).ln());
    let grad = -label / s + (1.0 - label) / (1.0 - s);
    (loss, grad)
}

/// Per-sample softmax cross-entropy and its gradient w.r.t. the logits.
///
/// The gradient rows are per-sample (not divided by the batch size).
pub fn softmax_ce(logits: &Matrix, labels: &[usize]) -> Result<(Vec<f64>, Matrix)> {
    if logits.rows() != labels.len() {
        return Err(Error::shape("softmax_ce", logits.rows(), labels.len()));
    }
    let classes = logits.cols();
    let mut losses = Vec::with_capacity(labels.len());
    let mut grad = Matrix::zeros(logits.rows(), classes);
    for (r, &y) in labels.iter().enumerate() {
        if y >= classes {
            return Err(Error::Index {
                op: "softmax_ce",
                index: y,
                bound: classes,
            });
        }
        let row = logits.row(r);
        let arg = argmax(row);
        let max = row[arg];
        // log Σ exp(z - max) = ln(1 + rest), rest excluding the max entry
        let rest: f64 = row
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != arg)
            .map(|(_, &z)| (z - max).exp())
            .sum();
        losses.push((max - row[y]) + rest.ln_1p());
        let norm = 1.0 + rest;
        let g = grad.row_mut(r);
        for (gc, &z) in g.iter_mut().zip(row) {
            *gc = (z - max).exp() / norm;
        }
        g[y] -= 1.0;
    }
    if !losses.iter().all(|l| l.is_finite()) {
        return Err(Error::Numeric("softmax_ce"));
    }
    Ok((losses, grad))
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (j, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = j;
        }
    }
    best
}

/// Softmax probabilities, row-wise.
pub fn softmax(logits: &Matrix) -> Matrix {
    let mut out = logits.clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        row.iter_mut().for_each(|v| *v /= sum);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    #[test]
    fn bce_values() {
        assert!((binary_ce(0.5, 1.0).0 - LN_2).abs() < 1e-15);
        assert!((binary_ce(0.5, 0.0).0 - LN_2).abs() < 1e-15);
        assert!((binary_ce(0.9, 1.0).0 - 0.105_360_515_657_826_3).abs() < 1e-12);
    }

    #[test]
    fn bce_clamps_saturated_scores() {
        let (l1, g1) = binary_ce(1.0, 1.0);
        assert!(l1 > 0.0 && l1 < 1.1e-7);
        assert!(g1.is_finite());
        let (l0, _) = binary_ce(0.0, 1.0);
        assert!((l0 + PROB_EPS.ln()).abs() < 1e-12);
    }

    #[test]
    fn bce_gradient_matches_difference() {
        for &(s, y) in &[(0.3, 1.0), (0.7, 0.0), (0.55, 1.0)] {
            let h = 1e-6;
            let num = (binary_ce(s + h, y).0 - binary_ce(s - h, y).0) / (2.0 * h);
            assert!((num - binary_ce(s, y).1).abs() < 1e-6);
        }
    }

    #[test]
    fn softmax_ce_values() {
        let (l, _) = softmax_ce(&Matrix::row_vector(&[0.0, 0.0]), &[0]).unwrap();
        assert!((l[0] - LN_2).abs() < 1e-15);
        let (l, _) = softmax_ce(&Matrix::row_vector(&[10.0, -10.0]), &[0]).unwrap();
        // ln(1 + e^-20)
        assert!((l[0] - 2.061_153_620_314_380_7e-9).abs() < 1e-18);
    }

    #[test]
    fn softmax_ce_shift_invariant() {
        let a = Matrix::row_vector(&[0.3, -1.2, 2.5]);
        let b = a.map(|v| v + 1234.5);
        let (la, _) = softmax_ce(&a, &[2]).unwrap();
        let (lb, _) = softmax_ce(&b, &[2]).unwrap();
        assert!((la[0] - lb[0]).abs() < 1e-10);
    }

    #[test]
    fn softmax_ce_label_out_of_range() {
        let err = softmax_ce(&Matrix::row_vector(&[0.0, 0.0]), &[2]).unwrap_err();
        assert!(matches!(err, Error::Index { index: 2, bound: 2, .. }));
    }
}
