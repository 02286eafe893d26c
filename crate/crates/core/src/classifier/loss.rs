use super::{ClassifierGrads, ClassifierModel};
use crate::denoise::SimilarityMatrix;
use crate::error::{Error, Result};
use crate::numcore::{mlp_backward, softmax_ce, Matrix};

/// `L = (1/M) Σ_m w_m · CE_m` and its gradient w.r.t. the logits.
pub fn weighted_ce_loss(logits: &Matrix, targets: &[usize], weights: &[f64]) -> Result<(f64, Matrix)> {
    let m = logits.rows();
    if weights.len() != m {
        return Err(Error::shape("weighted_ce_loss weights", m, weights.len()));
    }
    if m == 0 {
        return Err(Error::Config("weighted_ce_loss on an empty batch".into()));
    }
    if weights.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
        return Err(Error::Config("sample weights must be finite and non-negative".into()));
    }
    let (losses, mut grad) = softmax_ce(logits, targets)?;
    let inv = 1.0 / m as f64;
    let mut total = 0.0;
    for (r, (&l, &w)) in losses.iter().zip(weights).enumerate() {
        total += w * l;
        for g in grad.row_mut(r) {
            *g *= w * inv;
        }
    }
    Ok((total * inv, grad))
}

/// Graph regularization on embeddings with a frozen similarity matrix.
#[derive(Clone, Debug)]
pub struct GraphReg {
    /// `Σ_{i,j} s_ij ‖h_i − h_j‖²`.
    pub raw: f64,
    /// `raw / M²`, the value combined with α.
    pub normalized: f64,
    /// d normalized / d embeddings.
    pub grad: Matrix,
}

pub fn graph_reg_loss(embeddings: &Matrix, s: &SimilarityMatrix) -> Result<GraphReg> {
    let (m, e) = embeddings.shape();
    if s.n() != m {
        return Err(Error::shape("graph_reg_loss", format!("{m}x{m}"), format!("{0}x{0}", s.n())));
    }
    let mut raw = 0.0;
    let mut grad = Matrix::zeros(m, e);
    let mut diff = vec![0.0; e];
    for i in 0..m {
        for j in 0..m {
            let sij = s.get(i, j);
            if sij == 0.0 || i == j {
                continue;
            }
            let (hi, hj) = (embeddings.row(i), embeddings.row(j));
            let mut d2 = 0.0;
            for k in 0..e {
                diff[k] = hi[k] - hj[k];
                d2 += diff[k] * diff[k];
            }
            raw += sij * d2;
            // d/dh_i += 2 s (h_i − h_j), d/dh_j −= the same
            for k in 0..e {
                grad[(i, k)] += 2.0 * sij * diff[k];
                grad[(j, k)] -= 2.0 * sij * diff[k];
            }
        }
    }
    let norm = if m == 0 { 0.0 } else { 1.0 / (m * m) as f64 };
    grad.scale(norm);
    Ok(GraphReg {
        raw,
        normalized: raw * norm,
        grad,
    })
}

/// Inverse-frequency per-category loss multipliers with unit mean.
pub fn class_balance_weights(counts: &[usize]) -> Result<Vec<f64>> {
    if counts.is_empty() {
        return Err(Error::Config("no categories to balance".into()));
    }
    if counts.contains(&0) {
        return Err(Error::Config("category with zero images".into()));
    }
    if counts.iter().all(|&c| c == counts[0]) {
        return Ok(vec![1.0; counts.len()]);
    }
    let inv: Vec<f64> = counts.iter().map(|&c| 1.0 / c as f64).collect();
    let mean = inv.iter().sum::<f64>() / inv.len() as f64;
    Ok(inv.iter().map(|v| v / mean).collect())
}

/// Everything one step of classifier training needs from a batch.
#[derive(Clone, Debug)]
pub struct FullLoss {
    pub l_cls: f64,
    pub l_reg_raw: f64,
    pub l_reg_norm: f64,
    /// `l_cls + α · l_reg_norm`.
    pub l_full: f64,
    pub grads: ClassifierGrads,
    /// Rows whose argmax equals the target.
    pub correct: usize,
}

/// `L_full = L_cls_w + α · L_reg` for one batch. `targets` are output indices.
/// Without `similarity` the regularizer is skipped and reported as zero.
pub fn full_loss(
    model: &ClassifierModel,
    features: &Matrix,
    targets: &[usize],
    weights: &[f64],
    similarity: Option<&SimilarityMatrix>,
    alpha: f64,
) -> Result<FullLoss> {
    let backbone_acts = model.backbone.forward(features)?;
    let emb = backbone_acts.output();
    let head_acts = model.head.forward(emb)?;
    let logits = head_acts.output();
    let (l_cls, d_logits) = weighted_ce_loss(logits, targets, weights)?;
    let correct = (0..logits.rows())
        .filter(|&r| crate::numcore::argmax(logits.row(r)) == targets[r])
        .count();
    let (head, mut d_emb) = mlp_backward(&model.head, &head_acts, &d_logits)?;
    let (mut l_reg_raw, mut l_reg_norm) = (0.0, 0.0);
    if let Some(s) = similarity {
        let reg = graph_reg_loss(emb, s)?;
        l_reg_raw = reg.raw;
        l_reg_norm = reg.normalized;
        if alpha != 0.0 {
            d_emb.axpy(alpha, &reg.grad)?;
        }
    }
    let (backbone, _) = mlp_backward(&model.backbone, &backbone_acts, &d_emb)?;
    Ok(FullLoss {
        l_cls,
        l_reg_raw,
        l_reg_norm,
        l_full: l_cls + alpha * l_reg_norm,
        grads: ClassifierGrads { backbone, head },
        correct,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::denoise::Provenance;
    use crate::numcore::{flatten, grad_check, unflatten_into};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sim(m: Matrix) -> SimilarityMatrix {
        SimilarityMatrix::new(m, Provenance::SimNet).unwrap()
    }

    fn random(rows: usize, cols: usize, lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> Matrix {
        Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.random_range(lo..hi)).collect()).unwrap()
    }

    #[test]
    fn unit_weights_match_plain_ce() {
        let logits = Matrix::from_rows(&[[1.0, -0.5, 0.2], [0.0, 2.0, -1.0]]).unwrap();
        let (l, g) = weighted_ce_loss(&logits, &[2, 1], &[1.0, 1.0]).unwrap();
        let (per, mut g_plain) = softmax_ce(&logits, &[2, 1]).unwrap();
        g_plain.scale(0.5);
        assert!((l - (per[0] + per[1]) / 2.0).abs() < 1e-15);
        assert_eq!(g, g_plain);
    }

    #[test]
    fn weight_two_on_half_probability() {
        let (l, _) = weighted_ce_loss(&Matrix::from_rows(&[[0.0, 0.0]]).unwrap(), &[1], &[2.0]).unwrap();
        assert!((l - 2.0 * std::f64::consts::LN_2).abs() < 1e-15);
        assert!((l - 1.3863).abs() < 1e-4);
    }

    #[test]
    fn zero_weight_sample_is_invisible() {
        let logits = Matrix::from_rows(&[[1.0, -0.5], [3.0, 2.0], [0.1, 0.4]]).unwrap();
        let (l3, g) = weighted_ce_loss(&logits, &[0, 1, 1], &[1.5, 0.0, 0.7]).unwrap();
        assert!(g.row(1).iter().all(|&v| v == 0.0));
        let kept = logits.select_rows(&[0, 2]);
        let (l2, _) = weighted_ce_loss(&kept, &[0, 1], &[1.5, 0.7]).unwrap();
        assert!((l3 * 3.0 - l2 * 2.0).abs() < 1e-14);
    }

    #[test]
    fn weighted_ce_errors() {
        let logits = Matrix::zeros(1, 2);
        assert!(matches!(weighted_ce_loss(&logits, &[2], &[1.0]), Err(Error::Index { .. })));
        assert!(weighted_ce_loss(&logits, &[0], &[-1.0]).is_err());
        assert!(weighted_ce_loss(&logits, &[0], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn graph_reg_hand_value() {
        let h = Matrix::from_rows(&[[0.0, 0.0], [1.0, 0.0]]).unwrap();
        let s = sim(Matrix::from_rows(&[[1.0, 0.5], [0.5, 1.0]]).unwrap());
        let r = graph_reg_loss(&h, &s).unwrap();
        assert_eq!(r.raw, 1.0);
        assert_eq!(r.normalized, 0.25);
    }

    #[test]
    fn graph_reg_zero_cases() {
        let same = Matrix::filled(4, 3, 0.7);
        let r = graph_reg_loss(&same, &sim(Matrix::filled(4, 4, 0.9))).unwrap();
        assert_eq!(r.raw, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let h = random(4, 3, -1.0, 1.0, &mut rng);
        let r = graph_reg_loss(&h, &sim(Matrix::zeros(4, 4))).unwrap();
        assert_eq!(r.raw, 0.0);
        assert_eq!(r.grad.max_abs(), 0.0);
        assert!(graph_reg_loss(&h, &sim(Matrix::zeros(3, 3))).is_err());
    }

    #[test]
    fn graph_reg_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h = random(6, 3, -1.0, 1.0, &mut rng);
        let s = sim(random(6, 6, 0.0, 1.0, &mut rng));
        let r = graph_reg_loss(&h, &s).unwrap();
        let report = grad_check(
            h.as_slice(),
            r.grad.as_slice(),
            |p| Ok(graph_reg_loss(&Matrix::from_vec(6, 3, p.to_vec())?, &s)?.normalized),
            1e-6,
        )
        .unwrap();
        assert!(report.passes(1e-6), "{report:?}");
    }

    #[test]
    fn graph_reg_step_pulls_together() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut h = random(5, 2, -1.0, 1.0, &mut rng);
        let s = sim(random(5, 5, 0.0, 1.0, &mut rng));
        let before = graph_reg_loss(&h, &s).unwrap();
        h.axpy(-1e-2, &before.grad).unwrap();
        assert!(graph_reg_loss(&h, &s).unwrap().raw < before.raw);
    }

    #[test]
    fn balance_weights() {
        let w = class_balance_weights(&[30, 1000]).unwrap();
        assert!((w[0] - 1.9417).abs() < 1e-4);
        assert!((w[1] - 0.0583).abs() < 1e-4);
        assert!((w[0] / w[1] - 1000.0 / 30.0).abs() < 1e-9);
        assert_eq!(class_balance_weights(&[7, 7, 7]).unwrap(), vec![1.0; 3]);
        assert_eq!(class_balance_weights(&[12]).unwrap(), vec![1.0]);
        assert!(class_balance_weights(&[3, 0]).is_err());
        let w = class_balance_weights(&[3, 10, 40]).unwrap();
        assert!((w.iter().sum::<f64>() / 3.0 - 1.0).abs() < 1e-12);
    }

    fn tiny_model(seed: u64) -> ClassifierModel {
        let mut m = ClassifierModel::new(3, 5, 4, vec![0, 1, 2], &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
        let v: Vec<f64> = flatten(&m).iter().map(|x| x + rng.random_range(-0.3..0.3)).collect();
        unflatten_into(&mut m, &v);
        m
    }

    #[test]
    fn full_loss_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let model = tiny_model(3);
        let x = random(8, 3, -1.5, 1.5, &mut rng);
        let y: Vec<usize> = (0..8).map(|i| i % 3).collect();
        let w: Vec<f64> = (0..8).map(|_| rng.random_range(0.0..2.0)).collect();
        let s = sim(random(8, 8, 0.0, 1.0, &mut rng));
        let out = full_loss(&model, &x, &y, &w, Some(&s), 0.7).unwrap();
        assert!((out.l_full - (out.l_cls + 0.7 * out.l_reg_norm)).abs() < 1e-12);
        let report = grad_check(
            &flatten(&model),
            &flatten(&out.grads),
            |p| {
                let mut m = model.clone();
                unflatten_into(&mut m, p);
                Ok(full_loss(&m, &x, &y, &w, Some(&s), 0.7)?.l_full)
            },
            1e-6,
        )
        .unwrap();
        assert!(report.passes(1e-3), "{report:?}");
    }

    #[test]
    fn weighted_ce_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let logits = random(7, 4, -2.0, 2.0, &mut rng);
        let y = [0, 3, 1, 1, 2, 0, 3];
        let w: Vec<f64> = (0..7).map(|_| rng.random_range(0.0..2.0)).collect();
        let (_, g) = weighted_ce_loss(&logits, &y, &w).unwrap();
        let report = grad_check(
            logits.as_slice(),
            g.as_slice(),
            |p| Ok(weighted_ce_loss(&Matrix::from_vec(7, 4, p.to_vec())?, &y, &w)?.0),
            1e-6,
        )
        .unwrap();
        assert!(report.passes(1e-6), "{report:?}");
    }

    #[test]
    fn zero_alpha_ignores_regularizer() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let model = tiny_model(5);
        let x = random(6, 3, -1.0, 1.0, &mut rng);
        let y = [0, 1, 2, 0, 1, 2];
        let w = [1.0; 6];
        let s = sim(random(6, 6, 0.0, 1.0, &mut rng));
        let with = full_loss(&model, &x, &y, &w, Some(&s), 0.0).unwrap();
        let without = full_loss(&model, &x, &y, &w, None, 0.1).unwrap();
        assert_eq!(with.l_full, without.l_full);
        assert_eq!(with.grads, without.grads);
        assert!(with.l_reg_raw > 0.0);
    }

    #[test]
    fn scaled_weights_with_scaled_step_agree() {
        use crate::numcore::{SgdConfig, SgdState};
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let model = tiny_model(6);
        let x = random(6, 3, -1.0, 1.0, &mut rng);
        let y = [2, 1, 0, 0, 1, 2];
        let w: Vec<f64> = (0..6).map(|_| rng.random_range(0.1..2.0)).collect();
        let k = 4.0;
        let wk: Vec<f64> = w.iter().map(|v| v * k).collect();
        let step = |weights: &[f64], lr: f64| {
            let mut m = model.clone();
            let cfg = SgdConfig {
                learning_rate: lr,
                momentum: 0.9,
                weight_decay: 0.0,
            };
            let g = full_loss(&m, &x, &y, weights, None, 0.0).unwrap().grads;
            SgdState::new(&m, cfg).unwrap().step(&mut m, &g).unwrap();
            m
        };
        let a = step(&w, 0.01);
        let b = step(&wk, 0.01 / k);
        assert_eq!(flatten(&a), flatten(&b));
        assert_eq!(a.predict(&x).unwrap(), b.predict(&x).unwrap());
    }
}
