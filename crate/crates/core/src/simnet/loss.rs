use super::batch::{PairBatch, PairLabelMatrix, PairMask};
use super::model::{relation_backward, relation_forward, Discriminator, RelationForward, SimNetGrads, SimNetModel};
use crate::error::{Error, Result};
use crate::numcore::{binary_ce, mlp_backward, Matrix, MlpGrads, Parameters};

/// Mean binary cross-entropy over the masked ordered pairs, with dL/ds.
pub fn relation_loss(scores: &Matrix, labels: &PairLabelMatrix, mask: &PairMask) -> Result<(f64, Matrix)> {
    let m = scores.rows();
    if scores.shape() != (m, m) || labels.n() != m || mask.m() != m {
        return Err(Error::shape(
            "relation_loss",
            format!("{m}x{m} scores, labels and mask"),
            format!("{:?} / {} / {}", scores.shape(), labels.n(), mask.m()),
        ));
    }
    let count = mask.count();
    if count == 0 {
        return Err(Error::Config("relation loss mask selects no pairs".into()));
    }
    let inv = 1.0 / count as f64;
    let mut total = 0.0;
    let mut grad = Matrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            if !mask.get(i, j) {
                continue;
            }
            let y = if labels.get(i, j) { 1.0 } else { 0.0 };
            let (l, g) = binary_ce(scores[(i, j)], y);
            total += l;
            grad[(i, j)] = g * inv;
        }
    }
    Ok((total * inv, grad))
}

/// Discriminator objective on one base and one novel set of relation features.
#[derive(Clone, Debug)]
pub struct DiscriminatorPass {
    /// `mean log(1 − D(r_b)) + mean log D(r_n)`; the discriminator minimizes it.
    pub l_d: f64,
    pub disc_grads: MlpGrads,
    /// dL_D / d r_b and dL_D / d r_n.
    pub d_rel_base: Matrix,
    pub d_rel_novel: Matrix,
    pub base_scores: Matrix,
    pub novel_scores: Matrix,
}

pub fn discriminator_pass(disc: &Discriminator, rel_base: &Matrix, rel_novel: &Matrix) -> Result<DiscriminatorPass> {
    let acts_b = disc.mlp.forward(rel_base)?;
    let acts_n = disc.mlp.forward(rel_novel)?;
    let (nb, nn) = (rel_base.rows(), rel_novel.rows());
    if nb == 0 || nn == 0 {
        return Err(Error::Config("discriminator needs non-empty batches".into()));
    }
    let mut l_d = 0.0;
    // log(1 − d) = −bce(d, 0), log d = −bce(d, 1)
    let mut g_b = Matrix::zeros(nb, 1);
    for (k, &d) in acts_b.output().as_slice().iter().enumerate() {
        let (l, g) = binary_ce(d, 0.0);
        l_d -= l / nb as f64;
        g_b.as_mut_slice()[k] = -g / nb as f64;
    }
    let mut g_n = Matrix::zeros(nn, 1);
    for (k, &d) in acts_n.output().as_slice().iter().enumerate() {
        let (l, g) = binary_ce(d, 1.0);
        l_d -= l / nn as f64;
        g_n.as_mut_slice()[k] = -g / nn as f64;
    }
    let (mut disc_grads, d_rel_base) = mlp_backward(&disc.mlp, &acts_b, &g_b)?;
    let (grads_n, d_rel_novel) = mlp_backward(&disc.mlp, &acts_n, &g_n)?;
    disc_grads.add_assign(&grads_n)?;
    Ok(DiscriminatorPass {
        l_d,
        disc_grads,
        d_rel_base,
        d_rel_novel,
        base_scores: acts_b.outputs.last().cloned().unwrap_or_else(|| Matrix::zeros(0, 0)),
        novel_scores: acts_n.outputs.last().cloned().unwrap_or_else(|| Matrix::zeros(0, 0)),
    })
}

/// Generator side for fixed forward passes: `L_G = −β·L_D + relation CE(base)`.
///
/// Returns `(L_G, relation CE, L_D, grads)`. With `β = 0` the discriminator is
/// not consulted at all and the gradient is exactly the relation-CE gradient.
pub(crate) fn generator_step(
    model: &SimNetModel,
    disc: &Discriminator,
    fwd_base: &RelationForward,
    fwd_novel: &RelationForward,
    base_labels: &PairLabelMatrix,
    beta: f64,
) -> Result<(f64, f64, Option<f64>, SimNetGrads)> {
    let mask = PairMask::off_diagonal(fwd_base.m());
    let (ce, d_scores) = relation_loss(&fwd_base.scores, base_labels, &mask)?;
    if beta == 0.0 {
        let grads = relation_backward(model, fwd_base, &d_scores, None)?;
        return Ok((ce, ce, None, grads));
    }
    let pass = discriminator_pass(disc, &fwd_base.relation, &fwd_novel.relation)?;
    let mut d_rb = pass.d_rel_base;
    d_rb.scale(-beta);
    let mut d_rn = pass.d_rel_novel;
    d_rn.scale(-beta);
    let mut grads = relation_backward(model, fwd_base, &d_scores, Some(&d_rb))?;
    let zero = Matrix::zeros(fwd_novel.m(), fwd_novel.m());
    let grads_n = relation_backward(model, fwd_novel, &zero, Some(&d_rn))?;
    for (a, b) in grads.tensors_mut().into_iter().zip(grads_n.tensors()) {
        a.add_assign(b)?;
    }
    Ok((-beta * pass.l_d + ce, ce, Some(pass.l_d), grads))
}

/// Both adversarial objectives evaluated at the current parameters.
#[derive(Clone, Debug)]
pub struct AdversarialLosses {
    pub l_d: f64,
    pub l_g: f64,
    pub relation_ce: f64,
    /// dL_D / d discriminator parameters (generator frozen).
    pub disc_grads: MlpGrads,
    /// dL_G / d similarity-network parameters (discriminator frozen).
    pub simnet_grads: SimNetGrads,
}

pub fn adversarial_losses(
    model: &SimNetModel,
    disc: &Discriminator,
    base: &PairBatch,
    novel: &PairBatch,
    beta: f64,
) -> Result<AdversarialLosses> {
    let fwd_b = relation_forward(model, &base.features)?;
    let fwd_n = relation_forward(model, &novel.features)?;
    let pass = discriminator_pass(disc, &fwd_b.relation, &fwd_n.relation)?;
    let (l_g, relation_ce, _, simnet_grads) = generator_step(model, disc, &fwd_b, &fwd_n, &base.pair_labels(), beta)?;
    Ok(AdversarialLosses {
        l_d: pass.l_d,
        l_g,
        relation_ce,
        disc_grads: pass.disc_grads,
        simnet_grads,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::{Layer, MlpParams};

    #[test]
    fn half_scores_give_ln2() {
        let scores = Matrix::filled(3, 3, 0.5);
        let labels = PairLabelMatrix::from_labels(&[0, 1, 0]);
        let (l, _) = relation_loss(&scores, &labels, &PairMask::all(3)).unwrap();
        assert!((l - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn perfect_scores_hit_clamp_floor() {
        let labels = PairLabelMatrix::from_labels(&[0, 1, 0, 1]);
        let scores = labels.matrix().clone();
        let (l, _) = relation_loss(&scores, &labels, &PairMask::all(4)).unwrap();
        assert!((l + (1.0f64 - 1e-7).ln()).abs() < 1e-15);
    }

    #[test]
    fn two_by_two_hand_value() {
        let scores = Matrix::from_rows(&[[0.9, 0.2], [0.3, 0.8]]).unwrap();
        let labels = PairLabelMatrix::from_labels(&[7, 7]);
        let (l, _) = relation_loss(&scores, &labels, &PairMask::all(2)).unwrap();
        let expect = -(0.9f64.ln() + 0.2f64.ln() + 0.3f64.ln() + 0.8f64.ln()) / 4.0;
        assert!((l - expect).abs() < 1e-15);
        assert!((l - 0.7855).abs() < 1e-4);
    }

    #[test]
    fn empty_mask_rejected() {
        let r = relation_loss(
            &Matrix::filled(1, 1, 0.5),
            &PairLabelMatrix::from_labels(&[0]),
            &PairMask::off_diagonal(1),
        );
        assert!(matches!(r, Err(Error::Config(_))));
    }

    #[test]
    fn neutral_discriminator_gives_two_ln_half() {
        let disc = Discriminator {
            mlp: MlpParams::from_layers(vec![Layer::zeros(4, 1, crate::numcore::Activation::Sigmoid)]).unwrap(),
        };
        let rb = Matrix::filled(9, 4, 0.3);
        let rn = Matrix::filled(9, 4, -0.1);
        let pass = discriminator_pass(&disc, &rb, &rn).unwrap();
        assert!((pass.l_d - 2.0 * 0.5f64.ln()).abs() < 1e-12);
        assert!((pass.l_d + 1.3863).abs() < 1e-4);
    }
}
