use rand::Rng;

use crate::error::{Error, Result};
use crate::numcore::{mlp_backward, Activation, Activations, Layer, Matrix, MlpGrads, MlpParams, Parameters};

/// Layer widths of the similarity network and its discriminator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SimNetArch {
    pub input_dim: usize,
    pub hidden: usize,
    pub embed: usize,
    pub relation: usize,
    pub disc_hidden: usize,
}

impl SimNetArch {
    pub fn for_input(input_dim: usize) -> Self {
        SimNetArch {
            input_dim,
            hidden: 64,
            embed: 32,
            relation: 64,
            disc_hidden: 32,
        }
    }
}

/// Backbone MLP shared by the similarity network and the classifier: `D → hidden → E`, relu.
pub fn new_backbone<R: Rng + ?Sized>(input_dim: usize, hidden: usize, embed: usize, rng: &mut R) -> Result<MlpParams> {
    MlpParams::new(&[input_dim, hidden, embed], &[Activation::Relu, Activation::Relu], rng)
}

/// Backbone → enumeration → relation FC → sigmoid score.
#[derive(Clone, Debug, PartialEq)]
pub struct SimNetModel {
    pub backbone: MlpParams,
    /// Single layer `2E → R` with relu; its output is the relation feature.
    pub relation_fc: MlpParams,
    /// Single layer `R → 1` with sigmoid.
    pub score_head: MlpParams,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimNetGrads {
    pub backbone: MlpGrads,
    pub relation_fc: MlpGrads,
    pub score_head: MlpGrads,
}

impl SimNetModel {
    pub fn new<R: Rng + ?Sized>(arch: &SimNetArch, rng: &mut R) -> Result<Self> {
        let backbone = new_backbone(arch.input_dim, arch.hidden, arch.embed, rng)?;
        let relation_fc = MlpParams::new(&[2 * arch.embed, arch.relation], &[Activation::Relu], rng)?;
        let score_head = MlpParams::new(&[arch.relation, 1], &[Activation::Sigmoid], rng)?;
        SimNetModel::from_parts(backbone, relation_fc, score_head)
    }

    pub fn from_parts(backbone: MlpParams, relation_fc: MlpParams, score_head: MlpParams) -> Result<Self> {
        if relation_fc.layers.len() != 1 || score_head.layers.len() != 1 {
            return Err(Error::Config(
                "relation FC and score head must each be a single layer".into(),
            ));
        }
        if relation_fc.input_dim() != 2 * backbone.output_dim() {
            return Err(Error::shape(
                "SimNetModel",
                format!("relation input {}", 2 * backbone.output_dim()),
                relation_fc.input_dim(),
            ));
        }
        if score_head.input_dim() != relation_fc.output_dim() || score_head.output_dim() != 1 {
            return Err(Error::shape(
                "SimNetModel",
                format!("score head {}→1", relation_fc.output_dim()),
                format!("{}→{}", score_head.input_dim(), score_head.output_dim()),
            ));
        }
        if score_head.layers[0].activation != Activation::Sigmoid {
            return Err(Error::Config("score head must end in a sigmoid".into()));
        }
        Ok(SimNetModel {
            backbone,
            relation_fc,
            score_head,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.backbone.input_dim()
    }

    pub fn embed_dim(&self) -> usize {
        self.backbone.output_dim()
    }

    pub fn relation_dim(&self) -> usize {
        self.relation_fc.output_dim()
    }

    pub fn zero_grads(&self) -> SimNetGrads {
        SimNetGrads {
            backbone: self.backbone.zero_grads(),
            relation_fc: self.relation_fc.zero_grads(),
            score_head: self.score_head.zero_grads(),
        }
    }

    pub fn embed(&self, features: &Matrix) -> Result<Matrix> {
        if features.cols() != self.input_dim() {
            return Err(Error::shape("SimNet backbone", self.input_dim(), features.cols()));
        }
        self.backbone.predict(features)
    }

    /// Per-row halves of the relation layer: `a_i = Wa·e_i`, `b_j = Wb·e_j + bias`.
    ///
    /// `concat(e_i, e_j)·Wᵀ + bias == a_i + b_j`, so the `M²` pair rows never need
    /// to be materialized for the linear part.
    pub(crate) fn project(&self, embeddings: &Matrix) -> Result<Projections> {
        let layer = &self.relation_fc.layers[0];
        let e = self.embed_dim();
        if embeddings.cols() != e {
            return Err(Error::shape("relation projection", e, embeddings.cols()));
        }
        let (wa, wb) = split_columns(&layer.weight, e);
        let a = embeddings.matmul_t(&wa)?;
        let mut b = embeddings.matmul_t(&wb)?;
        let bias = layer.bias.as_slice();
        for r in 0..b.rows() {
            for (v, bb) in b.row_mut(r).iter_mut().zip(bias) {
                *v += bb;
            }
        }
        Ok(Projections {
            a,
            b,
            activation: layer.activation,
            head_w: self.score_head.layers[0].weight.as_slice().to_vec(),
            head_b: self.score_head.layers[0].bias.as_slice()[0],
        })
    }
}

impl Parameters for SimNetModel {
    fn tensors(&self) -> Vec<&Matrix> {
        let mut t = self.backbone.tensors();
        t.extend(self.relation_fc.tensors());
        t.extend(self.score_head.tensors());
        t
    }

    fn tensors_mut(&mut self) -> Vec<&mut Matrix> {
        let mut t = self.backbone.tensors_mut();
        t.extend(self.relation_fc.tensors_mut());
        t.extend(self.score_head.tensors_mut());
        t
    }
}

impl Parameters for SimNetGrads {
    fn tensors(&self) -> Vec<&Matrix> {
        let mut t = self.backbone.tensors();
        t.extend(self.relation_fc.tensors());
        t.extend(self.score_head.tensors());
        t
    }

    fn tensors_mut(&mut self) -> Vec<&mut Matrix> {
        let mut t = self.backbone.tensors_mut();
        t.extend(self.relation_fc.tensors_mut());
        t.extend(self.score_head.tensors_mut());
        t
    }
}

fn split_columns(w: &Matrix, at: usize) -> (Matrix, Matrix) {
    let mut left = Matrix::zeros(w.rows(), at);
    let mut right = Matrix::zeros(w.rows(), w.cols() - at);
    for r in 0..w.rows() {
        left.row_mut(r).copy_from_slice(&w.row(r)[..at]);
        right.row_mut(r).copy_from_slice(&w.row(r)[at..]);
    }
    (left, right)
}

pub(crate) struct Projections {
    pub a: Matrix,
    pub b: Matrix,
    pub activation: Activation,
    pub head_w: Vec<f64>,
    pub head_b: f64,
}

impl Projections {
    /// Writes the relation feature of ordered pair `(i, j)` into `out`.
    #[inline]
    pub fn relation_into(&self, i: usize, j: usize, out: &mut [f64]) {
        let (a, b) = (self.a.row(i), self.b.row(j));
        match self.activation {
            Activation::Relu => {
                for ((o, x), y) in out.iter_mut().zip(a).zip(b) {
                    *o = (x + y).max(0.0);
                }
            }
            act => {
                for ((o, x), y) in out.iter_mut().zip(a).zip(b) {
                    *o = act.apply(x + y);
                }
            }
        }
    }

    #[inline]
    pub fn score(&self, relation: &[f64]) -> f64 {
        let mut z = 0.0;
        for (w, h) in self.head_w.iter().zip(relation) {
            z += w * h;
        }
        crate::numcore::sigmoid(z + self.head_b)
    }
}

/// Concatenates every ordered pair of rows: row `i·M + j` is `concat(e_i, e_j)`.
pub fn enumerate_pairs(embeddings: &Matrix) -> Matrix {
    let (m, e) = embeddings.shape();
    let mut out = Matrix::zeros(m * m, 2 * e);
    for i in 0..m {
        for j in 0..m {
            let row = out.row_mut(i * m + j);
            row[..e].copy_from_slice(embeddings.row(i));
            row[e..].copy_from_slice(embeddings.row(j));
        }
    }
    out
}

/// Everything one forward pass over a batch keeps for backprop.
#[derive(Clone, Debug)]
pub struct RelationForward {
    pub backbone_acts: Activations,
    /// `M²` relation features, row `i·M + j`.
    pub relation: Matrix,
    /// `M x M` similarity scores `s_{i,j}`.
    pub scores: Matrix,
    pub backbone_passes: usize,
    pub head_passes: usize,
}

impl RelationForward {
    pub fn m(&self) -> usize {
        self.scores.rows()
    }

    pub fn embeddings(&self) -> &Matrix {
        self.backbone_acts.output()
    }
}

/// Scores every ordered pair of a batch: one backbone pass per image, one head pass per pair.
pub fn relation_forward(model: &SimNetModel, features: &Matrix) -> Result<RelationForward> {
    if features.cols() != model.input_dim() {
        return Err(Error::shape("relation_forward", model.input_dim(), features.cols()));
    }
    let m = features.rows();
    let backbone_acts = model.backbone.forward(features)?;
    let proj = model.project(backbone_acts.output())?;
    let r = model.relation_dim();
    let mut relation = Matrix::zeros(m * m, r);
    let mut scores = Matrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            let row = relation.row_mut(i * m + j);
            proj.relation_into(i, j, row);
            scores[(i, j)] = proj.score(row);
        }
    }
    Ok(RelationForward {
        backbone_acts,
        relation,
        scores,
        backbone_passes: m,
        head_passes: m * m,
    })
}

/// Backprop through the whole network.
///
/// `d_scores` is dL/ds (M x M); `d_relation`, when present, is an extra dL/dr
/// (M² x R) arriving from outside the score head (the discriminator path).
pub fn relation_backward(
    model: &SimNetModel,
    fwd: &RelationForward,
    d_scores: &Matrix,
    d_relation: Option<&Matrix>,
) -> Result<SimNetGrads> {
    let m = fwd.m();
    let r = model.relation_dim();
    let e = model.embed_dim();
    if d_scores.shape() != (m, m) {
        return Err(Error::shape("relation_backward", format!("{m}x{m}"), format!("{:?}", d_scores.shape())));
    }
    if let Some(d) = d_relation {
        if d.shape() != (m * m, r) {
            return Err(Error::shape(
                "relation_backward",
                format!("{}x{r}", m * m),
                format!("{:?}", d.shape()),
            ));
        }
    }
    let relu = model.relation_fc.layers[0].activation;
    let head_w = model.score_head.layers[0].weight.as_slice();
    let mut d_head_w = vec![0.0; r];
    let mut d_head_b = 0.0;
    let mut d_a = Matrix::zeros(m, r);
    let mut d_b = Matrix::zeros(m, r);
    let mut d_pre = vec![0.0; r];
    for i in 0..m {
        for j in 0..m {
            let p = i * m + j;
            let h = fwd.relation.row(p);
            let s = fwd.scores[(i, j)];
            let dz = d_scores[(i, j)] * s * (1.0 - s);
            d_head_b += dz;
            for k in 0..r {
                d_head_w[k] += dz * h[k];
                d_pre[k] = dz * head_w[k];
            }
            if let Some(extra) = d_relation {
                for (dp, x) in d_pre.iter_mut().zip(extra.row(p)) {
                    *dp += x;
                }
            }
            for (dp, &hv) in d_pre.iter_mut().zip(h) {
                *dp *= relu.derivative_from_output(hv);
            }
            for (x, dp) in d_a.row_mut(i).iter_mut().zip(&d_pre) {
                *x += dp;
            }
            for (x, dp) in d_b.row_mut(j).iter_mut().zip(&d_pre) {
                *x += dp;
            }
        }
    }
    let emb = fwd.embeddings();
    let d_wa = d_a.t_matmul(emb)?;
    let d_wb = d_b.t_matmul(emb)?;
    let mut d_w = Matrix::zeros(r, 2 * e);
    for k in 0..r {
        let row = d_w.row_mut(k);
        row[..e].copy_from_slice(d_wa.row(k));
        row[e..].copy_from_slice(d_wb.row(k));
    }
    let d_bias = d_b.sum_rows();
    let (wa, wb) = split_columns(&model.relation_fc.layers[0].weight, e);
    let mut d_emb = d_a.matmul(&wa)?;
    d_emb.add_assign(&d_b.matmul(&wb)?)?;
    let (backbone, _) = mlp_backward(&model.backbone, &fwd.backbone_acts, &d_emb)?;
    Ok(SimNetGrads {
        backbone,
        relation_fc: MlpGrads {
            layers: vec![crate::numcore::LayerGrad { weight: d_w, bias: d_bias }],
        },
        score_head: MlpGrads {
            layers: vec![crate::numcore::LayerGrad {
                weight: Matrix::from_vec(1, r, d_head_w)?,
                bias: Matrix::from_vec(1, 1, vec![d_head_b])?,
            }],
        },
    })
}

/// Domain discriminator on relation features: `R → hidden → 1`, sigmoid output
/// read as the probability that a relation feature comes from base categories.
#[derive(Clone, Debug, PartialEq)]
pub struct Discriminator {
    pub mlp: MlpParams,
}

impl Discriminator {
    pub fn new<R: Rng + ?Sized>(relation: usize, hidden: usize, rng: &mut R) -> Result<Self> {
        Ok(Discriminator {
            mlp: MlpParams::new(&[relation, hidden, 1], &[Activation::Relu, Activation::Sigmoid], rng)?,
        })
    }

    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        Ok(Discriminator {
            mlp: MlpParams::from_layers(layers)?,
        })
    }
}

impl Parameters for Discriminator {
    fn tensors(&self) -> Vec<&Matrix> {
        self.mlp.tensors()
    }

    fn tensors_mut(&mut self) -> Vec<&mut Matrix> {
        self.mlp.tensors_mut()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::{mlp_forward, Parameters};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
        Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn enumeration_small_case() {
        let e = Matrix::from_rows(&[[1.0], [2.0]]).unwrap();
        let p = enumerate_pairs(&e);
        assert_eq!(p, Matrix::from_rows(&[[1.0, 1.0], [1.0, 2.0], [2.0, 1.0], [2.0, 2.0]]).unwrap());
        let one = enumerate_pairs(&Matrix::from_rows(&[[3.0, 4.0]]).unwrap());
        assert_eq!(one.as_slice(), &[3.0, 4.0, 3.0, 4.0]);
    }

    #[test]
    fn enumeration_size() {
        let e = Matrix::zeros(100, 64);
        assert_eq!(enumerate_pairs(&e).shape(), (10_000, 128));
    }

    #[test]
    fn factored_relation_matches_explicit_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let model = SimNetModel::new(&SimNetArch::for_input(6), &mut rng).unwrap();
        let x = random(7, 6, &mut rng);
        let fwd = relation_forward(&model, &x).unwrap();
        let pairs = enumerate_pairs(fwd.embeddings());
        let explicit = mlp_forward(&model.relation_fc, &pairs).unwrap();
        let scores = model.score_head.predict(explicit.output()).unwrap();
        for (a, b) in fwd.relation.as_slice().iter().zip(explicit.output().as_slice()) {
            assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in fwd.scores.as_slice().iter().zip(scores.as_slice()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_score_head_gives_half() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut model = SimNetModel::new(&SimNetArch::for_input(4), &mut rng).unwrap();
        for t in model.score_head.tensors_mut() {
            t.scale(0.0);
        }
        let fwd = relation_forward(&model, &random(5, 4, &mut rng)).unwrap();
        assert!(fwd.scores.as_slice().iter().all(|&s| s == 0.5));
    }

    #[test]
    fn pass_counts_and_score_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let model = SimNetModel::new(&SimNetArch::for_input(4), &mut rng).unwrap();
        let fwd = relation_forward(&model, &random(100, 4, &mut rng)).unwrap();
        assert_eq!(fwd.backbone_passes, 100);
        assert_eq!(fwd.head_passes, 10_000);
        assert!(fwd.scores.as_slice().iter().all(|&s| s > 0.0 && s < 1.0));
    }

    #[test]
    fn wrong_feature_width() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let model = SimNetModel::new(&SimNetArch::for_input(4), &mut rng).unwrap();
        assert!(matches!(relation_forward(&model, &Matrix::zeros(3, 5)), Err(Error::Shape { .. })));
    }

    #[test]
    fn rejects_multi_layer_score_head() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = SimNetModel::new(&SimNetArch::for_input(4), &mut rng).unwrap();
        let deep = MlpParams::new(&[64, 8, 1], &[Activation::Relu, Activation::Sigmoid], &mut rng).unwrap();
        assert!(SimNetModel::from_parts(m.backbone, m.relation_fc, deep).is_err());
    }
}
