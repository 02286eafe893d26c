//! Novel-category classifier: weighted cross-entropy plus graph regularization
//! on the backbone embedding, with a generalized mode over base and novel classes.

mod loss;
mod train;

pub use loss::{class_balance_weights, full_loss, graph_reg_loss, weighted_ce_loss, FullLoss, GraphReg};
pub use train::{
    evaluate_accuracy, train_classifier, write_training_log, ClassifierConfig, ClassifierData, EpochLog, Mode,
    TrainedClassifier, TRAINING_LOG_HEADER,
};

use rand::Rng;

use crate::error::{Error, Result};
use crate::numcore::{argmax, Activation, Matrix, MlpParams, Parameters};
use crate::simnet::{new_backbone, Checkpoint};

/// Backbone `h(·)` followed by a linear head over `classes`.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassifierModel {
    pub backbone: MlpParams,
    pub head: MlpParams,
    /// Category id of each output unit, ascending.
    pub classes: Vec<usize>,
}

impl ClassifierModel {
    pub fn new<R: Rng + ?Sized>(
        input_dim: usize,
        hidden: usize,
        embed: usize,
        classes: Vec<usize>,
        rng: &mut R,
    ) -> Result<Self> {
        let backbone = new_backbone(input_dim, hidden, embed, rng)?;
        let head = MlpParams::new(&[embed, classes.len()], &[Activation::Identity], rng)?;
        ClassifierModel::from_parts(backbone, head, classes)
    }

    pub fn from_parts(backbone: MlpParams, head: MlpParams, classes: Vec<usize>) -> Result<Self> {
        if classes.is_empty() {
            return Err(Error::Config("classifier needs at least one class".into()));
        }
        if !classes.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Config("class ids must be strictly ascending".into()));
        }
        if head.input_dim() != backbone.output_dim() {
            return Err(Error::shape("ClassifierModel", backbone.output_dim(), head.input_dim()));
        }
        if head.output_dim() != classes.len() {
            return Err(Error::shape("ClassifierModel classes", classes.len(), head.output_dim()));
        }
        Ok(ClassifierModel { backbone, head, classes })
    }

    pub fn input_dim(&self) -> usize {
        self.backbone.input_dim()
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    /// Output index of a category id.
    pub fn class_index(&self, category: usize) -> Option<usize> {
        self.classes.binary_search(&category).ok()
    }

    pub fn logits(&self, features: &Matrix) -> Result<Matrix> {
        self.head.predict(&self.backbone.predict(features)?)
    }

    /// Predicted category id per row; ties go to the lowest output index.
    pub fn predict(&self, features: &Matrix) -> Result<Vec<usize>> {
        let logits = self.logits(features)?;
        Ok((0..logits.rows()).map(|r| self.classes[argmax(logits.row(r))]).collect())
    }
}

impl ClassifierModel {
    /// Backbone and head tensors plus a `classes` row holding the category ids.
    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut c = Checkpoint::default();
        c.push_mlp("backbone", &self.backbone);
        c.push_mlp("head", &self.head);
        let ids: Vec<f64> = self.classes.iter().map(|&k| k as f64).collect();
        c.tensors.push(("classes".into(), Matrix::row_vector(&ids)));
        c
    }

    pub fn from_checkpoint(c: &Checkpoint) -> Result<Self> {
        let ids = c
            .get("classes")
            .ok_or_else(|| Error::Config("checkpoint has no `classes` tensor".into()))?;
        let classes = ids
            .as_slice()
            .iter()
            .map(|&v| {
                if v >= 0.0 && v.fract() == 0.0 {
                    Ok(v as usize)
                } else {
                    Err(Error::Config(format!("invalid class id {v}")))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        ClassifierModel::from_parts(
            c.mlp("backbone", |_, _| Activation::Relu)?,
            c.mlp("head", |_, _| Activation::Identity)?,
            classes,
        )
    }
}

impl Parameters for ClassifierModel {
    fn tensors(&self) -> Vec<&Matrix> {
        let mut t = self.backbone.tensors();
        t.extend(self.head.tensors());
        t
    }

    fn tensors_mut(&mut self) -> Vec<&mut Matrix> {
        let mut t = self.backbone.tensors_mut();
        t.extend(self.head.tensors_mut());
        t
    }
}

/// Gradients with the same layout as [`ClassifierModel`].
#[derive(Clone, Debug, PartialEq)]
pub struct ClassifierGrads {
    pub backbone: crate::numcore::MlpGrads,
    pub head: crate::numcore::MlpGrads,
}

impl Parameters for ClassifierGrads {
    fn tensors(&self) -> Vec<&Matrix> {
        let mut t = self.backbone.tensors();
        t.extend(self.head.tensors());
        t
    }

    fn tensors_mut(&mut self) -> Vec<&mut Matrix> {
        let mut t = self.backbone.tensors_mut();
        t.extend(self.head.tensors_mut());
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn class_layout() {
        let m = ClassifierModel::new(3, 5, 4, vec![15, 17, 19], &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(m.n_classes(), 3);
        assert_eq!(m.class_index(17), Some(1));
        assert_eq!(m.class_index(16), None);
        assert_eq!(m.logits(&Matrix::zeros(2, 3)).unwrap().shape(), (2, 3));
        assert!(ClassifierModel::new(3, 5, 4, vec![2, 1], &mut ChaCha8Rng::seed_from_u64(0)).is_err());
        assert!(ClassifierModel::new(3, 5, 4, vec![], &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }

    #[test]
    fn checkpoint_round_trip() {
        let m = ClassifierModel::new(3, 5, 4, vec![15, 17, 19], &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let text = m.to_checkpoint().to_text();
        let back = ClassifierModel::from_checkpoint(&Checkpoint::parse(&text).unwrap()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn constant_logits_predict_first_class() {
        let mut m = ClassifierModel::new(2, 3, 3, vec![4, 8], &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        for t in m.head.tensors_mut() {
            t.scale(0.0);
        }
        assert_eq!(m.predict(&Matrix::filled(3, 2, 1.0)).unwrap(), vec![4, 4, 4]);
    }
}
