use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;

use super::loss::{class_balance_weights, full_loss};
use super::ClassifierModel;
use crate::denoise::SimilaritySource;
use crate::error::{Error, Result};
use crate::numcore::SgdConfig;
use crate::numcore::SgdState;
use crate::rng::{substream, Stream};
use crate::synthdata::LabeledView;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    WeakShot,
    /// Train on base and novel classes together with class-balanced loss weights.
    Generalized,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::WeakShot => "weakshot",
            Mode::Generalized => "generalized",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "weakshot" => Ok(Mode::WeakShot),
            "generalized" => Ok(Mode::Generalized),
            _ => Err(Error::Config(format!("unknown mode {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassifierConfig {
    pub hidden: usize,
    pub embed: usize,
    /// Weight of the graph regularizer.
    pub alpha: f64,
    pub sgd: SgdConfig,
    pub batch_size: usize,
    pub epochs: usize,
    pub use_weights: bool,
    pub use_reg: bool,
    pub mode: Mode,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            hidden: 64,
            embed: 32,
            alpha: 0.1,
            sgd: SgdConfig {
                learning_rate: 0.005,
                momentum: 0.9,
                weight_decay: 1e-4,
            },
            batch_size: 128,
            epochs: 200,
            use_weights: true,
            use_reg: true,
            mode: Mode::WeakShot,
        }
    }
}

/// Inputs to [`train_classifier`].
///
/// In generalized mode the training set is `base` rows followed by `novel`
/// rows; a [`SimilaritySource`] sees row indices in that order.
#[derive(Clone, Copy)]
pub struct ClassifierData<'a> {
    pub novel: &'a LabeledView,
    /// Normalized sample weight per `novel` row; required when `use_weights` is on.
    pub weights: Option<&'a [f64]>,
    /// Frozen similarity for the graph regularizer; required when `use_reg` is on.
    pub similarity: Option<&'a dyn SimilaritySource>,
    /// Clean base training images, used only in generalized mode.
    pub base: Option<&'a LabeledView>,
    /// Evaluated after every epoch for the log.
    pub test: Option<&'a LabeledView>,
}

impl<'a> ClassifierData<'a> {
    pub fn new(novel: &'a LabeledView) -> Self {
        ClassifierData {
            novel,
            weights: None,
            similarity: None,
            base: None,
            test: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub l_cls_w: f64,
    pub l_reg_raw: f64,
    pub l_reg_norm: f64,
    pub l_full: f64,
    pub train_acc: f64,
    pub test_acc: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct TrainedClassifier {
    pub model: ClassifierModel,
    pub log: Vec<EpochLog>,
}

pub fn train_classifier(data: &ClassifierData, config: &ClassifierConfig, seed: u64) -> Result<TrainedClassifier> {
    let novel = data.novel;
    if novel.is_empty() {
        return Err(Error::Config("novel training set is empty".into()));
    }
    if config.batch_size == 0 {
        return Err(Error::Config("batch size must be positive".into()));
    }
    if !(config.alpha >= 0.0) {
        return Err(Error::Config("alpha must be non-negative".into()));
    }
    let novel_weights: Vec<f64> = match (config.use_weights, data.weights) {
        (false, _) => vec![1.0; novel.len()],
        (true, Some(w)) if w.len() == novel.len() => w.to_vec(),
        (true, Some(w)) => return Err(Error::shape("sample weights", novel.len(), w.len())),
        (true, None) => return Err(Error::Config("use_weights is on but no sample weights were given".into())),
    };
    let similarity = match (config.use_reg, data.similarity) {
        (false, _) => None,
        (true, Some(s)) => Some(s),
        (true, None) => return Err(Error::Config("use_reg is on but no similarity network was given".into())),
    };

    let (train, mut weights) = match (config.mode, data.base) {
        (Mode::Generalized, Some(base)) if !base.is_empty() => {
            let mut w = vec![1.0; base.len()];
            w.extend_from_slice(&novel_weights);
            (base.concat(novel)?, w)
        }
        _ => (novel.clone(), novel_weights),
    };
    let classes = train.categories();
    let targets: Vec<usize> = train
        .labels()
        .iter()
        .map(|l| classes.binary_search(l).expect("label in class list"))
        .collect();
    if config.mode == Mode::Generalized {
        let mut counts = vec![0usize; classes.len()];
        for &t in &targets {
            counts[t] += 1;
        }
        let multipliers = class_balance_weights(&counts)?;
        for (w, &t) in weights.iter_mut().zip(&targets) {
            *w *= multipliers[t];
        }
    }

    let mut model = ClassifierModel::new(
        train.dim(),
        config.hidden,
        config.embed,
        classes,
        &mut substream(seed, Stream::ClassifierInit),
    )?;
    let mut sgd = SgdState::new(&model, config.sgd)?;
    let mut rng = substream(seed, Stream::ClassifierBatches);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut log = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let (mut cls, mut raw, mut norm, mut full) = (0.0, 0.0, 0.0, 0.0);
        let mut batches = 0usize;
        for rows in order.chunks(config.batch_size) {
            let x = train.features().select_rows(rows);
            let y: Vec<usize> = rows.iter().map(|&r| targets[r]).collect();
            let w: Vec<f64> = rows.iter().map(|&r| weights[r]).collect();
            let s = match similarity {
                Some(src) if rows.len() >= 2 => Some(src.similarity(&x, rows)?),
                _ => None,
            };
            let out = full_loss(&model, &x, &y, &w, s.as_ref(), config.alpha)?;
            if !out.l_full.is_finite() {
                return Err(Error::Numeric("train_classifier"));
            }
            sgd.step(&mut model, &out.grads)?;
            cls += out.l_cls;
            raw += out.l_reg_raw;
            norm += out.l_reg_norm;
            full += out.l_full;
            batches += 1;
        }
        let n = batches as f64;
        log.push(EpochLog {
            epoch,
            l_cls_w: cls / n,
            l_reg_raw: raw / n,
            l_reg_norm: norm / n,
            l_full: full / n,
            train_acc: evaluate_accuracy(&model, &train)?,
            test_acc: data.test.map(|t| evaluate_accuracy(&model, t)).transpose()?,
        });
    }
    Ok(TrainedClassifier { model, log })
}

/// Top-1 accuracy in percent. Labels outside the model's classes count as errors.
pub fn evaluate_accuracy(model: &ClassifierModel, test: &LabeledView) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::Config("empty test set".into()));
    }
    let predicted = model.predict(test.features())?;
    let correct = predicted.iter().zip(test.labels()).filter(|(p, l)| p == l).count();
    Ok(100.0 * correct as f64 / test.len() as f64)
}

pub const TRAINING_LOG_HEADER: &str = "epoch,L_cls_w,L_reg_raw,L_reg_norm,L_full,train_acc,test_acc";

/// CSV with one row per epoch; `test_acc` is empty when no test set was given.
pub fn write_training_log(log: &[EpochLog]) -> String {
    let mut out = String::from(TRAINING_LOG_HEADER);
    out.push('\n');
    for e in log {
        let test = e.test_acc.map(|t| t.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            e.epoch, e.l_cls_w, e.l_reg_raw, e.l_reg_norm, e.l_full, e.train_acc, test
        ));
    }
    out
}
