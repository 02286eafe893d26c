use super::config::{ExperimentConfig, Toggles};
use crate::classifier::{
    evaluate_accuracy, train_classifier, ClassifierData, EpochLog, Mode, TrainedClassifier,
};
use crate::denoise::{view_sample_weights, OracleSimilarity, SimilaritySource, ViewWeights};
use crate::error::{Error, Result};
use crate::rng::Stream;
use crate::simnet::{eval_pairs, train_simnet, BatchShape, EvalConfig, PairMetrics, SimNetEpoch, SimNetModel};
use crate::synthdata::{generate_dataset, inject_web_noise, Dataset, GroundTruth, LabeledView, Split};

/// Noisy dataset of one seed with its training and test views.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub dataset: Dataset,
    pub base_train: LabeledView,
    pub base_test: LabeledView,
    pub novel_train: LabeledView,
    pub novel_test: LabeledView,
    /// Aligned with `novel_train` rows. Diagnostics and oracles only.
    pub novel_truth: Vec<GroundTruth>,
}

impl Prepared {
    pub fn from_dataset(dataset: Dataset) -> Prepared {
        Prepared {
            base_train: dataset.view(Split::BaseTrain),
            base_test: dataset.view(Split::BaseTest),
            novel_train: dataset.view(Split::NovelTrain),
            novel_test: dataset.view(Split::NovelTest),
            novel_truth: dataset.ground_truth(Split::NovelTrain),
            dataset,
        }
    }

    /// Ground-truth similarity over `novel_train` rows.
    pub fn oracle(&self) -> OracleSimilarity {
        OracleSimilarity {
            identities: self.novel_truth.iter().map(GroundTruth::content_category).collect(),
        }
    }
}

/// Generates and corrupts the dataset of `seed` (data and noise use their own substreams).
pub fn prepare_data(config: &ExperimentConfig, seed: u64) -> Result<Prepared> {
    let clean = generate_dataset(&crate::synthdata::DatasetSpec {
        seed,
        ..config.dataset.clone()
    })?;
    let noisy = inject_web_noise(&clean, &crate::synthdata::NoiseSpec { seed, ..config.noise })?;
    Ok(Prepared::from_dataset(noisy))
}

/// Mean normalized weight of clean and noisy images in one category.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CategoryWeightStats {
    pub category: usize,
    pub clean_mean: f64,
    /// `None` when the category has no noisy images.
    pub noisy_mean: Option<f64>,
    pub n_clean: usize,
    pub n_noisy: usize,
}

impl CategoryWeightStats {
    /// Noisy images weigh less than clean ones on average.
    pub fn noisy_down_weighted(&self) -> bool {
        self.noisy_mean.is_some_and(|n| n < self.clean_mean)
    }
}

pub fn weight_stats(weights: &ViewWeights, view: &LabeledView, truth: &[GroundTruth]) -> Vec<CategoryWeightStats> {
    let mut out = Vec::new();
    for (category, rows) in view.indices_by_category() {
        let (mut clean, mut noisy) = (Vec::new(), Vec::new());
        for r in rows {
            let w = weights.per_row[r];
            if truth[r].is_noisy(view.labels()[r]) {
                noisy.push(w);
            } else {
                clean.push(w);
            }
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        out.push(CategoryWeightStats {
            category,
            clean_mean: if clean.is_empty() { f64::NAN } else { mean(&clean) },
            noisy_mean: (!noisy.is_empty()).then(|| mean(&noisy)),
            n_clean: clean.len(),
            n_noisy: noisy.len(),
        });
    }
    out
}

/// Result of one end-to-end run.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub seed: u64,
    pub toggles: Toggles,
    pub config_hash: String,
    /// Top-1 accuracy on novel test (plus base test in generalized mode), percent.
    pub accuracy: f64,
    pub classifier: TrainedClassifier,
    pub simnet: Option<SimNetModel>,
    pub simnet_log: Vec<SimNetEpoch>,
    pub weights: Option<ViewWeights>,
    pub weight_stats: Vec<CategoryWeightStats>,
}

impl RunOutcome {
    pub fn classifier_log(&self) -> &[EpochLog] {
        &self.classifier.log
    }
}

/// Trains the similarity network on clean base data, with the novel set for
/// backbone pretraining and (if enabled) the adversarial game.
pub fn train_similarity(config: &ExperimentConfig, data: &Prepared, seed: u64) -> Result<(SimNetModel, Vec<SimNetEpoch>)> {
    let simnet_config = crate::simnet::SimNetConfig {
        adversarial: config.use_adversarial,
        ..config.simnet.clone()
    };
    let trained = train_simnet(&data.base_train, Some(&data.novel_train), &simnet_config, seed)?;
    Ok((trained.model, trained.log))
}

/// Classifier test set: novel test, plus base test in generalized mode.
pub fn test_view(config: &ExperimentConfig, data: &Prepared) -> Result<LabeledView> {
    match config.classifier.mode {
        Mode::WeakShot => Ok(data.novel_test.clone()),
        Mode::Generalized => data.base_test.concat(&data.novel_test),
    }
}

/// Trains and evaluates the classifier with sample weights and graph
/// regularization taken from `source` (as far as the toggles ask for them).
pub fn classify_with(
    config: &ExperimentConfig,
    data: &Prepared,
    source: Option<&dyn SimilaritySource>,
    seed: u64,
) -> Result<(TrainedClassifier, Option<ViewWeights>, f64)> {
    let t = config.toggles();
    if t.needs_simnet() && source.is_none() {
        return Err(Error::Config("weights or regularization requested without a similarity source".into()));
    }
    let weights = match (t.use_weights, source) {
        (true, Some(s)) => Some(view_sample_weights(s, &data.novel_train)?),
        _ => None,
    };
    let test = test_view(config, data)?;
    let inputs = ClassifierData {
        novel: &data.novel_train,
        weights: weights.as_ref().map(|w| w.per_row.as_slice()),
        similarity: source.filter(|_| t.use_reg),
        base: (config.classifier.mode == Mode::Generalized).then_some(&data.base_train),
        test: None,
    };
    let trained = train_classifier(&inputs, &config.classifier, seed)?;
    let accuracy = evaluate_accuracy(&trained.model, &test)?;
    Ok((trained, weights, accuracy))
}

/// One full pipeline: similarity network → weights → classifier → accuracy.
pub fn run_pipeline(config: &ExperimentConfig, seed: u64) -> Result<RunOutcome> {
    let data = prepare_data(config, seed)?;
    run_on(config, &data, seed)
}

/// [`run_pipeline`] on already prepared data.
pub fn run_on(config: &ExperimentConfig, data: &Prepared, seed: u64) -> Result<RunOutcome> {
    let mut runs = run_rows(config, data, seed, &[config.toggles()])?;
    Ok(runs.remove(0))
}

/// One run per toggle combination on shared data. Rows that agree on the
/// adversarial flag share one similarity network; since every stage draws from
/// its own substream, each row equals its standalone [`run_on`].
pub fn run_rows(config: &ExperimentConfig, data: &Prepared, seed: u64, rows: &[Toggles]) -> Result<Vec<RunOutcome>> {
    let mut cache: [Option<(SimNetModel, Vec<SimNetEpoch>)>; 2] = [None, None];
    let mut out = Vec::with_capacity(rows.len());
    for &toggles in rows {
        let config = config.with_toggles(toggles);
        let (simnet, simnet_log) = if toggles.needs_simnet() {
            let slot = &mut cache[toggles.use_adversarial as usize];
            if slot.is_none() {
                *slot = Some(train_similarity(&config, data, seed)?);
            }
            let (m, log) = slot.as_ref().expect("filled above");
            (Some(m.clone()), log.clone())
        } else {
            (None, Vec::new())
        };
        let (classifier, weights, accuracy) =
            classify_with(&config, data, simnet.as_ref().map(|m| m as &dyn SimilaritySource), seed)?;
        let weight_stats = weights
            .as_ref()
            .map(|w| weight_stats(w, &data.novel_train, &data.novel_truth))
            .unwrap_or_default();
        out.push(RunOutcome {
            seed,
            toggles,
            config_hash: config.hash(),
            accuracy,
            classifier,
            simnet,
            simnet_log,
            weights,
            weight_stats,
        });
    }
    Ok(out)
}

/// Pair metrics of a scorer on a clean split, with batches shrunk to fit it.
pub fn pair_metrics<S: crate::simnet::PairScorer + ?Sized>(
    config: &ExperimentConfig,
    scorer: &S,
    view: &LabeledView,
    shape: BatchShape,
    seed: u64,
    stream_index: u32,
) -> Result<PairMetrics> {
    let eval = EvalConfig {
        batches: config.eval_batches,
        ..EvalConfig::new(shape)
    };
    let mut rng = crate::rng::indexed_substream(seed, Stream::Eval, stream_index);
    eval_pairs(scorer, view, &eval, &mut rng)
}

/// The largest balanced shape both splits can supply, so base and novel
/// metrics share one similar-pair base rate.
pub fn common_shape(config: &ExperimentConfig, a: &LabeledView, b: &LabeledView) -> Result<BatchShape> {
    let sa = BatchShape::fit(a, config.simnet.batch_categories, config.simnet.batch_size)?;
    let sb = BatchShape::fit(b, config.simnet.batch_categories, config.simnet.batch_size)?;
    let cm = sa.categories.min(sb.categories);
    let per = sa.per_category().min(sb.per_category());
    BatchShape::new(cm, cm * per)
}


/// Pair metrics of `scorer` on base test and novel test with one common batch shape.
pub fn transfer_metrics<S: crate::simnet::PairScorer + ?Sized>(
    config: &ExperimentConfig,
    scorer: &S,
    data: &Prepared,
    seed: u64,
) -> Result<(PairMetrics, PairMetrics)> {
    let shape = common_shape(config, &data.base_test, &data.novel_test)?;
    Ok((
        pair_metrics(config, scorer, &data.base_test, shape, seed, 0)?,
        pair_metrics(config, scorer, &data.novel_test, shape, seed, 1)?,
    ))
}
