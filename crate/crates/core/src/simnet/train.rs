use rand::seq::SliceRandom;

use super::batch::{sample_balanced_batch, BatchShape};
use super::loss::{discriminator_pass, generator_step, relation_loss};
use super::model::{relation_backward, relation_forward, Discriminator, SimNetArch, SimNetModel};
use super::PairMask;
use crate::error::{Error, Result};
use crate::numcore::{mlp_backward, softmax_ce, Activation, MlpParams, SgdConfig, SgdState};
use crate::rng::{substream, Stream};
use crate::synthdata::LabeledView;

#[derive(Clone, Debug, PartialEq)]
pub struct SimNetConfig {
    pub hidden: usize,
    pub embed: usize,
    pub relation: usize,
    pub disc_hidden: usize,
    /// `C_m`: categories per balanced batch.
    pub batch_categories: usize,
    /// `M`: images per balanced batch.
    pub batch_size: usize,
    pub sgd: SgdConfig,
    pub epochs: usize,
    /// Weight of the adversarial term in `L_G`.
    pub beta: f64,
    /// Align base and novel relation features with a discriminator (needs a novel set).
    pub adversarial: bool,
    /// Initialize the backbone from a classifier trained on the novel set
    /// (only when a novel set is supplied).
    pub pretrain_backbone: bool,
    pub pretrain_epochs: usize,
    pub pretrain_sgd: SgdConfig,
    pub pretrain_batch_size: usize,
}

impl Default for SimNetConfig {
    fn default() -> Self {
        SimNetConfig {
            hidden: 64,
            embed: 32,
            relation: 64,
            disc_hidden: 32,
            batch_categories: 10,
            batch_size: 100,
            sgd: SgdConfig {
                learning_rate: 0.01,
                momentum: 0.9,
                weight_decay: 1e-4,
            },
            epochs: 300,
            beta: 0.1,
            adversarial: true,
            pretrain_backbone: true,
            pretrain_epochs: 50,
            pretrain_sgd: SgdConfig {
                learning_rate: 0.005,
                momentum: 0.9,
                weight_decay: 1e-4,
            },
            pretrain_batch_size: 128,
        }
    }
}

impl SimNetConfig {
    pub fn arch(&self, input_dim: usize) -> SimNetArch {
        SimNetArch {
            input_dim,
            hidden: self.hidden,
            embed: self.embed,
            relation: self.relation,
            disc_hidden: self.disc_hidden,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimNetEpoch {
    pub epoch: usize,
    pub relation_ce: f64,
    pub l_d: Option<f64>,
    pub l_g: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct TrainedSimNet {
    pub model: SimNetModel,
    pub discriminator: Option<Discriminator>,
    pub log: Vec<SimNetEpoch>,
}

/// Trains the similarity network on clean base categories.
///
/// The novel set, when given, is used for backbone pretraining and, if
/// `config.adversarial` is on, for the adversarial game: each iteration first
/// updates the discriminator on `L_D` (generator frozen), then the similarity
/// network on `L_G` (discriminator frozen). Novel pairs never enter the
/// relation loss.
pub fn train_simnet(
    base: &LabeledView,
    novel: Option<&LabeledView>,
    config: &SimNetConfig,
    seed: u64,
) -> Result<TrainedSimNet> {
    if base.is_empty() {
        return Err(Error::Config("base training set is empty".into()));
    }
    let arch = config.arch(base.dim());
    let mut model = SimNetModel::new(&arch, &mut substream(seed, Stream::SimnetInit))?;
    if let (Some(novel), true) = (novel, config.pretrain_backbone) {
        model.backbone = pretrain_backbone(model.backbone, novel, config, seed)?;
    }
    let base_shape = BatchShape::fit(base, config.batch_categories, config.batch_size)?;
    let iterations = base.len().div_ceil(base_shape.size).max(1);
    let mut batch_rng = substream(seed, Stream::SimnetBatches);
    let mut sgd = SgdState::new(&model, config.sgd)?;

    let mut adversary = match novel.filter(|_| config.adversarial) {
        Some(novel) => {
            let disc = Discriminator::new(arch.relation, arch.disc_hidden, &mut substream(seed, Stream::DiscInit))?;
            let disc_sgd = SgdState::new(&disc, config.sgd)?;
            let shape = BatchShape::fit(novel, config.batch_categories, config.batch_size)?;
            Some((disc, disc_sgd, shape, novel, substream(seed, Stream::SimnetNovelBatches)))
        }
        None => None,
    };

    let mut log = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let (mut ce_sum, mut ld_sum, mut lg_sum) = (0.0, 0.0, 0.0);
        for _ in 0..iterations {
            let batch = sample_balanced_batch(base, base_shape, &mut batch_rng)?;
            let fwd_b = relation_forward(&model, &batch.features)?;
            let labels = batch.pair_labels();
            match adversary.as_mut() {
                None => {
                    let mask = PairMask::off_diagonal(batch.len());
                    let (ce, d_scores) = relation_loss(&fwd_b.scores, &labels, &mask)?;
                    let grads = relation_backward(&model, &fwd_b, &d_scores, None)?;
                    sgd.step(&mut model, &grads)?;
                    ce_sum += ce;
                }
                Some((disc, disc_sgd, shape, novel, novel_rng)) => {
                    let novel_batch = sample_balanced_batch(novel, *shape, novel_rng)?;
                    let fwd_n = relation_forward(&model, &novel_batch.features)?;
                    // step 1: discriminator on L_D, generator frozen
                    let pass = discriminator_pass(disc, &fwd_b.relation, &fwd_n.relation)?;
                    disc_sgd.step(disc, &pass.disc_grads)?;
                    // step 2: similarity network on L_G, discriminator frozen
                    let (l_g, ce, l_d, grads) = generator_step(&model, disc, &fwd_b, &fwd_n, &labels, config.beta)?;
                    sgd.step(&mut model, &grads)?;
                    ce_sum += ce;
                    lg_sum += l_g;
                    ld_sum += l_d.unwrap_or(pass.l_d);
                }
            }
        }
        let n = iterations as f64;
        if !ce_sum.is_finite() {
            return Err(Error::Numeric("train_simnet"));
        }
        log.push(SimNetEpoch {
            epoch,
            relation_ce: ce_sum / n,
            l_d: adversary.as_ref().map(|_| ld_sum / n),
            l_g: adversary.as_ref().map(|_| lg_sum / n),
        });
    }
    Ok(TrainedSimNet {
        model,
        discriminator: adversary.map(|(d, ..)| d),
        log,
    })
}

/// Plain cross-entropy training of `backbone` + a throwaway linear head on `view`.
/// Also serves as the feature extractor for the distance-based baselines.
pub fn pretrain_backbone(backbone: MlpParams, view: &LabeledView, config: &SimNetConfig, seed: u64) -> Result<MlpParams> {
    let mut rng = substream(seed, Stream::Pretrain);
    let classes = view.categories();
    let targets: Vec<usize> = view
        .labels()
        .iter()
        .map(|l| classes.binary_search(l).expect("label in class list"))
        .collect();
    let head = MlpParams::new(&[backbone.output_dim(), classes.len()], &[Activation::Identity], &mut rng)?;
    let mut net = MlpParams {
        layers: backbone.layers.iter().chain(&head.layers).cloned().collect(),
    };
    let mut sgd = SgdState::new(&net, config.pretrain_sgd)?;
    let mut order: Vec<usize> = (0..view.len()).collect();
    let bs = config.pretrain_batch_size.max(1);
    for _ in 0..config.pretrain_epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(bs) {
            let x = view.features().select_rows(chunk);
            let y: Vec<usize> = chunk.iter().map(|&i| targets[i]).collect();
            let acts = net.forward(&x)?;
            let (_, mut g) = softmax_ce(acts.output(), &y)?;
            g.scale(1.0 / chunk.len() as f64);
            let (grads, _) = mlp_backward(&net, &acts, &g)?;
            sgd.step(&mut net, &grads)?;
        }
    }
    net.layers.truncate(backbone.layers.len());
    Ok(net)
}

pub const SIMNET_LOG_HEADER: &str = "epoch,relation_ce,L_D,L_G";

/// One CSV row per epoch; the adversarial columns are empty without a discriminator.
pub fn write_simnet_log(log: &[SimNetEpoch]) -> String {
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut out = String::from(SIMNET_LOG_HEADER);
    out.push('\n');
    for e in log {
        out.push_str(&format!("{},{},{},{}\n", e.epoch, e.relation_ce, opt(e.l_d), opt(e.l_g)));
    }
    out
}
