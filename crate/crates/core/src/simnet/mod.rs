//! Pairwise similarity network: backbone, enumeration layer, relation head,
//! balanced batches, plain and adversarial training, pair-level evaluation.

mod baseline;
mod batch;
mod checkpoint;
mod loss;
mod metrics;
mod model;
mod train;

pub use baseline::{baseline_similarity, BaselineKind, EUCLIDEAN_EPS};
pub use batch::{sample_balanced_batch, BatchShape, PairBatch, PairLabelMatrix, PairMask};
pub use checkpoint::Checkpoint;
pub use loss::{adversarial_losses, discriminator_pass, relation_loss, AdversarialLosses, DiscriminatorPass};
pub use metrics::{
    eval_pairs, f1_score, random_guess_metrics, ClassMetrics, ConstantScorer, EvalConfig, OracleScorer, PairMetrics,
    PairScorer, RandomScorer,
};
pub use model::{
    enumerate_pairs, new_backbone, relation_backward, relation_forward, Discriminator, RelationForward, SimNetArch,
    SimNetGrads, SimNetModel,
};
pub use train::{
    pretrain_backbone, train_simnet, write_simnet_log, SimNetConfig, SimNetEpoch, TrainedSimNet, SIMNET_LOG_HEADER,
};

#[cfg(test)]
mod tests;
