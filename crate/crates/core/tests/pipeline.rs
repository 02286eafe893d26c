use simtrans::classifier::Mode;
use simtrans::experiment::{
    ablation, prepare_data, run_on, run_pipeline, run_rows, ExperimentConfig, Toggles, ABLATION_ROWS,
};

const TINY: &str = "
n_base_categories = 4
n_novel_categories = 3
dim = 6
base_train_per_category = 12
base_test_per_category = 6
novel_train_per_category = 20
novel_test_per_category = 6
batch_categories = 3
batch_size = 12
simnet_epochs = 6
pretrain_epochs = 3
classifier_epochs = 6
classifier_batch_size = 16
eval_batches = 4
seeds = 0,1
";

fn tiny() -> ExperimentConfig {
    ExperimentConfig::parse(TINY).unwrap()
}

#[test]
fn identical_seeds_are_bit_identical() {
    let c = tiny();
    let a = run_pipeline(&c, 3).unwrap();
    let b = run_pipeline(&c, 3).unwrap();
    assert_eq!(a.accuracy, b.accuracy);
    assert_eq!(a.classifier.model, b.classifier.model);
    assert_eq!(a.simnet, b.simnet);
    assert_eq!(a.weights, b.weights);
    let other = run_pipeline(&c, 4).unwrap();
    assert_ne!(a.classifier.model, other.classifier.model);
}

#[test]
fn shared_rows_match_standalone_runs() {
    let c = tiny();
    let data = prepare_data(&c, 1).unwrap();
    let rows = run_rows(&c, &data, 1, &ABLATION_ROWS).unwrap();
    for (t, r) in [0, 3, 4].map(|k| (ABLATION_ROWS[k], &rows[k])) {
        let alone = run_on(&c.with_toggles(t), &data, 1).unwrap();
        assert_eq!(alone.accuracy, r.accuracy, "{}", t.label());
        assert_eq!(alone.classifier.model, r.classifier.model);
        assert_eq!(alone.config_hash, r.config_hash);
    }
}

#[test]
fn cls_row_needs_no_similarity() {
    let c = tiny().with_toggles(Toggles::ALL_OFF);
    let r = run_pipeline(&c, 0).unwrap();
    assert!(r.simnet.is_none() && r.weights.is_none() && r.weight_stats.is_empty());
    assert!(r.classifier.log.iter().all(|e| e.l_reg_raw == 0.0));
}

#[test]
fn ablation_has_seven_rows_per_seed() {
    let c = tiny();
    let runs = ablation(&c).unwrap();
    assert_eq!(runs.len(), 7 * c.seeds.len());
    for w in runs.iter().filter(|r| r.toggles.use_weights) {
        let vw = w.weights.as_ref().unwrap();
        for s in &w.weight_stats {
            let mean = (s.clean_mean * s.n_clean as f64 + s.noisy_mean.unwrap_or(0.0) * s.n_noisy as f64)
                / (s.n_clean + s.n_noisy) as f64;
            assert!((mean - 1.0).abs() < 1e-9);
        }
        assert_eq!(vw.per_row.len(), 3 * 20);
    }
}

#[test]
fn loss_decomposition_holds_at_every_epoch() {
    let c = tiny().with_toggles(Toggles { use_adversarial: false, ..Toggles::ALL_ON });
    let r = run_pipeline(&c, 2).unwrap();
    for e in &r.classifier.log {
        assert!((e.l_full - (e.l_cls_w + c.classifier.alpha * e.l_reg_norm)).abs() < 1e-12);
    }
}

#[test]
fn generalized_mode_scores_base_and_novel() {
    let mut c = tiny().with_toggles(Toggles::ALL_OFF);
    c.classifier.mode = Mode::Generalized;
    let r = run_pipeline(&c, 0).unwrap();
    assert_eq!(r.classifier.model.n_classes(), 7);
    assert!(r.accuracy >= 0.0 && r.accuracy <= 100.0);
}
