use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::numcore::{flatten, grad_check, unflatten_into, Matrix, SgdConfig};
use crate::rng::{substream, Stream};
use crate::synthdata::LabeledView;

fn small_arch() -> SimNetArch {
    SimNetArch {
        input_dim: 3,
        hidden: 6,
        embed: 4,
        relation: 5,
        disc_hidden: 4,
    }
}

fn batch(labels: Vec<usize>, seed: u64) -> PairBatch {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = labels.len();
    let features = Matrix::from_vec(m, 3, (0..m * 3).map(|_| rng.random_range(-1.5..1.5)).collect()).unwrap();
    let mut categories = labels.clone();
    categories.sort_unstable();
    categories.dedup();
    PairBatch {
        features,
        labels,
        categories,
    }
}

fn flat_grads(g: &SimNetGrads) -> Vec<f64> {
    flatten(g)
}

/// Random offsets on every parameter, biases included, so no unit sits exactly
/// on a relu kink (zero biases and all-zero embeddings would put it there).
fn jitter<P: crate::numcore::Parameters>(p: &mut P, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v: Vec<f64> = flatten(p).iter().map(|x| x + rng.random_range(-0.3..0.3)).collect();
    unflatten_into(p, &v);
}

#[test]
fn relation_loss_gradient_matches_finite_differences() {
    let mut model = SimNetModel::new(&small_arch(), &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
    jitter(&mut model, 1);
    let b = batch(vec![0, 1, 0, 1], 12);
    let labels = b.pair_labels();
    let mask = PairMask::off_diagonal(4);
    let fwd = relation_forward(&model, &b.features).unwrap();
    let (_, d_scores) = relation_loss(&fwd.scores, &labels, &mask).unwrap();
    let grads = relation_backward(&model, &fwd, &d_scores, None).unwrap();
    let report = grad_check(
        &flatten(&model),
        &flat_grads(&grads),
        |p| {
            let mut m = model.clone();
            unflatten_into(&mut m, p);
            let fwd = relation_forward(&m, &b.features)?;
            Ok(relation_loss(&fwd.scores, &labels, &mask)?.0)
        },
        1e-6,
    )
    .unwrap();
    assert!(report.passes(1e-4), "{report:?}");
}

#[test]
fn adversarial_gradients_match_finite_differences() {
    let arch = small_arch();
    let mut model = SimNetModel::new(&arch, &mut ChaCha8Rng::seed_from_u64(21)).unwrap();
    let mut disc = Discriminator::new(arch.relation, arch.disc_hidden, &mut ChaCha8Rng::seed_from_u64(22)).unwrap();
    jitter(&mut model, 2);
    jitter(&mut disc, 3);
    let base = batch(vec![3, 3, 8, 8], 23);
    let novel = batch(vec![1, 1, 2, 2], 24);
    let beta = 0.5;
    let losses = adversarial_losses(&model, &disc, &base, &novel, beta).unwrap();

    let ld = grad_check(
        &flatten(&disc),
        &flatten(&losses.disc_grads),
        |p| {
            let mut d = disc.clone();
            unflatten_into(&mut d, p);
            Ok(adversarial_losses(&model, &d, &base, &novel, beta)?.l_d)
        },
        1e-6,
    )
    .unwrap();
    assert!(ld.passes(1e-3), "L_D: {ld:?}");

    let lg = grad_check(
        &flatten(&model),
        &flat_grads(&losses.simnet_grads),
        |p| {
            let mut m = model.clone();
            unflatten_into(&mut m, p);
            Ok(adversarial_losses(&m, &disc, &base, &novel, beta)?.l_g)
        },
        1e-6,
    )
    .unwrap();
    assert!(lg.passes(1e-3), "L_G: {lg:?}");
    assert!((losses.l_g - (-beta * losses.l_d + losses.relation_ce)).abs() < 1e-12);
}

#[test]
fn zero_beta_gradient_is_relation_gradient() {
    let arch = small_arch();
    let model = SimNetModel::new(&arch, &mut ChaCha8Rng::seed_from_u64(31)).unwrap();
    let disc = Discriminator::new(arch.relation, arch.disc_hidden, &mut ChaCha8Rng::seed_from_u64(32)).unwrap();
    let base = batch(vec![0, 0, 1, 1], 33);
    let novel = batch(vec![5, 5, 6, 6], 34);
    let adv = adversarial_losses(&model, &disc, &base, &novel, 0.0).unwrap();
    let fwd = relation_forward(&model, &base.features).unwrap();
    let (ce, d) = relation_loss(&fwd.scores, &base.pair_labels(), &PairMask::off_diagonal(4)).unwrap();
    assert_eq!(adv.relation_ce, ce);
    assert_eq!(adv.l_g, ce);
    assert_eq!(adv.simnet_grads, relation_backward(&model, &fwd, &d, None).unwrap());
}

/// Three well separated clusters per split, `per` images each.
fn clusters(categories: &[usize], per: usize, spread: f64, seed: u64) -> LabeledView {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = 4;
    let mut data = Vec::new();
    let mut labels = Vec::new();
    for &c in categories {
        for _ in 0..per {
            for d in 0..dim {
                let center = if d == c % dim { 4.0 } else { 0.0 } + if d == (c / dim) % dim { -3.0 } else { 0.0 };
                data.push(center + spread * rng.random_range(-1.0..1.0));
            }
            labels.push(c);
        }
    }
    LabeledView::new(Matrix::from_vec(labels.len(), dim, data).unwrap(), labels).unwrap()
}

fn quick_config() -> SimNetConfig {
    SimNetConfig {
        hidden: 16,
        embed: 8,
        relation: 16,
        disc_hidden: 8,
        batch_categories: 4,
        batch_size: 40,
        epochs: 8,
        pretrain_epochs: 2,
        ..SimNetConfig::default()
    }
}

#[test]
fn zero_learning_rate_leaves_parameters() {
    let base = clusters(&[0, 1, 2, 3, 5], 12, 0.3, 1);
    let config = SimNetConfig {
        sgd: SgdConfig {
            learning_rate: 0.0,
            momentum: 0.9,
            weight_decay: 1e-4,
        },
        pretrain_backbone: false,
        ..quick_config()
    };
    let trained = train_simnet(&base, None, &config, 7).unwrap();
    let init = SimNetModel::new(&config.arch(4), &mut substream(7, Stream::SimnetInit)).unwrap();
    assert_eq!(trained.model, init);
}

#[test]
fn training_is_deterministic() {
    let base = clusters(&[0, 1, 2, 3, 5], 12, 0.3, 2);
    let novel = clusters(&[6, 7], 12, 0.3, 3);
    let config = quick_config();
    let a = train_simnet(&base, Some(&novel), &config, 9).unwrap();
    let b = train_simnet(&base, Some(&novel), &config, 9).unwrap();
    assert_eq!(a.model, b.model);
    assert_eq!(a.log, b.log);
    let c = train_simnet(&base, Some(&novel), &config, 10).unwrap();
    assert_ne!(a.model, c.model);
}

#[test]
fn zero_beta_matches_plain_training() {
    let base = clusters(&[0, 1, 2, 3, 5], 12, 0.3, 4);
    let novel = clusters(&[6, 7], 12, 0.3, 5);
    let config = SimNetConfig {
        beta: 0.0,
        pretrain_backbone: false,
        ..quick_config()
    };
    let plain = train_simnet(&base, None, &config, 3).unwrap();
    let adv = train_simnet(&base, Some(&novel), &config, 3).unwrap();
    assert_eq!(plain.model, adv.model);
    for (p, a) in plain.log.iter().zip(&adv.log) {
        assert_eq!(p.relation_ce, a.relation_ce);
    }
}

#[test]
fn separable_toy_problem_is_learned() {
    let train = clusters(&[1, 6], 50, 0.5, 6);
    let test = clusters(&[1, 6], 20, 0.5, 7);
    let config = SimNetConfig {
        epochs: 50,
        ..SimNetConfig::default()
    };
    let trained = train_simnet(&train, None, &config, 1).unwrap();
    let first = trained.log.first().unwrap().relation_ce;
    let last = trained.log.last().unwrap().relation_ce;
    assert!(last < first);
    let eval = EvalConfig::new(BatchShape::new(2, 40).unwrap());
    let m = eval_pairs(&trained.model, &test, &eval, &mut substream(1, Stream::Eval)).unwrap();
    assert!(m.similar.f1 > 95.0, "{m:?}");
}

#[test]
fn empty_base_rejected() {
    let r = train_simnet(&LabeledView::empty(4), None, &quick_config(), 0);
    assert!(r.is_err());
}
