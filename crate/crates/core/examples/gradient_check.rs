//! Finite-difference checks of every differentiable loss on small random instances.
//!
//! cargo run --release --example gradient_check

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use simtrans::classifier::{full_loss, graph_reg_loss, weighted_ce_loss, ClassifierModel};
use simtrans::denoise::{Provenance, SimilarityMatrix};
use simtrans::numcore::{binary_ce, flatten, grad_check, softmax_ce, unflatten_into, Matrix, Parameters};
use simtrans::simnet::{
    adversarial_losses, relation_backward, relation_forward, relation_loss, Discriminator, PairBatch, PairMask,
    SimNetArch, SimNetModel,
};

fn random(rows: usize, cols: usize, lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> Matrix {
    Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.random_range(lo..hi)).collect()).unwrap()
}

// keeps relu units off their kinks
fn jitter<P: Parameters>(p: &mut P, rng: &mut ChaCha8Rng) {
    let v: Vec<f64> = flatten(p).iter().map(|x| x + rng.random_range(-0.3..0.3)).collect();
    unflatten_into(p, &v);
}

fn batch(labels: Vec<usize>, rng: &mut ChaCha8Rng) -> PairBatch {
    let mut categories = labels.clone();
    categories.sort_unstable();
    categories.dedup();
    PairBatch {
        features: random(labels.len(), 3, -1.5, 1.5, rng),
        labels,
        categories,
    }
}

fn report(name: &str, err: f64) {
    println!("{name:<22} max rel error {err:.2e}  {}", if err < 1e-3 { "ok" } else { "FAIL" });
}

fn main() -> simtrans::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let eps = 1e-6;

    let s = [0.3];
    let (_, g) = binary_ce(s[0], 1.0);
    report("binary CE", grad_check(&s, &[g], |p| Ok(binary_ce(p[0], 1.0).0), eps)?.max_rel_error);

    let logits = random(5, 4, -2.0, 2.0, &mut rng);
    let y = [0, 3, 1, 2, 2];
    let (_, g) = softmax_ce(&logits, &y)?;
    let r = grad_check(
        logits.as_slice(),
        g.as_slice(),
        |p| Ok(softmax_ce(&Matrix::from_vec(5, 4, p.to_vec())?, &y)?.0.iter().sum()),
        eps,
    )?;
    report("softmax CE", r.max_rel_error);

    let w: Vec<f64> = (0..5).map(|_| rng.random_range(0.0..2.0)).collect();
    let (_, g) = weighted_ce_loss(&logits, &y, &w)?;
    let r = grad_check(
        logits.as_slice(),
        g.as_slice(),
        |p| Ok(weighted_ce_loss(&Matrix::from_vec(5, 4, p.to_vec())?, &y, &w)?.0),
        eps,
    )?;
    report("weighted CE", r.max_rel_error);

    let emb = random(6, 3, -1.0, 1.0, &mut rng);
    let sim = SimilarityMatrix::new(random(6, 6, 0.0, 1.0, &mut rng), Provenance::SimNet)?;
    let reg = graph_reg_loss(&emb, &sim)?;
    let r = grad_check(
        emb.as_slice(),
        reg.grad.as_slice(),
        |p| Ok(graph_reg_loss(&Matrix::from_vec(6, 3, p.to_vec())?, &sim)?.normalized),
        eps,
    )?;
    report("graph regularization", r.max_rel_error);

    let mut clf = ClassifierModel::new(3, 5, 4, vec![0, 1, 2], &mut rng)?;
    jitter(&mut clf, &mut rng);
    let x = random(6, 3, -1.5, 1.5, &mut rng);
    let yc = [0, 1, 2, 0, 1, 2];
    let out = full_loss(&clf, &x, &yc, &w[..1].repeat(6), Some(&sim), 0.5)?;
    let r = grad_check(
        &flatten(&clf),
        &flatten(&out.grads),
        |p| {
            let mut m = clf.clone();
            unflatten_into(&mut m, p);
            Ok(full_loss(&m, &x, &yc, &w[..1].repeat(6), Some(&sim), 0.5)?.l_full)
        },
        eps,
    )?;
    report("full classifier loss", r.max_rel_error);

    let arch = SimNetArch {
        input_dim: 3,
        hidden: 6,
        embed: 4,
        relation: 5,
        disc_hidden: 4,
    };
    let mut model = SimNetModel::new(&arch, &mut rng)?;
    let mut disc = Discriminator::new(arch.relation, arch.disc_hidden, &mut rng)?;
    jitter(&mut model, &mut rng);
    jitter(&mut disc, &mut rng);
    let base = batch(vec![0, 0, 1, 1], &mut rng);
    let novel = batch(vec![5, 5, 6, 6], &mut rng);

    let labels = base.pair_labels();
    let mask = PairMask::off_diagonal(4);
    let fwd = relation_forward(&model, &base.features)?;
    let (_, d) = relation_loss(&fwd.scores, &labels, &mask)?;
    let grads = relation_backward(&model, &fwd, &d, None)?;
    let r = grad_check(
        &flatten(&model),
        &flatten(&grads),
        |p| {
            let mut m = model.clone();
            unflatten_into(&mut m, p);
            Ok(relation_loss(&relation_forward(&m, &base.features)?.scores, &labels, &mask)?.0)
        },
        eps,
    )?;
    report("relation CE", r.max_rel_error);

    let beta = 0.5;
    let adv = adversarial_losses(&model, &disc, &base, &novel, beta)?;
    let r = grad_check(
        &flatten(&disc),
        &flatten(&adv.disc_grads),
        |p| {
            let mut dd = disc.clone();
            unflatten_into(&mut dd, p);
            Ok(adversarial_losses(&model, &dd, &base, &novel, beta)?.l_d)
        },
        eps,
    )?;
    report("L_D (discriminator)", r.max_rel_error);
    let r = grad_check(
        &flatten(&model),
        &flatten(&adv.simnet_grads),
        |p| {
            let mut m = model.clone();
            unflatten_into(&mut m, p);
            Ok(adversarial_losses(&m, &disc, &base, &novel, beta)?.l_g)
        },
        eps,
    )?;
    report("L_G (similarity net)", r.max_rel_error);
    Ok(())
}
