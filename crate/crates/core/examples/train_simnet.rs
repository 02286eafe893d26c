//! Trains the similarity network on clean base categories and compares its
//! pair-level metrics on base-test and novel-test pairs.
//!
//! cargo run --release --example train_simnet -- [--adversarial]

use simtrans::experiment::{prepare_data, train_similarity, transfer_metrics, ExperimentConfig};
use simtrans::simnet::random_guess_metrics;

fn main() -> simtrans::Result<()> {
    let config = ExperimentConfig {
        use_adversarial: std::env::args().any(|a| a == "--adversarial"),
        ..ExperimentConfig::default()
    };
    let seed = 0;
    let data = prepare_data(&config, seed)?;
    let (model, log) = train_similarity(&config, &data, seed)?;
    for e in log.iter().filter(|e| e.epoch % 50 == 0 || e.epoch + 1 == log.len()) {
        print!("epoch {:>3}  relation CE {:.4}", e.epoch, e.relation_ce);
        if let (Some(d), Some(g)) = (e.l_d, e.l_g) {
            print!("  L_D {d:.4}  L_G {g:.4}");
        }
        println!();
    }
    let (base, novel) = transfer_metrics(&config, &model, &data, seed)?;
    let shape = simtrans::experiment::common_shape(&config, &data.base_test, &data.novel_test)?;
    let rand = random_guess_metrics(shape.similar_fraction_off_diagonal());
    println!("{:<12} {:>8} {:>8} {:>8} {:>10}", "", "sim P", "sim R", "sim F1", "dissim F1");
    for (name, m) in [("random", rand), ("base test", base), ("novel test", novel)] {
        println!(
            "{name:<12} {:>8.1} {:>8.1} {:>8.1} {:>10.1}",
            m.similar.precision, m.similar.recall, m.similar.f1, m.dissimilar.f1
        );
    }
    Ok(())
}
