//! Trains the novel-category classifier with plain cross-entropy and with
//! transferred weights and graph regularization, on the same noisy data.
//!
//! cargo run --release --example train_classifier

use simtrans::classifier::{evaluate_accuracy, train_classifier, ClassifierData};
use simtrans::denoise::view_sample_weights;
use simtrans::experiment::{prepare_data, train_similarity, ExperimentConfig};

fn main() -> simtrans::Result<()> {
    let config = ExperimentConfig {
        use_adversarial: false,
        ..ExperimentConfig::default()
    };
    let seed = 1;
    let data = prepare_data(&config, seed)?;
    let (simnet, _) = train_similarity(&config, &data, seed)?;
    let weights = view_sample_weights(&simnet, &data.novel_train)?;

    let plain = ClassifierData {
        test: Some(&data.novel_test),
        ..ClassifierData::new(&data.novel_train)
    };
    let full = ClassifierData {
        weights: Some(&weights.per_row),
        similarity: Some(&simnet),
        ..plain
    };
    for (name, inputs) in [("Cls", plain), ("W+R", full)] {
        let trained = train_classifier(&inputs, &config.classifier, seed)?;
        for e in trained.log.iter().filter(|e| e.epoch % 40 == 0) {
            println!(
                "{name:<4} epoch {:>3}  L_full {:.4}  L_reg {:.4}  train {:.1}%  test {:.1}%",
                e.epoch,
                e.l_full,
                e.l_reg_norm,
                e.train_acc,
                e.test_acc.unwrap_or(f64::NAN)
            );
        }
        println!("{name:<4} final test accuracy {:.2}%", evaluate_accuracy(&trained.model, &data.novel_test)?);
    }
    Ok(())
}
