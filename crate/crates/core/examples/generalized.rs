//! Generalized setting: the test set mixes base and novel categories and the
//! classifier trains on clean base plus noisy novel data with class-balanced loss.
//!
//! cargo run --release --example generalized

use simtrans::classifier::Mode;
use simtrans::experiment::{prepare_data, run_rows, ExperimentConfig, Toggles};

fn main() -> simtrans::Result<()> {
    let mut config = ExperimentConfig {
        use_adversarial: false,
        ..ExperimentConfig::default()
    };
    config.classifier.mode = Mode::Generalized;
    let rows = [
        Toggles::ALL_OFF,
        Toggles {
            use_adversarial: false,
            ..Toggles::ALL_ON
        },
    ];
    for seed in [0, 1] {
        let data = prepare_data(&config, seed)?;
        for run in run_rows(&config, &data, seed, &rows)? {
            println!(
                "seed {seed} {:<4} accuracy on {} base + novel test images: {:.2}%",
                run.toggles.label(),
                data.base_test.len() + data.novel_test.len(),
                run.accuracy
            );
        }
    }
    Ok(())
}
