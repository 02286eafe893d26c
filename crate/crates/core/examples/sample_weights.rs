//! Turns transferred similarities into per-image weights for the noisy novel
//! set and checks them against the hidden ground truth.
//!
//! cargo run --release --example sample_weights

use simtrans::denoise::view_sample_weights;
use simtrans::experiment::{prepare_data, train_similarity, weight_diagnostics, ExperimentConfig};

fn main() -> simtrans::Result<()> {
    let config = ExperimentConfig {
        use_adversarial: false,
        ..ExperimentConfig::default()
    };
    let data = prepare_data(&config, 0)?;
    let (model, _) = train_similarity(&config, &data, 0)?;
    let weights = view_sample_weights(&model, &data.novel_train)?;

    for d in weight_diagnostics(&weights.entries, &data.dataset)? {
        let s = d.stats;
        println!(
            "category {:>2}: clean mean {:.3} ({}), noisy mean {:.3} ({})",
            s.category,
            s.clean_mean,
            s.n_clean,
            s.noisy_mean.unwrap_or(f64::NAN),
            s.n_noisy
        );
        let show = |list: &[simtrans::experiment::RankedImage]| {
            list.iter()
                .map(|r| format!("{:.2}{}", r.weight, if r.noisy { format!("[{}]", r.noise_kind) } else { String::new() }))
                .collect::<Vec<_>>()
                .join(" ")
        };
        println!("    top {}   bottom {}", show(&d.top), show(&d.bottom));
    }
    Ok(())
}
