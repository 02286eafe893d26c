//! Plain cross-entropy vs SimTrans across noise ratios 10%..40%.
//!
//! cargo run --release --example noise_sweep -- [key=value ...]

use simtrans::experiment::{noise_gaps, noise_study, ExperimentConfig};

fn main() -> simtrans::Result<()> {
    let mut config = ExperimentConfig {
        seeds: vec![0, 1],
        use_adversarial: false,
        ..ExperimentConfig::default()
    };
    for arg in std::env::args().skip(1) {
        let (k, v) = arg.split_once('=').unwrap_or((&arg, ""));
        config.set(k, v)?;
    }
    let gaps = noise_gaps(&noise_study(&config)?)?;
    print!("{}", gaps.to_csv());
    Ok(())
}
