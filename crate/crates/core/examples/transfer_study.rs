//! Pair metrics on base vs novel categories, and the classifier supported by
//! similarities from different sources (Novel, Novel+Base, Base) and types
//! (Euclidean, Cosine, SimNet), with the ground-truth oracle as a ceiling.
//!
//! cargo run --release --example transfer_study -- [key=value ...]

use simtrans::experiment::{summarize, transfer_study, ExperimentConfig};

fn main() -> simtrans::Result<()> {
    let mut config = ExperimentConfig {
        seeds: vec![0],
        ..ExperimentConfig::default()
    };
    for arg in std::env::args().skip(1) {
        let (k, v) = arg.split_once('=').unwrap_or((&arg, ""));
        config.set(k, v)?;
    }
    let study = transfer_study(&config)?;
    let pairs = summarize(&study.pairs, &["source", "split"], &["similar_f1", "dissimilar_f1"])?;
    print!("{}", pairs.to_csv());
    println!();
    let sources = summarize(&study.sources, &["source", "similarity"], &["accuracy"])?;
    print!("{}", sources.to_csv());
    Ok(())
}
